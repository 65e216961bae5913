#include "erkf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "erkf/io.hpp"

namespace erkf::app {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SigmaSample sigma_sample(double t, const char* system, const Mat& p) {
  const auto ex = linalg::singular_value_extrema(p);
  return {t, system, ex.sigma_max, ex.sigma_min};
}

}  // namespace

Rmse compute_rmse(const std::vector<nav::EstimateRecord>& records,
                  const std::vector<sim::TruthSample>& truth) {
  if (records.size() != truth.size()) {
    throw StructuralError("truth has " + std::to_string(truth.size()) + " samples for " +
                          std::to_string(records.size()) + " estimates");
  }
  Rmse out;
  double att_sq = 0.0, pos_sq = 0.0, hor_sq = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto& g = truth[i];
    if (r.t != g.t) throw StructuralError("truth timestamps do not match the IMU epochs");
    for (int k = 0; k < 3; ++k) {
      const double e = models::wrap_angle(r.attitude(k) - g.attitude(k));
      att_sq += e * e;
    }
    if (r.source != nav::Source::kErkfUpdate) continue;
    const double lat = g.pos_lla(0), alt = g.pos_lla(2);
    const double dn = (r.position(0) - lat) * (models::wgs84::meridian_radius(lat) + alt);
    const double de = (r.position(1) - g.pos_lla(1)) *
                      (models::wgs84::transverse_radius(lat) + alt) * std::cos(lat);
    const double dd = r.position(2) - alt;
    hor_sq += dn * dn + de * de;
    pos_sq += dn * dn + de * de + dd * dd;
    ++out.position_samples;
  }
  if (!records.empty()) out.attitude_rad = std::sqrt(att_sq / (3.0 * records.size()));
  if (out.position_samples > 0) {
    out.position_m = std::sqrt(pos_sq / out.position_samples);
    out.horizontal_m = std::sqrt(hor_sq / out.position_samples);
  }
  return out;
}

RunSummary run_pipeline(const std::vector<models::ImuSample>& imu,
                        const std::vector<models::GpsSample>& gps, const models::ModelConfig& cfg,
                        const RunOptions& options, const std::vector<sim::TruthSample>* truth) {
  linalg::FlopCounter counter;
  nav::NavOptions nav_opts = options.nav;
  if (options.count_flops) nav_opts.step.counter = &counter;
  nav::FusionRunner runner(gps, cfg, nav_opts);

  RunSummary summary;
  summary.records.reserve(imu.size());
  const auto start = Clock::now();
  for (const auto& sample : imu) {
    const auto epoch = runner.step(sample);
    summary.records.push_back(epoch.record);
    if (epoch.position_updated) ++summary.erkf_updates;
  }
  summary.wall_seconds = seconds_since(start);
  if (!imu.empty()) summary.mean_step_us = 1e6 * summary.wall_seconds / imu.size();
  if (options.count_flops) summary.flops = counter.total();
  if (truth) summary.rmse = compute_rmse(summary.records, *truth);
  return summary;
}

std::vector<ComparisonRow> compare_traces(const std::vector<SigmaSample>& givens,
                                          const std::vector<SigmaSample>& inverse) {
  if (givens.size() != inverse.size()) {
    throw StructuralError("backend traces differ in length (" + std::to_string(givens.size()) +
                          " vs " + std::to_string(inverse.size()) + ")");
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(givens.size());
  for (std::size_t i = 0; i < givens.size(); ++i) {
    const auto& a = givens[i];
    const auto& b = inverse[i];
    if (a.t != b.t || a.system != b.system) {
      throw StructuralError("backend traces diverge at entry " + std::to_string(i));
    }
    rows.push_back({a.t, a.system, a.sigma_max, b.sigma_max, a.sigma_min, b.sigma_min,
                    std::abs(a.sigma_max - b.sigma_max), std::abs(a.sigma_min - b.sigma_min)});
  }
  return rows;
}

ComparisonResult compare_backends(const std::vector<models::ImuSample>& imu,
                                  const std::vector<models::GpsSample>& gps,
                                  const models::ModelConfig& cfg, double threshold,
                                  linalg::Schedule schedule) {
  nav::NavOptions og{Backend::kGivens, StepOptions{schedule, nullptr}};
  nav::NavOptions oi{Backend::kInverse, StepOptions{schedule, nullptr}};
  nav::FusionRunner rg(gps, cfg, og);
  nav::FusionRunner ri(gps, cfg, oi);

  ComparisonResult result;
  result.threshold = threshold;
  std::vector<SigmaSample> tg, ti;
  auto record = [](std::vector<SigmaSample>& trace, const nav::FusionRunner& r,
                   const nav::FusionRunner::Epoch& e) {
    const auto& st = r.state();
    trace.push_back(sigma_sample(e.record.t, "attitude", st.att_filter.P_pred));
    if (e.position_updated) trace.push_back(sigma_sample(e.record.t, "position", st.pos_filter.P_pred));
  };
  for (const auto& sample : imu) {
    const auto eg = rg.step(sample);
    const auto ei = ri.step(sample);
    record(tg, rg, eg);
    record(ti, ri, ei);
    // Relative to the magnitude of each filter's state vector: the attitude
    // angles, and the position filter's (lat, lon, alt, velocity).
    Vec pg(6), pi(6);
    pg << eg.record.position, eg.record.velocity;
    pi << ei.record.position, ei.record.velocity;
    double d_att = 0.0;
    for (int k = 0; k < 3; ++k) {
      d_att = std::max(d_att, std::abs(models::wrap_angle(eg.record.attitude(k) - ei.record.attitude(k))));
    }
    d_att /= std::max(1.0, ei.record.attitude.cwiseAbs().maxCoeff());
    const double d_pos = (pg - pi).cwiseAbs().maxCoeff() / std::max(1.0, pi.cwiseAbs().maxCoeff());
    result.max_state_rel_diff = std::max({result.max_state_rel_diff, d_att, d_pos});
  }
  result.rows = compare_traces(tg, ti);
  for (const auto& row : result.rows) {
    result.max_delta = std::max({result.max_delta, row.dmax, row.dmin});
  }
  result.pass = result.max_delta < threshold;
  return result;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = std::string(io::kComparisonHeader) + "\n";
  for (const auto& r : rows) {
    out += io::format_real(r.t) + "," + r.system;
    for (double v : {r.smax_givens, r.smax_inv, r.smin_givens, r.smin_inv, r.dmax, r.dmin}) {
      out += "," + io::format_real(v);
    }
    out += '\n';
  }
  return out;
}

namespace {

// Median over `trials` of the mean time of one step, in milliseconds. Each
// trial repeats the step enough times to last about two milliseconds.
double time_step(const RandomInstance& inst, Backend backend, linalg::Schedule schedule,
                 int trials) {
  const StepOptions opts{schedule, nullptr};
  auto once = [&] { return erkf_step(backend, inst.model, inst.state, inst.z, opts); };
  auto start = Clock::now();
  once();
  const double first = seconds_since(start);
  const int reps = std::max(1, static_cast<int>(std::ceil(2e-3 / std::max(first, 1e-9))));
  std::vector<double> samples;
  for (int t = 0; t < trials; ++t) {
    start = Clock::now();
    for (int r = 0; r < reps; ++r) once();
    samples.push_back(1e3 * seconds_since(start) / reps);
  }
  return median(samples);
}

}  // namespace

BenchResult bench(const std::vector<Index>& sizes, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error("bench needs at least one trial");
  BenchResult result;
  for (Index m : sizes) {
    const ModelDims dims = dims_for_size(m);
    const RandomInstance inst = random_instance(dims, seed);
    BenchRow row;
    row.flops = flop_report(dims, seed);
    row.givens_ms = time_step(inst, Backend::kGivens, linalg::Schedule::kPerColumn, trials);
    row.inverse_ms = time_step(inst, Backend::kInverse, linalg::Schedule::kPerColumn, trials);
    row.givens_shared_ms = time_step(inst, Backend::kGivens, linalg::Schedule::kShared, trials);
    row.inverse_shared_ms = time_step(inst, Backend::kInverse, linalg::Schedule::kShared, trials);
    if (3 * dims.n < dims.M()) {
      const auto& f = row.flops;
      result.ordering_ok = result.ordering_ok && f.givens_flops < f.inverse_flops &&
                           f.givens_shared_flops < f.inverse_shared_flops &&
                           row.givens_ms < row.inverse_ms &&
                           row.givens_shared_ms < row.inverse_shared_ms;
    }
    result.rows.push_back(row);
  }
  for (std::size_t i = 1; i < result.rows.size(); ++i) {
    const auto& a = result.rows[i - 1].flops;
    const auto& b = result.rows[i].flops;
    const double slope =
        std::log(static_cast<double>(b.givens_factor_flops) / a.givens_factor_flops) /
        std::log(static_cast<double>(b.dims.M()) / a.dims.M());
    result.slopes.push_back(slope);
    result.slopes_ok = result.slopes_ok && slope >= 2.5 && slope <= 3.3;
  }
  return result;
}

std::string bench_csv(const BenchResult& result) {
  std::ostringstream out;
  out << "M,n,q,p,uF,uH,givens_flops,inverse_flops,givens_shared_flops,inverse_shared_flops,"
         "givens_factor_flops,predicted_givens,predicted_inverse,givens_ms,inverse_ms,"
         "givens_shared_ms,inverse_shared_ms\n";
  for (const auto& r : result.rows) {
    const auto& f = r.flops;
    const auto& d = f.dims;
    out << d.M() << ',' << d.n << ',' << d.q << ',' << d.p << ',' << d.uF << ',' << d.uH << ','
        << f.givens_flops << ',' << f.inverse_flops << ',' << f.givens_shared_flops << ','
        << f.inverse_shared_flops << ',' << f.givens_factor_flops << ','
        << io::format_real(f.predicted_givens) << ',' << io::format_real(f.predicted_inverse)
        << ',' << io::format_real(r.givens_ms) << ',' << io::format_real(r.inverse_ms) << ','
        << io::format_real(r.givens_shared_ms) << ',' << io::format_real(r.inverse_shared_ms)
        << '\n';
  }
  return out.str();
}

}  // namespace erkf::app
