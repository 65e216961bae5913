#include <doctest.h>

#include <algorithm>

#include "erkf/nav.hpp"
#include "erkf/synthetic.hpp"

using namespace erkf;
using namespace erkf::nav;

namespace {

sim::SyntheticData circle(double duration, std::uint64_t seed = 3) {
  auto scn = sim::SyntheticScenario::named("circle");
  scn.duration = duration;
  return sim::generate_synthetic(scn, seed);
}

std::vector<EstimateRecord> run_all(const sim::SyntheticData& d, NavOptions opts = {}) {
  FusionRunner runner(d.gps, models::ModelConfig::defaults(), opts);
  std::vector<EstimateRecord> out;
  for (const auto& s : d.imu) out.push_back(runner.step(s).record);
  return out;
}

}  // namespace

TEST_CASE("one record per IMU epoch, one ERKF update per GPS fix") {
  const auto d = circle(5.0);
  const auto recs = run_all(d);
  REQUIRE(recs.size() == d.imu.size());
  std::vector<std::size_t> updates;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].t == d.imu[i].t);
    if (recs[i].source == Source::kErkfUpdate) updates.push_back(i);
  }
  REQUIRE(updates.size() == d.gps.size());
  for (std::size_t k = 0; k < updates.size(); ++k) CHECK(updates[k] == 40 * k);
  CHECK(std::string(to_string(Source::kErkfUpdate)) == "ERKF_UPDATE");
  CHECK(std::string(to_string(Source::kInsPropagated)) == "INS_PROPAGATED");
}

TEST_CASE("a GPS fix between IMU epochs is consumed at the next one") {
  auto d = circle(1.0);
  d.gps.resize(1);
  d.gps[0].t = 0.0101;  // between epochs 4 (0.01) and 5 (0.0125)
  const auto recs = run_all(d);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK((recs[i].source == Source::kErkfUpdate) == (i == 5));
  }
  // No position fix yet: the INS stays at the origin.
  CHECK(recs[4].position == Vec3::Zero());
  CHECK(recs[5].position(0) != 0.0);
}

TEST_CASE("GPS update refreshes the yaw offset and resets the INS") {
  const auto d = circle(1.0);
  FusionRunner runner(d.gps, models::ModelConfig::defaults());
  const auto e0 = runner.step(d.imu[0]);
  REQUIRE(e0.position_updated);
  CHECK(runner.state().delta_psi ==
        doctest::Approx(models::wrap_angle(d.gps[0].yaw - d.imu[0].angles(2))));
  CHECK(runner.state().ins_position.lla() == e0.record.position);
  CHECK(runner.state().covariance_ahead);
  runner.step(d.imu[1]);
  CHECK_FALSE(runner.state().covariance_ahead);
}

TEST_CASE("pure INS when there are no GPS fixes") {
  auto d = circle(2.0);
  d.gps.clear();
  const auto recs = run_all(d);
  CHECK(std::all_of(recs.begin(), recs.end(),
                    [](const EstimateRecord& r) { return r.source == Source::kInsPropagated; }));
}

TEST_CASE("scheduler rejects out-of-order input") {
  const auto d = circle(1.0);
  const auto cfg = models::ModelConfig::defaults();
  FusionState fs;
  CHECK_THROWS_AS(process_gps_epoch(fs, d.gps[0], 0.0, cfg), SchedulerError);
  auto [fs1, r1] = process_imu_epoch(fs, d.imu[1], cfg);
  CHECK_THROWS_AS(process_imu_epoch(fs1, d.imu[0], cfg), SchedulerError);
  CHECK_THROWS_AS(process_imu_epoch(fs1, d.imu[1], cfg), SchedulerError);
  auto [fs2, r2] = process_gps_epoch(fs1, d.gps[1], 0.0, cfg);
  CHECK(r2.source == Source::kErkfUpdate);
  CHECK_THROWS_AS(process_gps_epoch(fs2, d.gps[0], 0.0, cfg), SchedulerError);
}

TEST_CASE("backends produce the same trajectory") {
  const auto d = circle(2.0);
  const auto g = run_all(d, NavOptions{Backend::kGivens, {}});
  const auto o = run_all(d, NavOptions{Backend::kInverse, {}});
  REQUIRE(g.size() == o.size());
  double att = 0.0, vel = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    att = std::max(att, (g[i].attitude - o[i].attitude).cwiseAbs().maxCoeff());
    vel = std::max(vel, (g[i].velocity - o[i].velocity).cwiseAbs().maxCoeff());
    const Vec3 ms = models::metric_scale(o[i].position(0), o[i].position(2));
    pos = std::max(pos, (g[i].position - o[i].position).cwiseProduct(ms).cwiseAbs().maxCoeff());
  }
  MESSAGE("attitude ", att, " rad, velocity ", vel, " m/s, position ", pos, " m");
  CHECK(att < 1e-10);
  // The position solve works on absolute geodetic coordinates (about 6e6 m
  // once scaled), so agreement is limited to roughly 1e-15 of that.
  CHECK(vel < 1e-6);
  CHECK(pos < 1e-6);
}

TEST_CASE("noiseless circle is tracked closely") {
  auto scn = sim::SyntheticScenario::named("circle").noiseless();
  scn.duration = 10.0;
  const auto d = sim::generate_synthetic(scn, 1);
  const auto recs = run_all(d);
  for (std::size_t i = 0; i < recs.size(); i += 400) {
    const Vec3 e = recs[i].attitude - d.truth[i].attitude;
    CHECK(std::abs(models::wrap_angle(e(2))) < 1e-2);
    CHECK(std::abs(e(0)) < 1e-2);
  }
}
