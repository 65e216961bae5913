#include "erkf/nav.hpp"

#include <string>

namespace erkf::nav {

using models::AttitudeState;
using models::PositionState;

const char* to_string(Source s) {
  return s == Source::kErkfUpdate ? "ERKF_UPDATE" : "INS_PROPAGATED";
}

namespace {

EstimateRecord make_record(const FusionState& fs, double t, Source source) {
  EstimateRecord r;
  r.t = t;
  r.attitude = fs.attitude.angles();
  r.position = fs.ins_position.lla();
  r.velocity = fs.ins_position.vel_ned;
  r.source = source;
  return r;
}

}  // namespace

std::pair<FusionState, EstimateRecord> process_imu_epoch(FusionState fs,
                                                         const models::ImuSample& imu,
                                                         const models::ModelConfig& cfg,
                                                         const NavOptions& opts) {
  if (!(imu.t > fs.last_imu_t)) {
    throw SchedulerError("IMU timestamp " + std::to_string(imu.t) +
                         " does not increase past " + std::to_string(fs.last_imu_t));
  }
  const bool first = !fs.attitude_ready;
  if (first) {
    Vec x0 = Vec::Zero(6);
    x0.head<3>() = models::measurement_attitude(imu, fs.delta_psi);
    fs.att_filter = FilterState{x0, cfg.pi0_a};
    fs.attitude_ready = true;
  }

  // Attitude: measurement every epoch, yaw innovation taken the short way.
  const AttitudeState prior = AttitudeState::from_vector(fs.att_filter.x_pred);
  const UncertainModel att_model = models::build_attitude_model(prior, imu, cfg);
  Vec z = models::measurement_attitude(imu, fs.delta_psi);
  z(2) = prior.psi + models::wrap_angle(z(2) - prior.psi);
  StepOutput out = erkf_step(opts.backend, att_model, fs.att_filter, z, opts.step);
  out.x_filtered(2) = models::wrap_angle(out.x_filtered(2));
  out.x_pred_next(2) = models::wrap_angle(out.x_pred_next(2));
  fs.attitude = AttitudeState::from_vector(out.x_filtered);
  fs.att_filter = FilterState{std::move(out.x_pred_next), std::move(out.P_pred_next)};

  // Position: dead reckoning between GPS fixes.
  if (!first) {
    // Without a GPS fix there is no position to propagate; the record keeps
    // the origin.
    if (fs.position_ready) {
      const UncertainModel pos_model =
          models::build_position_model(fs.ins_position, fs.attitude, imu, cfg);
      if (fs.covariance_ahead) {
        fs.covariance_ahead = false;
      } else {
        const Mat& P = fs.pos_filter.P_pred;
        fs.pos_filter.P_pred = symmetrize(pos_model.F * P * pos_model.F.transpose() +
                                          pos_model.G * pos_model.Q * pos_model.G.transpose());
      }
    }
    if (fs.position_ready) {
      fs.ins_position = models::mechanize(fs.ins_position, fs.attitude, imu.accel, cfg);
      fs.pos_filter.x_pred = fs.ins_position.to_vector();
    }
  }
  fs.last_accel = imu.accel;
  fs.last_imu_t = imu.t;
  EstimateRecord rec = make_record(fs, imu.t, Source::kInsPropagated);
  return {std::move(fs), rec};
}

std::pair<FusionState, EstimateRecord> process_gps_epoch(FusionState fs,
                                                         const models::GpsSample& gps,
                                                         double imu_yaw,
                                                         const models::ModelConfig& cfg,
                                                         const NavOptions& opts) {
  if (!fs.attitude_ready) throw SchedulerError("GPS epoch before the first IMU epoch");
  if (!(gps.t > fs.last_gps_t)) {
    throw SchedulerError("GPS timestamp " + std::to_string(gps.t) + " does not increase");
  }
  fs.delta_psi = models::wrap_angle(gps.yaw - imu_yaw);
  if (!fs.position_ready) {
    fs.ins_position = PositionState{gps.pos_lla(0), gps.pos_lla(1), gps.pos_lla(2),
                                    Vec3::Zero(), Vec3::Zero()};
    fs.pos_filter = FilterState{fs.ins_position.to_vector(), cfg.pi0_p};
    fs.position_ready = true;
    fs.covariance_ahead = false;
  }
  models::ImuSample imu;
  imu.t = fs.last_imu_t;
  imu.accel = fs.last_accel;
  const UncertainModel model = models::build_position_model(fs.ins_position, fs.attitude, imu, cfg);
  fs.pos_filter.x_pred = fs.ins_position.to_vector();
  // Latitude/longitude variances are ~1e-14 rad^2 next to velocity variances
  // of order one; solve in metres to keep the augmented system well scaled.
  const Vec3 ms = models::metric_scale(fs.ins_position.lat, fs.ins_position.alt);
  Vec state_scale = Vec::Ones(9);
  state_scale.head<3>() = ms;
  StepOutput out = erkf_step_scaled(opts.backend, model, fs.pos_filter, gps.pos_lla, state_scale,
                                    ms, opts.step);
  fs.ins_position = PositionState::from_vector(out.x_filtered);
  fs.pos_filter = FilterState{std::move(out.x_pred_next), std::move(out.P_pred_next)};
  fs.covariance_ahead = true;
  fs.last_gps_t = gps.t;
  EstimateRecord rec = make_record(fs, fs.last_imu_t, Source::kErkfUpdate);
  return {std::move(fs), rec};
}

FusionRunner::FusionRunner(std::span<const models::GpsSample> gps, models::ModelConfig cfg,
                           NavOptions opts)
    : gps_(gps), cfg_(std::move(cfg)), opts_(opts) {
  cfg_.validate();
}

FusionRunner::Epoch FusionRunner::step(const models::ImuSample& imu) {
  Epoch epoch;
  auto [fs, rec] = process_imu_epoch(std::move(state_), imu, cfg_, opts_);
  state_ = std::move(fs);
  epoch.record = rec;
  while (next_gps_ < gps_.size() && gps_[next_gps_].t <= imu.t) {
    auto [gfs, grec] = process_gps_epoch(std::move(state_), gps_[next_gps_], imu.angles(2), cfg_, opts_);
    state_ = std::move(gfs);
    epoch.record = grec;
    epoch.position_updated = true;
    ++next_gps_;
  }
  return epoch;
}

}  // namespace erkf::nav
