#pragma once

#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "erkf/filter.hpp"
#include "erkf/models.hpp"

namespace erkf::nav {

using models::Vec3;

enum class Source { kErkfUpdate, kInsPropagated };

const char* to_string(Source s);

struct EstimateRecord {
  double t = 0.0;
  Vec3 attitude = Vec3::Zero();  // phi, theta, psi (psi wrapped)
  Vec3 position = Vec3::Zero();  // lat, lon, alt
  Vec3 velocity = Vec3::Zero();  // NED
  Source source = Source::kInsPropagated;
};

struct FusionState {
  FilterState att_filter;
  FilterState pos_filter;
  double delta_psi = 0.0;
  double last_gps_t = -std::numeric_limits<double>::infinity();
  double last_imu_t = -std::numeric_limits<double>::infinity();
  models::AttitudeState attitude;      // latest filtered attitude
  models::PositionState ins_position;  // INS solution, reset at every GPS update
  Vec3 last_accel = Vec3::Zero();
  bool attitude_ready = false;
  bool position_ready = false;
  // pos_filter.P_pred already refers to the next IMU epoch (set by a GPS
  // update), so the next INS step must not propagate it again.
  bool covariance_ahead = false;
};

struct NavOptions {
  Backend backend = Backend::kGivens;
  StepOptions step;
};

/// Attitude ERKF step on the IMU angles, then one INS step for position and
/// covariance prediction for the position filter.
std::pair<FusionState, EstimateRecord> process_imu_epoch(FusionState fs,
                                                         const models::ImuSample& imu,
                                                         const models::ModelConfig& cfg,
                                                         const NavOptions& opts = {});

/// Yaw-offset refresh and position ERKF update; resets the INS solution.
std::pair<FusionState, EstimateRecord> process_gps_epoch(FusionState fs,
                                                         const models::GpsSample& gps,
                                                         double imu_yaw,
                                                         const models::ModelConfig& cfg,
                                                         const NavOptions& opts = {});

/// Batch scheduler: one record per IMU epoch; a GPS sample is consumed at the
/// first IMU epoch whose timestamp is >= its own, and that epoch's record is
/// the ERKF_UPDATE one.
class FusionRunner {
 public:
  FusionRunner(std::span<const models::GpsSample> gps, models::ModelConfig cfg,
               NavOptions opts = {});

  struct Epoch {
    EstimateRecord record;
    bool position_updated = false;
  };

  Epoch step(const models::ImuSample& imu);
  const FusionState& state() const { return state_; }

 private:
  std::span<const models::GpsSample> gps_;
  std::size_t next_gps_ = 0;
  models::ModelConfig cfg_;
  NavOptions opts_;
  FusionState state_;
};

}  // namespace erkf::nav
