#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erkf/filter.hpp"
#include "erkf/models.hpp"

namespace erkf::sim {

using models::Vec3;

enum class Trajectory { kCircle, kFigureEight, kStraight };

struct TruthSample {
  double t = 0.0;
  Vec3 attitude = Vec3::Zero();
  Vec3 pos_lla = Vec3::Zero();
  Vec3 vel_ned = Vec3::Zero();
};

/// Level ground vehicle on a closed-form path with a MEMS-grade IMU and a
/// meter-level GPS. Sensor perturbations follow the uncertain model:
///
///   gyro  = (I + M1 D_g) w_true + b_g + w_g
///   accel = (I + M1 D_a) f_true + b_a + w_a
///   angles_imu = (I + M2 D_m) angles_true + noise + yaw offset
///
/// with D_g = diag(gyro_scale) + skew(gyro_misalignment), likewise D_a, and
/// D_m = diag(angle_scale). Each D must be a contraction below its bound.
struct SyntheticScenario {
  Trajectory trajectory = Trajectory::kCircle;
  double duration = 60.0;
  double imu_rate = 400.0;
  double gps_rate = 10.0;
  double speed = 5.0;    // m/s
  double radius = 50.0;  // m

  double gyro_noise = 0.005;     // rad/s per sample
  double accel_noise = 0.05;     // m/s^2 per sample
  double angle_noise = 0.005;    // rad per sample
  double imu_yaw_offset = 0.05;  // rad, heading error of the IMU's own solution
  double gps_noise = 1.0;        // m per axis
  double gps_yaw_noise = 0.01;   // rad

  double tau_g = 100.0;
  double tau_a = 100.0;
  double gyro_bias_sigma = 0.002;   // rad/s, stationary
  double accel_bias_sigma = 0.02;   // m/s^2, stationary

  Vec3 gyro_scale{0.01, -0.008, 0.012};
  Vec3 gyro_misalignment{0.002, -0.001, 0.0015};
  Vec3 accel_scale{-0.006, 0.009, 0.004};
  Vec3 accel_misalignment{0.001, 0.002, -0.001};
  Vec3 angle_scale{0.0, 0.0, 0.0};
  UncertaintyEnvelope envelope = default_envelope();

  double lat0 = -0.3841;  // rad
  double lon0 = -0.8349;  // rad
  double alt0 = 850.0;    // m
  double gravity = 9.80665;

  static UncertaintyEnvelope default_envelope();
  /// "circle", "figure_eight", "straight", or "stationary" (straight at
  /// zero speed).
  static SyntheticScenario named(const std::string& name);
  /// Same scenario with every noise, bias and perturbation set to zero.
  SyntheticScenario noiseless() const;
  void validate() const;
};

struct SyntheticData {
  std::vector<models::ImuSample> imu;
  std::vector<models::GpsSample> gps;
  std::vector<TruthSample> truth;  // at IMU epochs
};

/// Closed-form kinematics of the scenario path (attitude, LLA, NED velocity,
/// NED acceleration and yaw rate) at time t.
struct Kinematics {
  TruthSample truth;
  Vec3 accel_ned = Vec3::Zero();
  double yaw_rate = 0.0;
};
Kinematics trajectory_at(const SyntheticScenario& scn, double t);

SyntheticData generate_synthetic(const SyntheticScenario& scn, std::uint64_t seed);

Mat skew(const Vec3& v);

/// Spectral norm via the symmetric eigenvalues of D^T D.
double spectral_norm(const Mat& d);

}  // namespace erkf::sim
