#pragma once

#include <Eigen/Core>

#include "erkf/filter.hpp"

namespace erkf::models {

using Vec3 = Eigen::Vector3d;

namespace wgs84 {
inline constexpr double kSemiMajor = 6378137.0;
inline constexpr double kEccentricitySq = 6.69437999014e-3;
/// Meridian radius of curvature R_lambda.
double meridian_radius(double lat);
/// Transverse (prime vertical) radius of curvature R_phi.
double transverse_radius(double lat);
}  // namespace wgs84

inline constexpr double kPoleGuard = 1e-6;

struct AttitudeState {
  double phi = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  Vec3 bias_g = Vec3::Zero();

  Vec to_vector() const;
  static AttitudeState from_vector(const Vec& x);
  Vec3 angles() const { return {phi, theta, psi}; }
};

struct PositionState {
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;
  Vec3 vel_ned = Vec3::Zero();
  Vec3 bias_a = Vec3::Zero();

  Vec to_vector() const;
  static PositionState from_vector(const Vec& x);
  Vec3 lla() const { return {lat, lon, alt}; }
};

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();    // rad/s, body
  Vec3 accel = Vec3::Zero();   // m/s^2 specific force, body
  Vec3 angles = Vec3::Zero();  // phi, theta, psi reported by the IMU
};

struct GpsSample {
  double t = 0.0;
  Vec3 pos_lla = Vec3::Zero();
  double yaw = 0.0;
};

struct ModelConfig {
  double T = 1.0 / 400.0;
  double tau_g = 100.0;
  double tau_a = 100.0;
  Mat Q_a, R_a, Q_p, R_p;
  double gravity = 9.80665;
  double n_scale = 1e2;
  Mat pi0_a, pi0_p;

  /// Datasheet-style defaults for a MEMS IMU and a meter-level GPS.
  static ModelConfig defaults();
  void validate() const;
};

/// Metres per unit of (lat, lon, alt) at the given point: R_lambda + h,
/// (R_phi + h) cos(lat), 1.
Vec3 metric_scale(double lat, double alt);

/// Euler-angle rate map: [phi_dot theta_dot psi_dot] = Omega [p q r].
Mat omega_matrix(double phi, double theta);

/// Geodetic rate map: [lat_dot lon_dot h_dot] = Psi [vN vE vD].
Mat psi_matrix(double lat, double alt);

/// ZYX direction-cosine matrix, navigation (NED) to body.
Mat dcm_ned_to_body(double phi, double theta, double psi);

/// d/d(phi, theta, psi) of Omega(phi, theta) * rate.
Mat angular_rate_jacobian(double phi, double theta, const Vec3& rate);

struct NMatrices {
  Mat NF, NG, NH, NK;
};

/// Column means of F - I and G, scaled; zero measurement rows.
NMatrices build_n_matrices(const Mat& F, const Mat& G, Index p, double scale);

/// Removes all-zero envelope rows. Such a row states 0 = 0 and would leave
/// the augmented system singular; replacing it by any small nonzero row
/// instead imposes a real constraint on the estimate.
void prune_envelopes(NMatrices& n);

UncertainModel build_attitude_model(const AttitudeState& x, const ImuSample& imu,
                                    const ModelConfig& cfg);

UncertainModel build_position_model(const PositionState& x, const AttitudeState& att,
                                    const ImuSample& imu, const ModelConfig& cfg);

/// Wraps to (-pi, pi].
double wrap_angle(double a);

Vec3 measurement_attitude(const ImuSample& imu, double delta_psi);

/// One strapdown step: v += T (g + A^T (a - b_a)), then p += T Psi v.
PositionState mechanize(const PositionState& x, const AttitudeState& att, const Vec3& accel,
                        const ModelConfig& cfg);

}  // namespace erkf::models
