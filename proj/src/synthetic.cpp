#include "erkf/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "erkf/rng.hpp"

namespace erkf::sim {

using models::wrap_angle;

Mat skew(const Vec3& v) {
  Mat s(3, 3);
  s << 0.0, -v(2), v(1),
       v(2), 0.0, -v(0),
       -v(1), v(0), 0.0;
  return s;
}

double spectral_norm(const Mat& d) {
  return std::sqrt(linalg::singular_value_extrema(d.transpose() * d).sigma_max);
}

UncertaintyEnvelope SyntheticScenario::default_envelope() {
  UncertaintyEnvelope e;
  e.M1 = Mat::Identity(3, 3);
  e.M2 = Mat::Identity(3, 3);
  e.delta1_bound = 0.5;
  e.delta2_bound = 0.5;
  return e;
}

SyntheticScenario SyntheticScenario::named(const std::string& name) {
  SyntheticScenario s;
  if (name == "circle") {
    s.trajectory = Trajectory::kCircle;
  } else if (name == "figure_eight") {
    s.trajectory = Trajectory::kFigureEight;
  } else if (name == "straight") {
    s.trajectory = Trajectory::kStraight;
  } else if (name == "stationary") {
    s.trajectory = Trajectory::kStraight;
    s.speed = 0.0;
  } else {
    throw InvalidScenario("unknown scenario '" + name +
                          "' (expected circle, figure_eight, straight, stationary)");
  }
  return s;
}

SyntheticScenario SyntheticScenario::noiseless() const {
  SyntheticScenario s = *this;
  s.gyro_noise = s.accel_noise = s.angle_noise = 0.0;
  s.gps_noise = s.gps_yaw_noise = 0.0;
  s.imu_yaw_offset = 0.0;
  s.gyro_bias_sigma = s.accel_bias_sigma = 0.0;
  s.gyro_scale.setZero();
  s.gyro_misalignment.setZero();
  s.accel_scale.setZero();
  s.accel_misalignment.setZero();
  s.angle_scale.setZero();
  return s;
}

void SyntheticScenario::validate() const {
  if (!(duration > 0.0)) throw InvalidScenario("duration must be positive");
  if (!(imu_rate > 0.0) || !(gps_rate > 0.0)) throw InvalidScenario("rates must be positive");
  const double ratio = imu_rate / gps_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
    throw InvalidScenario("imu_rate must be an integer multiple of gps_rate");
  }
  if (!(speed >= 0.0) || !(radius > 0.0)) throw InvalidScenario("speed/radius out of range");
  for (double sigma : {gyro_noise, accel_noise, angle_noise, gps_noise, gps_yaw_noise,
                       gyro_bias_sigma, accel_bias_sigma}) {
    if (!(sigma >= 0.0)) throw InvalidScenario("noise sigmas must be non-negative");
  }
  if (!(tau_g > 0.0) || !(tau_a > 0.0)) throw InvalidScenario("correlation times must be positive");
  const UncertaintyEnvelope& e = envelope;
  if (e.M1.rows() != 3 || e.M1.cols() != 3 || e.M2.rows() != 3 || e.M2.cols() != 3) {
    throw InvalidScenario("envelope factors must be 3x3");
  }
  if (!(e.delta1_bound > 0.0 && e.delta1_bound < 1.0) ||
      !(e.delta2_bound > 0.0 && e.delta2_bound < 1.0)) {
    throw InvalidScenario("contraction bounds must lie in (0, 1)");
  }
  const Mat dg = Mat(gyro_scale.asDiagonal()) + skew(gyro_misalignment);
  const Mat da = Mat(accel_scale.asDiagonal()) + skew(accel_misalignment);
  const Mat dm = angle_scale.asDiagonal();
  if (spectral_norm(dg) >= e.delta1_bound || spectral_norm(da) >= e.delta1_bound) {
    throw InvalidScenario("gyro/accel perturbation exceeds the state contraction bound");
  }
  if (spectral_norm(dm) >= e.delta2_bound) {
    throw InvalidScenario("angle perturbation exceeds the measurement contraction bound");
  }
  if (std::abs(lat0) >= std::numbers::pi / 2 - models::kPoleGuard) {
    throw InvalidScenario("origin latitude too close to a pole");
  }
}

Kinematics trajectory_at(const SyntheticScenario& scn, double t) {
  const double v = scn.speed;
  const double r = scn.radius;
  double north = 0.0, east = 0.0;
  Vec3 vel = Vec3::Zero();
  Vec3 acc = Vec3::Zero();
  double yaw = 0.0, yaw_rate = 0.0;
  switch (scn.trajectory) {
    case Trajectory::kCircle: {
      const double w = v / r;
      north = r * std::sin(w * t);
      east = r * (1.0 - std::cos(w * t));
      vel << v * std::cos(w * t), v * std::sin(w * t), 0.0;
      acc << -v * w * std::sin(w * t), v * w * std::cos(w * t), 0.0;
      yaw = w * t;
      yaw_rate = w;
      break;
    }
    case Trajectory::kFigureEight: {
      const double w = v / r;
      north = r * std::sin(w * t);
      east = 0.5 * r * std::sin(2.0 * w * t);
      vel << r * w * std::cos(w * t), r * w * std::cos(2.0 * w * t), 0.0;
      acc << -r * w * w * std::sin(w * t), -2.0 * r * w * w * std::sin(2.0 * w * t), 0.0;
      yaw = std::atan2(vel(1), vel(0));
      yaw_rate = (vel(0) * acc(1) - vel(1) * acc(0)) / (vel(0) * vel(0) + vel(1) * vel(1));
      break;
    }
    case Trajectory::kStraight: {
      north = v * t;
      vel << v, 0.0, 0.0;
      break;
    }
  }
  Kinematics k;
  k.truth.t = t;
  k.truth.attitude << 0.0, 0.0, wrap_angle(yaw);
  const double rm = models::wgs84::meridian_radius(scn.lat0);
  const double rn = models::wgs84::transverse_radius(scn.lat0);
  k.truth.pos_lla << scn.lat0 + north / (rm + scn.alt0),
      scn.lon0 + east / ((rn + scn.alt0) * std::cos(scn.lat0)), scn.alt0;
  k.truth.vel_ned = vel;
  k.accel_ned = acc;
  k.yaw_rate = yaw_rate;
  return k;
}

SyntheticData generate_synthetic(const SyntheticScenario& scn, std::uint64_t seed) {
  scn.validate();
  Rng rng(seed);
  const auto imu_count = static_cast<std::size_t>(std::llround(scn.duration * scn.imu_rate));
  const auto gps_every = static_cast<std::size_t>(std::llround(scn.imu_rate / scn.gps_rate));
  const double dt = 1.0 / scn.imu_rate;
  const Mat I3 = Mat::Identity(3, 3);
  const UncertaintyEnvelope& env = scn.envelope;
  const Mat gyro_gain = I3 + env.M1 * (Mat(scn.gyro_scale.asDiagonal()) + skew(scn.gyro_misalignment));
  const Mat accel_gain =
      I3 + env.M1 * (Mat(scn.accel_scale.asDiagonal()) + skew(scn.accel_misalignment));
  const Mat angle_gain = I3 + env.M2 * Mat(scn.angle_scale.asDiagonal());
  const Vec3 gravity(0.0, 0.0, scn.gravity);

  // Exact discretization of the first-order Gauss-Markov bias.
  const double phi_g = std::exp(-dt / scn.tau_g);
  const double phi_a = std::exp(-dt / scn.tau_a);
  const double drive_g = scn.gyro_bias_sigma * std::sqrt(1.0 - phi_g * phi_g);
  const double drive_a = scn.accel_bias_sigma * std::sqrt(1.0 - phi_a * phi_a);
  Vec3 bg, ba;
  for (int i = 0; i < 3; ++i) bg(i) = rng.normal(scn.gyro_bias_sigma);
  for (int i = 0; i < 3; ++i) ba(i) = rng.normal(scn.accel_bias_sigma);

  const double rm = models::wgs84::meridian_radius(scn.lat0) + scn.alt0;
  const double rn = (models::wgs84::transverse_radius(scn.lat0) + scn.alt0) * std::cos(scn.lat0);

  SyntheticData out;
  out.imu.reserve(imu_count);
  out.truth.reserve(imu_count);
  out.gps.reserve(imu_count / gps_every + 1);
  for (std::size_t k = 0; k < imu_count; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Kinematics kin = trajectory_at(scn, t);
    const TruthSample& truth = kin.truth;
    const Mat ned_to_body = models::dcm_ned_to_body(0.0, 0.0, truth.attitude(2));
    const Vec3 rate(0.0, 0.0, kin.yaw_rate);
    const Vec3 specific_force = ned_to_body * (kin.accel_ned - gravity);

    models::ImuSample imu;
    imu.t = t;
    imu.gyro = gyro_gain * rate + bg;
    for (int i = 0; i < 3; ++i) imu.gyro(i) += rng.normal(scn.gyro_noise);
    imu.accel = accel_gain * specific_force + ba;
    for (int i = 0; i < 3; ++i) imu.accel(i) += rng.normal(scn.accel_noise);
    imu.angles = angle_gain * truth.attitude;
    for (int i = 0; i < 3; ++i) imu.angles(i) += rng.normal(scn.angle_noise);
    imu.angles(2) = wrap_angle(imu.angles(2) + scn.imu_yaw_offset);
    out.imu.push_back(imu);
    out.truth.push_back(truth);

    if (k % gps_every == 0) {
      models::GpsSample gps;
      gps.t = t;
      gps.pos_lla = truth.pos_lla;
      gps.pos_lla(0) += rng.normal(scn.gps_noise) / rm;
      gps.pos_lla(1) += rng.normal(scn.gps_noise) / rn;
      gps.pos_lla(2) += rng.normal(scn.gps_noise);
      gps.yaw = wrap_angle(truth.attitude(2) + rng.normal(scn.gps_yaw_noise));
      out.gps.push_back(gps);
    }

    for (int i = 0; i < 3; ++i) bg(i) = phi_g * bg(i) + rng.normal(drive_g);
    for (int i = 0; i < 3; ++i) ba(i) = phi_a * ba(i) + rng.normal(drive_a);
  }
  return out;
}

}  // namespace erkf::sim
