#include "erkf/models.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace erkf::models {

namespace wgs84 {

double meridian_radius(double lat) {
  const double s = std::sin(lat);
  const double w = 1.0 - kEccentricitySq * s * s;
  return kSemiMajor * (1.0 - kEccentricitySq) / (w * std::sqrt(w));
}

double transverse_radius(double lat) {
  const double s = std::sin(lat);
  return kSemiMajor / std::sqrt(1.0 - kEccentricitySq * s * s);
}

}  // namespace wgs84

Vec AttitudeState::to_vector() const {
  Vec x(6);
  x << phi, theta, psi, bias_g;
  return x;
}

AttitudeState AttitudeState::from_vector(const Vec& x) {
  if (x.size() != 6) throw DimensionMismatch("attitude state has 6 components");
  return {x(0), x(1), x(2), x.segment<3>(3)};
}

Vec PositionState::to_vector() const {
  Vec x(9);
  x << lat, lon, alt, vel_ned, bias_a;
  return x;
}

PositionState PositionState::from_vector(const Vec& x) {
  if (x.size() != 9) throw DimensionMismatch("position state has 9 components");
  return {x(0), x(1), x(2), x.segment<3>(3), x.segment<3>(6)};
}

ModelConfig ModelConfig::defaults() {
  ModelConfig c;
  const double gyro_white = 0.005;    // rad/s per sample
  const double gyro_bias = 0.002;     // rad/s, stationary sigma
  const double accel_white = 0.05;    // m/s^2 per sample
  const double accel_bias = 0.02;     // m/s^2, stationary sigma
  const double gps_sigma_rad = 1.0 / 6.371e6;
  // Driving-noise weight giving the stationary bias sigma under
  // b+ = (1 - T/tau) b + T w.
  const double qbg = 2.0 * gyro_bias * gyro_bias / (c.T * c.tau_g);
  const double qba = 2.0 * accel_bias * accel_bias / (c.T * c.tau_a);

  Vec qa(6), ra(3), qp(6), rp(3), pa(6), pp(9);
  const double gw2 = gyro_white * gyro_white;
  const double aw2 = accel_white * accel_white;
  const double gps2 = gps_sigma_rad * gps_sigma_rad;
  qa << gw2, gw2, gw2, qbg, qbg, qbg;
  ra << 1e-4, 1e-4, 4e-4;
  qp << aw2, aw2, aw2, qba, qba, qba;
  rp << gps2, gps2, 1.0;
  pa << 1e-3, 1e-3, 4e-3, 4e-6, 4e-6, 4e-6;
  pp << gps2, gps2, 1.0, 25.0, 25.0, 1.0, 4e-4, 4e-4, 4e-4;
  c.Q_a = qa.asDiagonal();
  c.R_a = ra.asDiagonal();
  c.Q_p = qp.asDiagonal();
  c.R_p = rp.asDiagonal();
  c.pi0_a = pa.asDiagonal();
  c.pi0_p = pp.asDiagonal();
  return c;
}

void ModelConfig::validate() const {
  if (!(T > 0.0)) throw ModelError("T must be positive");
  if (!(tau_g > 0.0) || !(tau_a > 0.0)) throw ModelError("correlation times must be positive");
  if (!(gravity > 0.0)) throw ModelError("gravity must be positive");
  if (!(n_scale > 0.0)) throw ModelError("n_scale must be positive");
  auto spd = [](const Mat& m, Index k, const char* name) {
    if (m.rows() != k || m.cols() != k) {
      throw ModelError(std::string(name) + " must be " + std::to_string(k) + "x" +
                       std::to_string(k));
    }
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * linalg::max_abs(m)) {
      throw ModelError(std::string(name) + " is not symmetric");
    }
    if (linalg::jacobi_eigenvalues(m).minCoeff() <= 0.0) {
      throw ModelError(std::string(name) + " is not positive definite");
    }
  };
  spd(Q_a, 6, "Q_a");
  spd(R_a, 3, "R_a");
  spd(Q_p, 6, "Q_p");
  spd(R_p, 3, "R_p");
  spd(pi0_a, 6, "pi0_a");
  spd(pi0_p, 9, "pi0_p");
}

Vec3 metric_scale(double lat, double alt) {
  return {wgs84::meridian_radius(lat) + alt, (wgs84::transverse_radius(lat) + alt) * std::cos(lat),
          1.0};
}

Mat omega_matrix(double phi, double theta) {
  if (std::abs(theta) >= std::numbers::pi / 2 - kPoleGuard) {
    throw SingularAttitude("pitch " + std::to_string(theta) + " inside the +-pi/2 guard band");
  }
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double tt = std::tan(theta), sec = 1.0 / std::cos(theta);
  Mat m(3, 3);
  m << 1.0, sp * tt, cp * tt,
       0.0, cp, -sp,
       0.0, sp * sec, cp * sec;
  return m;
}

Mat psi_matrix(double lat, double alt) {
  if (std::abs(lat) >= std::numbers::pi / 2 - kPoleGuard) {
    throw SingularLatitude("latitude " + std::to_string(lat) + " inside the polar guard band");
  }
  const double rm = wgs84::meridian_radius(lat);
  const double rn = wgs84::transverse_radius(lat);
  if (!(rm + alt > 0.0)) throw SingularLatitude("altitude below the center of curvature");
  Mat m = Mat::Zero(3, 3);
  m(0, 0) = 1.0 / (rm + alt);
  m(1, 1) = 1.0 / ((rn + alt) * std::cos(lat));
  m(2, 2) = -1.0;
  return m;
}

Mat dcm_ned_to_body(double phi, double theta, double psi) {
  const double sf = std::sin(phi), cf = std::cos(phi);
  const double st = std::sin(theta), ct = std::cos(theta);
  const double ss = std::sin(psi), cs = std::cos(psi);
  Mat a(3, 3);
  a << ct * cs, ct * ss, -st,
       sf * st * cs - cf * ss, sf * st * ss + cf * cs, sf * ct,
       cf * st * cs + sf * ss, cf * st * ss - sf * cs, cf * ct;
  return a;
}

Mat angular_rate_jacobian(double phi, double theta, const Vec3& rate) {
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double tt = std::tan(theta), sec = 1.0 / std::cos(theta);
  const double q = rate(1), r = rate(2);
  const double a = sp * q + cp * r;  // appears in rows 1 and 3
  const double b = cp * q - sp * r;
  Mat j = Mat::Zero(3, 3);
  j(0, 0) = b * tt;
  j(0, 1) = a * sec * sec;
  j(1, 0) = -a;
  j(2, 0) = b * sec;
  j(2, 1) = a * sec * tt;
  return j;
}

NMatrices build_n_matrices(const Mat& F, const Mat& G, Index p, double scale) {
  const Index n = F.rows();
  if (F.cols() != n || G.rows() != n) throw DimensionMismatch("build_n_matrices: F/G shapes");
  const Mat fbar = F - Mat::Identity(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  NMatrices out;
  out.NF = scale * inv_n * fbar.colwise().sum();
  out.NG = scale * inv_n * G.colwise().sum();
  out.NH = Mat::Zero(1, n);
  out.NK = Mat::Zero(1, p);
  return out;
}

namespace {

void keep_nonzero_rows(Mat& left, Mat& right) {
  std::vector<Index> keep;
  for (Index i = 0; i < left.rows(); ++i) {
    if (!(left.row(i).isZero(0.0) && right.row(i).isZero(0.0))) keep.push_back(i);
  }
  if (static_cast<Index>(keep.size()) == left.rows()) return;
  Mat l(static_cast<Index>(keep.size()), left.cols());
  Mat r(static_cast<Index>(keep.size()), right.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    l.row(static_cast<Index>(k)) = left.row(keep[k]);
    r.row(static_cast<Index>(k)) = right.row(keep[k]);
  }
  left = std::move(l);
  right = std::move(r);
}

}  // namespace

void prune_envelopes(NMatrices& n) {
  keep_nonzero_rows(n.NF, n.NG);
  keep_nonzero_rows(n.NH, n.NK);
}

namespace {

void attach_envelopes(UncertainModel& m, double scale) {
  NMatrices n = build_n_matrices(m.F, m.G, m.p(), scale);
  prune_envelopes(n);
  m.NF = std::move(n.NF);
  m.NG = std::move(n.NG);
  m.NH = std::move(n.NH);
  m.NK = std::move(n.NK);
}

}  // namespace

UncertainModel build_attitude_model(const AttitudeState& x, const ImuSample& imu,
                                    const ModelConfig& cfg) {
  const double T = cfg.T;
  const Mat omega = omega_matrix(x.phi, x.theta);
  const Vec3 rate = imu.gyro - x.bias_g;
  const double decay = 1.0 - T / cfg.tau_g;
  const Mat I3 = Mat::Identity(3, 3);

  UncertainModel m;
  m.F = Mat::Zero(6, 6);
  m.F.topLeftCorner(3, 3) = I3 + T * angular_rate_jacobian(x.phi, x.theta, rate);
  m.F.topRightCorner(3, 3) = -T * omega;
  m.F.bottomRightCorner(3, 3) = decay * I3;
  m.G = Mat::Zero(6, 6);
  m.G.topLeftCorner(3, 3) = -T * omega;
  m.G.bottomRightCorner(3, 3) = T * I3;
  m.H = Mat::Zero(3, 6);
  m.H.leftCols(3) = I3;
  m.K = I3;
  m.Q = cfg.Q_a;
  m.R = cfg.R_a;
  attach_envelopes(m, cfg.n_scale);

  const Vec3 gyro = imu.gyro;
  m.transition_fn = [gyro, T, decay](const Vec& s) {
    const Vec3 b = s.segment<3>(3);
    Vec out(6);
    out.head<3>() = s.head<3>() + T * omega_matrix(s(0), s(1)) * (gyro - b);
    out.tail<3>() = decay * b;
    return out;
  };
  return m;
}

PositionState mechanize(const PositionState& x, const AttitudeState& att, const Vec3& accel,
                        const ModelConfig& cfg) {
  const double T = cfg.T;
  const Mat body_to_ned = dcm_ned_to_body(att.phi, att.theta, att.psi).transpose();
  const Vec3 g(0.0, 0.0, cfg.gravity);
  PositionState out = x;
  out.vel_ned = x.vel_ned + T * (g + body_to_ned * (accel - x.bias_a));
  const Vec3 rates = psi_matrix(x.lat, x.alt) * out.vel_ned;
  out.lat = x.lat + T * rates(0);
  out.lon = x.lon + T * rates(1);
  out.alt = x.alt + T * rates(2);
  out.bias_a = (1.0 - T / cfg.tau_a) * x.bias_a;
  return out;
}

UncertainModel build_position_model(const PositionState& x, const AttitudeState& att,
                                    const ImuSample& imu, const ModelConfig& cfg) {
  const double T = cfg.T;
  const Mat psi = psi_matrix(x.lat, x.alt);
  const Mat body_to_ned = dcm_ned_to_body(att.phi, att.theta, att.psi).transpose();
  const Mat I3 = Mat::Identity(3, 3);

  UncertainModel m;
  m.F = Mat::Identity(9, 9);
  m.F.block(0, 3, 3, 3) = T * psi;
  m.F.block(3, 6, 3, 3) = -T * body_to_ned;
  m.F.block(6, 6, 3, 3) = (1.0 - T / cfg.tau_a) * I3;
  m.G = Mat::Zero(9, 6);
  m.G.block(3, 0, 3, 3) = -T * body_to_ned;
  m.G.block(6, 3, 3, 3) = T * I3;
  m.H = Mat::Zero(3, 9);
  m.H.leftCols(3) = I3;
  m.K = I3;
  m.Q = cfg.Q_p;
  m.R = cfg.R_p;
  attach_envelopes(m, cfg.n_scale);

  m.transition_fn = [att, accel = Vec3(imu.accel), cfg](const Vec& s) {
    return mechanize(PositionState::from_vector(s), att, accel, cfg).to_vector();
  };
  return m;
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::remainder(a, two_pi);  // [-pi, pi]
  if (w <= -std::numbers::pi) w += two_pi;
  return w;
}

Vec3 measurement_attitude(const ImuSample& imu, double delta_psi) {
  return {imu.angles(0), imu.angles(1), wrap_angle(imu.angles(2) + delta_psi)};
}

}  // namespace erkf::models
