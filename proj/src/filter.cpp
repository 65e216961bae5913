#include "erkf/filter.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "erkf/rng.hpp"

namespace erkf {

namespace {

void expect_shape(const Mat& m, Index rows, Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionMismatch(std::string(name) + " must be " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
  }
  if (!m.allFinite()) throw ModelError(std::string(name) + " has non-finite entries");
}

void expect_spd(const Mat& m, const char* name) {
  const double scale = linalg::max_abs(m);
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ModelError(std::string(name) + " is not symmetric");
  }
  Eigen::LLT<Mat> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw ModelError(std::string(name) + " is not positive definite");
}

void expect_envelope_rows(const Mat& left, const Mat& right, const char* name) {
  for (Index i = 0; i < left.rows(); ++i) {
    if (left.row(i).isZero(0.0) && right.row(i).isZero(0.0)) {
      throw ModelError(std::string(name) + " envelope row " + std::to_string(i) +
                       " is identically zero; the augmented system would be singular");
    }
  }
}

void check_state(const UncertainModel& model, const FilterState& state, const Vec& z) {
  const Index n = model.n();
  if (state.x_pred.size() != n) throw DimensionMismatch("state vector length differs from n");
  expect_shape(state.P_pred, n, n, "P_pred");
  if (!state.x_pred.allFinite()) throw ModelError("state vector has non-finite entries");
  if (z.size() != model.p()) throw DimensionMismatch("measurement length differs from p");
  if (!z.allFinite()) throw ModelError("measurement has non-finite entries");
}

// Trailing unknowns needed from column 0 (x(k|k)-x(k|k-1), nu, x(k+1|k)) and
// from the covariance columns (P(k+1|k) only).
Index state_tail(const BlockLayout& b) { return b.length(4) + b.length(5) + b.length(6); }

StepOutput unpack(const FilterState& state, const Vec& col0_tail, const Mat& p_cols) {
  const Index n = state.x_pred.size();
  StepOutput out;
  out.x_filtered = state.x_pred + col0_tail.head(n);
  out.x_pred_next = col0_tail.tail(n);
  out.P_pred_next = symmetrize(p_cols);
  return out;
}

}  // namespace

Mat symmetrize(const Mat& p) { return 0.5 * (p + p.transpose()); }

void UncertainModel::validate() const {
  const Index n_ = n(), q_ = q(), p_ = p();
  if (n_ < 1 || q_ < 1 || p_ < 1) throw DimensionMismatch("model dimensions must be positive");
  expect_shape(F, n_, n_, "F");
  expect_shape(G, n_, q_, "G");
  expect_shape(H, p_, n_, "H");
  expect_shape(K, p_, p_, "K");
  expect_shape(Q, q_, q_, "Q");
  expect_shape(R, p_, p_, "R");
  expect_shape(NF, uF(), n_, "N_F");
  expect_shape(NG, uF(), q_, "N_G");
  expect_shape(NH, uH(), n_, "N_H");
  expect_shape(NK, uH(), p_, "N_K");
  expect_spd(Q, "Q");
  expect_spd(R, "R");
  expect_envelope_rows(NF, NG, "state");
  expect_envelope_rows(NH, NK, "measurement");
}

BlockLayout block_layout(Index n, Index q, Index p, Index uF, Index uH) {
  const std::array<Index, 7> len{n, q + p, n + p, uF + uH, n, q + p, n};
  BlockLayout b;
  b.offsets[0] = 0;
  for (std::size_t i = 0; i < len.size(); ++i) b.offsets[i + 1] = b.offsets[i] + len[i];
  return b;
}

AugmentedSystem assemble_augmented(const UncertainModel& model, const FilterState& state,
                                   const Vec& z) {
  model.validate();
  check_state(model, state, z);
  const Index n = model.n(), q = model.q(), p = model.p();
  const Index uF = model.uF(), uH = model.uH();
  const BlockLayout b = block_layout(n, q, p, uF, uH);
  const Index M = b.size();

  // Stacked blocks of the recursion.
  Mat calF(n + p, n);
  calF << model.F, model.H;
  Mat calG = Mat::Zero(n + p, q + p);
  calG.topLeftCorner(n, q) = model.G;
  calG.bottomRightCorner(p, p) = model.K;
  Mat calE = Mat::Zero(n + p, n);
  calE.topRows(n) = -Mat::Identity(n, n);
  Mat NcalF(uF + uH, n);
  NcalF << model.NF, model.NH;
  Mat NcalG = Mat::Zero(uF + uH, q + p);
  NcalG.topLeftCorner(uF, q) = model.NG;
  NcalG.bottomRightCorner(uH, p) = model.NK;
  Mat calR = Mat::Zero(q + p, q + p);
  calR.topLeftCorner(q, q) = symmetrize(model.Q);
  calR.bottomRightCorner(p, p) = symmetrize(model.R);

  AugmentedSystem sys;
  sys.blocks = b;
  Mat& A = sys.A;
  A = Mat::Zero(M, M);
  auto blk = [&](int r, int c) {
    return A.block(b.begin(r), b.begin(c), b.length(r), b.length(c));
  };
  blk(0, 0) = symmetrize(state.P_pred);
  blk(0, 4) = Mat::Identity(n, n);
  blk(1, 1) = calR;
  blk(1, 5) = Mat::Identity(q + p, q + p);
  blk(2, 4) = calF;
  blk(2, 5) = calG;
  blk(2, 6) = calE;
  blk(3, 4) = NcalF;
  blk(3, 5) = NcalG;
  blk(4, 0) = Mat::Identity(n, n);
  blk(4, 2) = calF.transpose();
  blk(4, 3) = NcalF.transpose();
  blk(5, 1) = Mat::Identity(q + p, q + p);
  blk(5, 2) = calG.transpose();
  blk(5, 3) = NcalG.transpose();
  blk(6, 2) = calE.transpose();

  const Vec& x = state.x_pred;
  Vec predicted = model.transition_fn ? model.transition_fn(x) : Vec(model.F * x);
  Vec expected = model.measurement_fn ? model.measurement_fn(x) : Vec(model.H * x);
  if (predicted.size() != n) throw DimensionMismatch("transition_fn returned wrong length");
  if (expected.size() != p) throw DimensionMismatch("measurement_fn returned wrong length");

  sys.B = Mat::Zero(M, n + 1);
  sys.B.col(0).segment(b.begin(2), n) = -predicted;
  sys.B.col(0).segment(b.begin(2) + n, p) = z - expected;
  sys.B.col(0).segment(b.begin(3), uF) = -(model.NF * x);
  sys.B.col(0).segment(b.begin(3) + uF, uH) = -(model.NH * x);
  sys.B.block(b.begin(6), 1, n, n) = -Mat::Identity(n, n);
  return sys;
}

StepOutput erkf_step_givens(const UncertainModel& model, const FilterState& state, const Vec& z,
                            const StepOptions& options) {
  const AugmentedSystem sys = assemble_augmented(model, state, z);
  const Index n = model.n();
  const Index M = sys.M();
  const Index t0 = state_tail(sys.blocks);
  linalg::FlopCounter* fc = options.counter;

  Vec col0;
  Mat p_cols(n, n);
  if (options.schedule == linalg::Schedule::kPerColumn) {
    Mat augmented(M, M + 1);
    augmented.leftCols(M) = sys.A;
    for (Index l = 0; l <= n; ++l) {
      augmented.col(M) = sys.B.col(l);
      const linalg::QrResult qr = linalg::qr_triangularize(augmented, fc);
      const double scale = linalg::max_abs(qr.r);
      if (l == 0) {
        col0 = linalg::back_substitute_tail(qr.r, qr.z, t0, scale, fc);
      } else {
        p_cols.col(l - 1) = linalg::back_substitute_tail(qr.r, qr.z, n, scale, fc);
      }
    }
  } else {
    const linalg::GivensQr qr = linalg::GivensQr::factor(sys.A, fc);
    const double scale = linalg::max_abs(qr.r());
    for (Index l = 0; l <= n; ++l) {
      Vec rhs = sys.B.col(l);
      qr.apply(std::span<double>(rhs.data(), static_cast<std::size_t>(rhs.size())), fc);
      if (l == 0) {
        col0 = linalg::back_substitute_tail(qr.r(), rhs, t0, scale, fc);
      } else {
        p_cols.col(l - 1) = linalg::back_substitute_tail(qr.r(), rhs, n, scale, fc);
      }
    }
  }
  return unpack(state, col0, p_cols);
}

StepOutput erkf_step_oracle(const UncertainModel& model, const FilterState& state, const Vec& z,
                            const StepOptions& options) {
  const AugmentedSystem sys = assemble_augmented(model, state, z);
  const Index n = model.n();
  const Index M = sys.M();
  const Index t0 = state_tail(sys.blocks);
  const Mat inv = linalg::gaussian_inverse(sys.A, options.counter, options.schedule);

  // Row selector applied to A^{-1} B: blocks 5-7 of column 0, block 7 of the
  // covariance columns.
  const Vec col0 = inv.bottomRows(t0) * sys.B.col(0);
  const Mat p_cols = inv.bottomRows(n) * sys.B.rightCols(n);
  if (options.counter != nullptr) {
    const auto products = static_cast<std::uint64_t>(t0 + n * n);
    options.counter->muls += products * static_cast<std::uint64_t>(M);
    options.counter->adds += products * static_cast<std::uint64_t>(M - 1);
  }
  return unpack(state, col0, p_cols);
}

StepOutput erkf_step(Backend backend, const UncertainModel& model, const FilterState& state,
                     const Vec& z, const StepOptions& options) {
  return backend == Backend::kGivens ? erkf_step_givens(model, state, z, options)
                                     : erkf_step_oracle(model, state, z, options);
}

StepOutput erkf_step_scaled(Backend backend, const UncertainModel& model,
                            const FilterState& state, const Vec& z, const Vec& state_scale,
                            const Vec& measurement_scale, const StepOptions& options) {
  const Index n = model.n(), p = model.p();
  if (state_scale.size() != n || measurement_scale.size() != p) {
    throw DimensionMismatch("scale vectors must have lengths n and p");
  }
  if (!(state_scale.array() > 0.0).all() || !(measurement_scale.array() > 0.0).all() ||
      !state_scale.allFinite() || !measurement_scale.allFinite()) {
    throw ModelError("scale factors must be positive and finite");
  }
  const auto s = state_scale.asDiagonal();
  const Vec s_inv_v = state_scale.cwiseInverse();
  const auto s_inv = s_inv_v.asDiagonal();
  const auto t = measurement_scale.asDiagonal();

  UncertainModel m = model;
  m.F = s * model.F * s_inv;
  m.G = s * model.G;
  m.H = t * model.H * s_inv;
  // The measurement noise is rescaled with the measurement: v' = T v.
  const Vec t_inv_v = measurement_scale.cwiseInverse();
  const auto t_inv = t_inv_v.asDiagonal();
  m.K = t * model.K * t_inv;
  m.R = t * model.R * t;
  m.NF = model.NF * s_inv;
  m.NH = model.NH * s_inv;
  m.NK = model.NK * t_inv;
  if (model.transition_fn) {
    m.transition_fn = [f = model.transition_fn, state_scale, s_inv_v](const Vec& x) -> Vec {
      return state_scale.cwiseProduct(f(s_inv_v.cwiseProduct(x)));
    };
  }
  if (model.measurement_fn) {
    m.measurement_fn = [h = model.measurement_fn, measurement_scale, s_inv_v](const Vec& x) -> Vec {
      return measurement_scale.cwiseProduct(h(s_inv_v.cwiseProduct(x)));
    };
  }
  FilterState st;
  st.x_pred = state_scale.cwiseProduct(state.x_pred);
  st.P_pred = s * state.P_pred * s;
  const Vec zs = measurement_scale.cwiseProduct(z);

  StepOutput out = erkf_step(backend, m, st, zs, options);
  out.x_filtered = s_inv * out.x_filtered;
  out.x_pred_next = s_inv * out.x_pred_next;
  out.P_pred_next = symmetrize(s_inv * out.P_pred_next * s_inv);
  return out;
}

ModelDims dims_for_size(Index M) {
  constexpr Index q = 6, p = 3, uH = 1;
  const Index fixed = 2 * (q + p) + p + 1 + uH;  // with u_F = 1
  if (M < fixed + 4) {
    throw DimensionMismatch("augmented size " + std::to_string(M) + " too small (minimum " +
                            std::to_string(fixed + 4) + ")");
  }
  ModelDims d;
  d.q = q;
  d.p = p;
  d.uH = uH;
  d.n = (M - fixed) / 4;
  d.uF = 1 + (M - fixed) - 4 * d.n;
  return d;
}

double predicted_givens_flops(Index n, Index M) {
  const double m = static_cast<double>(M);
  const double nn = static_cast<double>(n);
  return (nn + 1.0) * (2.0 * m * m * m + nn * nn);
}

double predicted_inverse_flops(Index M) {
  const double m = static_cast<double>(M);
  return 2.0 * m * m * m * m / 3.0;
}

RandomInstance random_instance(const ModelDims& d, std::uint64_t seed) {
  Rng rng(seed);
  auto randn = [&](Index r, Index c, double sigma) {
    Mat m(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) m(i, j) = rng.normal(sigma);
    return m;
  };
  auto spd = [&](Index k, double jitter) {
    const Mat l = randn(k, k, 0.3);
    return Mat(symmetrize(l * l.transpose() + jitter * Mat::Identity(k, k)));
  };
  RandomInstance inst;
  UncertainModel& m = inst.model;
  m.F = 0.9 * Mat::Identity(d.n, d.n) + randn(d.n, d.n, 0.05);
  m.G = randn(d.n, d.q, 0.3);
  m.H = randn(d.p, d.n, 1.0);
  m.K = Mat::Identity(d.p, d.p);
  m.Q = spd(d.q, 0.5);
  m.R = spd(d.p, 0.5);
  m.NF = randn(d.uF, d.n, 0.1);
  m.NG = randn(d.uF, d.q, 0.1);
  m.NH = randn(d.uH, d.n, 0.1);
  m.NK = randn(d.uH, d.p, 0.1);
  inst.state.x_pred = randn(d.n, 1, 1.0);
  inst.state.P_pred = spd(d.n, 0.2);
  inst.z = randn(d.p, 1, 1.0);
  return inst;
}

FlopReport flop_report(const ModelDims& dims, std::uint64_t seed) {
  const RandomInstance inst = random_instance(dims, seed);
  FlopReport rep;
  rep.dims = dims;
  auto measure = [&](Backend backend, linalg::Schedule schedule) {
    linalg::FlopCounter fc;
    erkf_step(backend, inst.model, inst.state, inst.z, StepOptions{schedule, &fc});
    return fc.total();
  };
  rep.givens_flops = measure(Backend::kGivens, linalg::Schedule::kPerColumn);
  rep.inverse_flops = measure(Backend::kInverse, linalg::Schedule::kPerColumn);
  rep.givens_shared_flops = measure(Backend::kGivens, linalg::Schedule::kShared);
  rep.inverse_shared_flops = measure(Backend::kInverse, linalg::Schedule::kShared);
  {
    linalg::FlopCounter fc;
    const AugmentedSystem sys = assemble_augmented(inst.model, inst.state, inst.z);
    linalg::GivensQr::factor(sys.A, &fc);
    rep.givens_factor_flops = fc.total();
  }
  rep.predicted_givens = predicted_givens_flops(dims.n, dims.M());
  rep.predicted_inverse = predicted_inverse_flops(dims.M());
  return rep;
}

}  // namespace erkf
