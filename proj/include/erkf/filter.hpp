#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "erkf/linalg.hpp"

namespace erkf {

/// Nominal model, uncertainty envelopes and noise weights for one step of
///
///   x+ = (F + dF) x + (G + dG) w,   z = (H + dH) x + (K + dK) v,
///   [dF dG] = M1 D1 [N_F N_G],      [dH dK] = M2 D2 [N_H N_K].
///
/// The filter never sees M1, M2 or the contractions; only the N rows. Every
/// envelope row enters the augmented system as a hard constraint whose
/// strength does not depend on the row's scale, so an all-zero row is
/// rejected; an equation without uncertainty has no rows (u_F or u_H = 0).
struct UncertainModel {
  Mat F, G, H, K;
  Mat Q, R;
  Mat NF, NG, NH, NK;

  /// Optional nonlinear measurement h(x); replaces H x in the innovation.
  std::function<Vec(const Vec&)> measurement_fn;
  /// Optional nonlinear transition f(x); replaces F x in the predicted
  /// state. F stays the Jacobian used everywhere else.
  std::function<Vec(const Vec&)> transition_fn;

  Index n() const { return F.rows(); }
  Index q() const { return G.cols(); }
  Index p() const { return H.rows(); }
  Index uF() const { return NF.rows(); }
  Index uH() const { return NH.rows(); }

  /// Throws ModelError (or DimensionMismatch) when dimensions disagree, Q or
  /// R is not symmetric positive definite, or an envelope row is all zero.
  /// Empty envelopes are allowed.
  void validate() const;
};

/// Second-order, non-robust part of an envelope, used only to perturb
/// synthetic data.
struct UncertaintyEnvelope {
  Mat M1, M2;
  double delta1_bound = 0.5;
  double delta2_bound = 0.5;
};

struct FilterState {
  Vec x_pred;  // x(k|k-1)
  Mat P_pred;  // P(k|k-1)
};

/// Boundaries of the seven block rows/columns of the augmented system:
/// block b spans [offsets[b], offsets[b+1]).
struct BlockLayout {
  std::array<Index, 8> offsets{};
  Index size() const { return offsets[7]; }
  Index begin(int block) const { return offsets[static_cast<std::size_t>(block)]; }
  Index length(int block) const {
    return offsets[static_cast<std::size_t>(block) + 1] - offsets[static_cast<std::size_t>(block)];
  }
};

BlockLayout block_layout(Index n, Index q, Index p, Index uF, Index uH);

struct AugmentedSystem {
  Mat A;  // M x M, symmetric
  Mat B;  // M x (n+1)
  BlockLayout blocks;
  Index M() const { return blocks.size(); }
};

struct StepOutput {
  Vec x_filtered;   // x(k|k)
  Vec x_pred_next;  // x(k+1|k)
  Mat P_pred_next;  // P(k+1|k)
};

enum class Backend { kGivens, kInverse };

struct StepOptions {
  linalg::Schedule schedule = linalg::Schedule::kShared;
  linalg::FlopCounter* counter = nullptr;
};

AugmentedSystem assemble_augmented(const UncertainModel& model, const FilterState& state,
                                   const Vec& z);

/// One recursion step solved by Givens QR with partial back-substitution.
StepOutput erkf_step_givens(const UncertainModel& model, const FilterState& state, const Vec& z,
                            const StepOptions& options = {});

/// One recursion step evaluated through the explicit inverse of A.
StepOutput erkf_step_oracle(const UncertainModel& model, const FilterState& state, const Vec& z,
                            const StepOptions& options = {});

StepOutput erkf_step(Backend backend, const UncertainModel& model, const FilterState& state,
                     const Vec& z, const StepOptions& options = {});

/// Same step solved in rescaled coordinates x' = diag(state_scale) x and
/// z' = diag(measurement_scale) z (the measurement noise v scaled along with
/// z), with the result mapped back. The estimate
/// is equivariant under such a change of units, so only the conditioning of
/// the augmented system changes.
StepOutput erkf_step_scaled(Backend backend, const UncertainModel& model,
                            const FilterState& state, const Vec& z, const Vec& state_scale,
                            const Vec& measurement_scale, const StepOptions& options = {});

struct ModelDims {
  Index n = 0, q = 0, p = 0, uF = 1, uH = 1;
  Index M() const { return 4 * n + 2 * (q + p) + p + uF + uH; }
};

/// Dimensions used for a requested augmented size M: q = 6, p = 3, u_H = 1,
/// the largest n that fits, and the remainder in u_F. Reproduces the attitude
/// (47) and position (59) systems exactly.
ModelDims dims_for_size(Index M);

struct FlopReport {
  ModelDims dims;
  std::uint64_t givens_flops = 0;         // per-column triangularization, one step
  std::uint64_t inverse_flops = 0;        // per-column elimination, one step
  std::uint64_t givens_shared_flops = 0;  // one factorization replayed
  std::uint64_t inverse_shared_flops = 0; // one elimination replayed
  std::uint64_t givens_factor_flops = 0;  // triangularization of A alone
  double predicted_givens = 0.0;          // (n+1)(2M^3 + n^2)
  double predicted_inverse = 0.0;         // 2M^4 / 3
};

double predicted_givens_flops(Index n, Index M);
double predicted_inverse_flops(Index M);

/// Random but valid model/state/measurement of the given dimensions.
struct RandomInstance {
  UncertainModel model;
  FilterState state;
  Vec z;
};
RandomInstance random_instance(const ModelDims& dims, std::uint64_t seed);

FlopReport flop_report(const ModelDims& dims, std::uint64_t seed = 1);

Mat symmetrize(const Mat& p);

}  // namespace erkf
