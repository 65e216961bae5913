#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "erkf/errors.hpp"

namespace erkf {

using Index = Eigen::Index;
/// Row-major so that the row rotations and row eliminations of the kernels
/// below walk contiguous memory.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

namespace linalg {

/// Scale-relative singularity threshold for pivots.
inline constexpr double kPivotTolerance = 1e-13;
inline constexpr int kJacobiSweepLimit = 100;

struct FlopCounter {
  std::uint64_t adds = 0;
  std::uint64_t muls = 0;
  std::uint64_t divs = 0;
  std::uint64_t sqrts = 0;

  std::uint64_t total() const { return adds + muls + divs + sqrts; }
  FlopCounter& operator+=(const FlopCounter& o) {
    adds += o.adds;
    muls += o.muls;
    divs += o.divs;
    sqrts += o.sqrts;
    return *this;
  }
};

/// How a factorization is shared between the right-hand columns of a
/// multi-column solve.
///
/// kPerColumn redoes the whole reduction for every column, exactly as the
/// cost model of the Givens and explicit-inverse methods assumes. kShared
/// reduces the matrix once and replays the recorded transformations on each
/// column. Both produce bit-identical results because every transformation
/// depends on the left-hand matrix only.
enum class Schedule { kPerColumn, kShared };

struct GivensCoeffs {
  double c = 1.0;
  double s = 0.0;
  double r = 0.0;
};

/// Rotation [c s; -s c] mapping (a, b) to (r, 0) with r >= 0.
GivensCoeffs givens_coeffs(double a, double b, FlopCounter* counter = nullptr);

struct QrResult {
  Mat r;  // upper triangular, m x m
  Vec z;  // rotated right-hand side
};

/// Triangularizes an augmented m x (m+1) matrix [A | b] by Givens rotations.
///
/// Columns are processed left to right; inside a column the sub-diagonal
/// entries are annihilated from the bottom row upward, each against the
/// diagonal row. Entries that are already exactly zero are skipped. A final
/// sign pass makes the diagonal of R non-negative.
QrResult qr_triangularize(const Mat& augmented, FlopCounter* counter = nullptr);

/// Recorded Givens triangularization of a square matrix, replayable on any
/// number of right-hand columns.
class GivensQr {
 public:
  static GivensQr factor(const Mat& a, FlopCounter* counter = nullptr);

  const Mat& r() const { return r_; }
  Index size() const { return r_.rows(); }
  std::size_t rotation_count() const { return rotations_.size(); }

  /// Applies the recorded rotations (and sign pass) to `column` in place.
  void apply(std::span<double> column, FlopCounter* counter = nullptr) const;

 private:
  struct Rotation {
    Index pivot;
    Index target;
    double c;
    double s;
  };
  Mat r_;
  std::vector<Rotation> rotations_;
  std::vector<Index> negated_rows_;
};

/// Last `tail` entries of the solution of R y = z. Only rows m-1 down to
/// m-tail are touched.
Vec back_substitute_tail(const Mat& r, const Vec& z, Index tail, FlopCounter* counter = nullptr);

/// Same, with the pivot scale (max |R_ij|) supplied by the caller so it is not
/// recomputed for every right-hand column.
Vec back_substitute_tail(const Mat& r, const Vec& z, Index tail, double scale,
                         FlopCounter* counter = nullptr);

/// Inverse by Gaussian elimination with partial pivoting.
Mat gaussian_inverse(const Mat& a, FlopCounter* counter = nullptr,
                     Schedule schedule = Schedule::kShared);

struct SingularValueExtrema {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
};

/// Largest and smallest singular values of a symmetric matrix by cyclic
/// Jacobi on (P + P^T) / 2.
SingularValueExtrema singular_value_extrema(const Mat& p);

/// Eigenvalues of (P + P^T) / 2, unsorted, by cyclic Jacobi.
Vec jacobi_eigenvalues(const Mat& p);

double max_abs(const Mat& m);

}  // namespace linalg
}  // namespace erkf
