#include "erkf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace erkf::linalg {

namespace {

void count(FlopCounter* fc, std::uint64_t adds, std::uint64_t muls, std::uint64_t divs,
           std::uint64_t sqrts = 0) {
  if (fc == nullptr) return;
  fc->adds += adds;
  fc->muls += muls;
  fc->divs += divs;
  fc->sqrts += sqrts;
}

struct RotationSink {
  virtual void rotation(Index pivot, Index target, const GivensCoeffs& g) = 0;
  virtual void negation(Index row) = 0;

 protected:
  ~RotationSink() = default;
};

// Triangularizes the leading m x m block of `w` in place, carrying any extra
// columns (right-hand sides) along. Rotations are applied over all columns of
// `w` from the pivot column on.
void triangularize(Mat& w, Index m, RotationSink* sink, FlopCounter* fc) {
  const Index cols = w.cols();
  double* data = w.data();
  for (Index j = 0; j < m; ++j) {
    double* pivot_row = data + j * cols;
    for (Index i = m - 1; i > j; --i) {
      double* target_row = data + i * cols;
      const double b = target_row[j];
      if (b == 0.0) continue;
      const GivensCoeffs g = givens_coeffs(pivot_row[j], b, fc);
      pivot_row[j] = g.r;
      target_row[j] = 0.0;
      const double c = g.c;
      const double s = g.s;
      for (Index k = j + 1; k < cols; ++k) {
        const double x = pivot_row[k];
        const double y = target_row[k];
        pivot_row[k] = c * x + s * y;
        target_row[k] = -s * x + c * y;
      }
      const auto span = static_cast<std::uint64_t>(cols - j - 1);
      count(fc, 2 * span, 4 * span, 0);
      if (sink != nullptr) sink->rotation(j, i, g);
    }
  }
  for (Index i = 0; i < m; ++i) {
    if (w(i, i) < 0.0) {
      w.row(i).tail(cols - i) *= -1.0;
      if (sink != nullptr) sink->negation(i);
    }
  }
}

void check_finite(const Mat& a, const char* what) {
  if (!a.allFinite()) throw DimensionMismatch(std::string(what) + ": non-finite entry");
}

}  // namespace

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

GivensCoeffs givens_coeffs(double a, double b, FlopCounter* counter) {
  if (b == 0.0) {
    // r >= 0 wins over the identity when a is negative.
    return a < 0.0 ? GivensCoeffs{-1.0, 0.0, -a} : GivensCoeffs{1.0, 0.0, a};
  }
  if (a == 0.0) {
    return GivensCoeffs{0.0, b > 0.0 ? 1.0 : -1.0, std::abs(b)};
  }
  const double scale = std::max(std::abs(a), std::abs(b));
  const double u = a / scale;
  const double v = b / scale;
  const double r = scale * std::sqrt(u * u + v * v);
  count(counter, 1, 3, 4, 1);
  return GivensCoeffs{a / r, b / r, r};
}

QrResult qr_triangularize(const Mat& augmented, FlopCounter* counter) {
  const Index m = augmented.rows();
  if (m < 1 || augmented.cols() != m + 1) {
    throw DimensionMismatch("qr_triangularize expects m x (m+1), got " +
                            std::to_string(augmented.rows()) + "x" +
                            std::to_string(augmented.cols()));
  }
  Mat w = augmented;
  triangularize(w, m, nullptr, counter);
  return QrResult{w.leftCols(m), w.col(m)};
}

GivensQr GivensQr::factor(const Mat& a, FlopCounter* counter) {
  if (a.rows() < 1 || a.rows() != a.cols()) {
    throw DimensionMismatch("GivensQr::factor expects a square matrix");
  }
  struct Recorder final : RotationSink {
    GivensQr* qr;
    void rotation(Index pivot, Index target, const GivensCoeffs& g) override {
      qr->rotations_.push_back({pivot, target, g.c, g.s});
    }
    void negation(Index row) override { qr->negated_rows_.push_back(row); }
  };
  GivensQr qr;
  qr.r_ = a;
  Recorder rec;
  rec.qr = &qr;
  triangularize(qr.r_, a.rows(), &rec, counter);
  return qr;
}

void GivensQr::apply(std::span<double> column, FlopCounter* counter) const {
  if (static_cast<Index>(column.size()) != size()) {
    throw DimensionMismatch("GivensQr::apply: column length mismatch");
  }
  for (const Rotation& rot : rotations_) {
    const double x = column[rot.pivot];
    const double y = column[rot.target];
    column[rot.pivot] = rot.c * x + rot.s * y;
    column[rot.target] = -rot.s * x + rot.c * y;
  }
  count(counter, 2 * rotations_.size(), 4 * rotations_.size(), 0);
  for (Index row : negated_rows_) column[row] = -column[row];
}

Vec back_substitute_tail(const Mat& r, const Vec& z, Index tail, FlopCounter* counter) {
  return back_substitute_tail(r, z, tail, max_abs(r), counter);
}

Vec back_substitute_tail(const Mat& r, const Vec& z, Index tail, double scale,
                         FlopCounter* counter) {
  const Index m = r.rows();
  if (r.cols() != m || z.size() != m) {
    throw DimensionMismatch("back_substitute_tail: R must be square and match z");
  }
  if (tail < 0 || tail > m) throw DimensionMismatch("back_substitute_tail: tail out of range");
  const Index offset = m - tail;
  const double threshold = kPivotTolerance * scale;
  Vec y(tail);
  for (Index i = m - 1; i >= offset; --i) {
    const double pivot = r(i, i);
    if (!(std::abs(pivot) > threshold)) throw SingularPivot(i);
    const double* row = r.data() + i * m;
    double acc = z(i);
    for (Index j = i + 1; j < m; ++j) acc -= row[j] * y(j - offset);
    y(i - offset) = acc / pivot;
    const auto len = static_cast<std::uint64_t>(m - 1 - i);
    count(counter, len, len, 1);
  }
  return y;
}

namespace {

// Row operations of one Gaussian elimination, replayable on right-hand sides.
struct Elimination {
  Mat upper;                       // U, strictly lower part unused
  std::vector<Index> pivots;       // row swapped into position k at step k
  Mat multipliers;                 // l(i, k)
  std::vector<unsigned char> used; // a(i, k) != 0 at step k
};

// One elimination pass over `w`; when `rhs` is given it is transformed
// alongside with exactly the operations replay() performs.
void eliminate(Mat& w, Vec* rhs, Elimination* rec, double threshold, FlopCounter* fc) {
  const Index m = w.rows();
  double* data = w.data();
  for (Index k = 0; k < m; ++k) {
    Index p = k;
    double best = std::abs(w(k, k));
    for (Index i = k + 1; i < m; ++i) {
      const double v = std::abs(w(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (!(best > threshold)) {
      throw SingularMatrix("gaussian elimination: no pivot in column " + std::to_string(k));
    }
    if (p != k) {
      w.row(k).swap(w.row(p));
      if (rhs != nullptr) std::swap((*rhs)(k), (*rhs)(p));
    }
    if (rec != nullptr) rec->pivots[k] = p;
    const double* pivot_row = data + k * m;
    const double pivot = pivot_row[k];
    for (Index i = k + 1; i < m; ++i) {
      double* row = data + i * m;
      if (row[k] == 0.0) continue;
      const double l = row[k] / pivot;
      row[k] = 0.0;
      for (Index j = k + 1; j < m; ++j) row[j] -= l * pivot_row[j];
      const auto len = static_cast<std::uint64_t>(m - k - 1);
      count(fc, len, len, 1);
      if (rhs != nullptr) {
        (*rhs)(i) -= l * (*rhs)(k);
        count(fc, 1, 1, 0);
      }
      if (rec != nullptr) {
        rec->multipliers(i, k) = l;
        rec->used[i * m + k] = 1;
      }
    }
  }
}

void replay(const Elimination& e, Vec& rhs, FlopCounter* fc) {
  const Index m = e.upper.rows();
  for (Index k = 0; k < m; ++k) {
    const Index p = e.pivots[k];
    if (p != k) std::swap(rhs(k), rhs(p));
    for (Index i = k + 1; i < m; ++i) {
      if (!e.used[i * m + k]) continue;
      rhs(i) -= e.multipliers(i, k) * rhs(k);
      count(fc, 1, 1, 0);
    }
  }
}

void upper_solve(const Mat& u, Vec& x, FlopCounter* fc) {
  const Index m = u.rows();
  for (Index i = m - 1; i >= 0; --i) {
    const double* row = u.data() + i * m;
    double acc = x(i);
    for (Index j = i + 1; j < m; ++j) acc -= row[j] * x(j);
    x(i) = acc / row[i];
    const auto len = static_cast<std::uint64_t>(m - 1 - i);
    count(fc, len, len, 1);
  }
}

}  // namespace

Mat gaussian_inverse(const Mat& a, FlopCounter* counter, Schedule schedule) {
  const Index m = a.rows();
  if (m < 1 || a.cols() != m) throw DimensionMismatch("gaussian_inverse expects a square matrix");
  check_finite(a, "gaussian_inverse");
  const double threshold = kPivotTolerance * max_abs(a);
  Mat inv(m, m);
  if (schedule == Schedule::kPerColumn) {
    for (Index j = 0; j < m; ++j) {
      Mat w = a;
      Vec rhs = Vec::Unit(m, j);
      eliminate(w, &rhs, nullptr, threshold, counter);
      upper_solve(w, rhs, counter);
      inv.col(j) = rhs;
    }
    return inv;
  }
  Elimination e;
  e.upper = a;
  e.pivots.assign(static_cast<std::size_t>(m), 0);
  e.multipliers = Mat::Zero(m, m);
  e.used.assign(static_cast<std::size_t>(m * m), 0);
  eliminate(e.upper, nullptr, &e, threshold, counter);
  for (Index j = 0; j < m; ++j) {
    Vec rhs = Vec::Unit(m, j);
    replay(e, rhs, counter);
    upper_solve(e.upper, rhs, counter);
    inv.col(j) = rhs;
  }
  return inv;
}

Vec jacobi_eigenvalues(const Mat& p) {
  const Index n = p.rows();
  if (n < 1 || p.cols() != n) throw DimensionMismatch("jacobi: square matrix required");
  Mat a = 0.5 * (p + p.transpose());
  const double fro = a.norm();
  if (fro == 0.0) return Vec::Zero(n);
  if (!std::isfinite(fro)) throw NoConvergence("jacobi: non-finite input");
  const double tol = 1e-14 * fro;
  auto off_max = [&] {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off = std::max(off, std::abs(a(i, j)));
    return off;
  };
  for (int sweep = 0;; ++sweep) {
    if (off_max() < tol) break;
    if (sweep == kJacobiSweepLimit) {
      throw NoConvergence("jacobi: no convergence after " + std::to_string(kJacobiSweepLimit) +
                          " sweeps");
    }
    for (Index p_ = 0; p_ < n; ++p_) {
      for (Index q = p_ + 1; q < n; ++q) {
        const double apq = a(p_, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p_, p_)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a(p_, p_) -= t * apq;
        a(q, q) += t * apq;
        a(p_, q) = 0.0;
        a(q, p_) = 0.0;
        for (Index r = 0; r < n; ++r) {
          if (r == p_ || r == q) continue;
          const double arp = a(r, p_);
          const double arq = a(r, q);
          a(r, p_) = c * arp - s * arq;
          a(p_, r) = a(r, p_);
          a(r, q) = s * arp + c * arq;
          a(q, r) = a(r, q);
        }
      }
    }
  }
  return a.diagonal();
}

SingularValueExtrema singular_value_extrema(const Mat& p) {
  const Vec ev = jacobi_eigenvalues(p).cwiseAbs();
  return {ev.maxCoeff(), ev.minCoeff()};
}

}  // namespace erkf::linalg
