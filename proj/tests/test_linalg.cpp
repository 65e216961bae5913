#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "erkf/linalg.hpp"
#include "oracles.hpp"

using namespace erkf;
using namespace erkf::linalg;

TEST_CASE("givens_coeffs reference cases") {
  auto g = givens_coeffs(1.0, 0.0);
  CHECK(g.c == 1.0);
  CHECK(g.s == 0.0);
  CHECK(g.r == 1.0);

  g = givens_coeffs(0.0, 1.0);
  CHECK(g.c == doctest::Approx(0.0));
  CHECK(g.s == 1.0);
  CHECK(g.r == 1.0);

  g = givens_coeffs(3.0, 4.0);
  CHECK(g.c == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g.s == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(g.r == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(g.c * 3.0 + g.s * 4.0 == doctest::Approx(g.r));
  CHECK(std::abs(-g.s * 3.0 + g.c * 4.0) < 1e-15);
}

TEST_CASE("givens_coeffs keeps r non-negative and handles degenerate input") {
  auto g = givens_coeffs(-2.0, 0.0);
  CHECK(g.r == 2.0);
  CHECK(g.c * -2.0 == doctest::Approx(g.r));

  g = givens_coeffs(0.0, 0.0);
  CHECK(g.c == 1.0);
  CHECK(g.s == 0.0);
  CHECK(g.r == 0.0);

  // Scaling avoids overflow of a^2 + b^2.
  g = givens_coeffs(1e300, 1e300);
  CHECK(std::isfinite(g.r));
  CHECK(g.r == doctest::Approx(std::sqrt(2.0) * 1e300));
  g = givens_coeffs(1e-300, -1e-300);
  CHECK(g.r > 0.0);
}

TEST_CASE("givens rotations are orthonormal and annihilate b") {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> nd(0.0, 10.0);
  for (int i = 0; i < 10000; ++i) {
    const double a = nd(gen), b = nd(gen);
    const auto g = givens_coeffs(a, b);
    CHECK(std::abs(g.c * g.c + g.s * g.s - 1.0) < 1e-14);
    CHECK(g.r >= 0.0);
    CHECK(std::abs(-g.s * a + g.c * b) <= 1e-14 * g.r);
    CHECK(std::abs(g.c * a + g.s * b - g.r) <= 1e-14 * g.r);
  }
}

TEST_CASE("qr_triangularize reference cases") {
  Mat m = Mat::Zero(3, 4);
  m.leftCols(3) = Mat::Identity(3, 3);
  m(0, 3) = 1.0;
  FlopCounter fc;
  auto res = qr_triangularize(m, &fc);
  CHECK(res.r == Mat::Identity(3, 3));
  CHECK(res.z == Vec::Unit(3, 0));
  CHECK(fc.total() == 0);  // nothing below the diagonal to annihilate

  Mat swap(2, 3);
  swap << 0, 1, 1,
          1, 0, 0;
  res = qr_triangularize(swap);
  CHECK(res.r.isApprox(Mat::Identity(2, 2)));
  CHECK(std::abs(res.z(0)) < 1e-16);
  CHECK(res.z(1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(qr_triangularize(Mat::Zero(3, 3)), DimensionMismatch);
  CHECK_THROWS_AS(qr_triangularize(Mat::Zero(3, 5)), DimensionMismatch);
}

TEST_CASE("qr_triangularize output is upper triangular and norm preserving") {
  std::mt19937_64 gen(5);
  for (Index m : {5, 20, 47}) {
    const Mat aug = oracle::random_matrix(gen, m, m + 1);
    const auto res = qr_triangularize(aug);
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < i; ++j) CHECK(res.r(i, j) == 0.0);
      CHECK(res.r(i, i) >= 0.0);
    }
    const double before = aug.norm();
    const double after = std::sqrt(res.r.squaredNorm() + res.z.squaredNorm());
    CHECK(std::abs(after - before) / before < 1e-12);
  }
}

TEST_CASE("solve via QR and back-substitution has a small residual") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Index m = 5 + trial % 30;
    const Mat a = oracle::random_well_conditioned(gen, m);
    const Vec b = oracle::random_matrix(gen, m, 1);
    Mat aug(m, m + 1);
    aug << a, b;
    const auto res = qr_triangularize(aug);
    const Vec y = back_substitute_tail(res.r, res.z, m);
    CHECK((a * y - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>() < 1e-10);
    // Oracle agreement with an independent LU solve.
    const Vec ref = Eigen::MatrixXd(a).partialPivLu().solve(Eigen::VectorXd(b));
    CHECK((y - ref).lpNorm<Eigen::Infinity>() <= 1e-9 * ref.lpNorm<Eigen::Infinity>());
  }
}

TEST_CASE("back_substitute_tail reference cases") {
  Vec y = back_substitute_tail(Mat::Identity(3, 3), Vec::LinSpaced(3, 1, 3), 2);
  REQUIRE(y.size() == 2);
  CHECK(y(0) == 2.0);
  CHECK(y(1) == 3.0);

  Mat r(2, 2);
  r << 2, 1,
       0, 4;
  Vec z(2);
  z << 4, 8;
  y = back_substitute_tail(r, z, 2);
  CHECK(y(0) == 1.0);
  CHECK(y(1) == 2.0);

  Mat singular(2, 2);
  singular << 1, 5,
              0, 0;
  Vec ones = Vec::Ones(2);
  try {
    back_substitute_tail(singular, ones, 1);
    FAIL("expected SingularPivot");
  } catch (const SingularPivot& e) {
    CHECK(e.row() == 1);
  }
  // A singular row above the tail is never touched.
  Mat upper(2, 2);
  upper << 0, 1,
           0, 1;
  CHECK(back_substitute_tail(upper, ones, 1)(0) == 1.0);
  CHECK_THROWS_AS(back_substitute_tail(upper, ones, 3), DimensionMismatch);
}

TEST_CASE("partial back-substitution equals the tail of the full solve exactly") {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 30;
    Mat aug(m, m + 1);
    aug << oracle::random_well_conditioned(gen, m), oracle::random_matrix(gen, m, 1);
    const auto res = qr_triangularize(aug);
    const Vec full = back_substitute_tail(res.r, res.z, m);
    for (Index t : {1, 5, 17, 29}) {
      const Vec part = back_substitute_tail(res.r, res.z, t);
      CHECK(part == full.tail(t));
    }
  }
}

TEST_CASE("GivensQr replay matches direct triangularization bit for bit") {
  std::mt19937_64 gen(3);
  const Index m = 25;
  const Mat a = oracle::random_matrix(gen, m, m);
  const Vec b = oracle::random_matrix(gen, m, 1);
  Mat aug(m, m + 1);
  aug << a, b;
  const auto direct = qr_triangularize(aug);
  const auto qr = GivensQr::factor(a);
  Vec z = b;
  qr.apply(std::span<double>(z.data(), static_cast<std::size_t>(z.size())));
  CHECK(qr.r() == direct.r);
  CHECK(z == direct.z);
  CHECK(qr.rotation_count() > 0);
}

TEST_CASE("gaussian_inverse reference cases") {
  CHECK(gaussian_inverse(Mat::Identity(4, 4)) == Mat::Identity(4, 4));
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const Mat inv = gaussian_inverse(d);
  CHECK(inv(0, 0) == 0.5);
  CHECK(inv(1, 1) == 0.25);
  CHECK(inv(0, 1) == 0.0);

  Mat sing(2, 2);
  sing << 1, 2,
          2, 4;
  CHECK_THROWS_AS(gaussian_inverse(sing), SingularMatrix);
  CHECK_THROWS_AS(gaussian_inverse(Mat::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("gaussian_inverse multiply-back and schedule equivalence") {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat a = oracle::random_well_conditioned(gen, 20);
    const Mat inv = gaussian_inverse(a);
    CHECK((a * inv - Mat::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-10);
    const Mat per_col = gaussian_inverse(a, nullptr, Schedule::kPerColumn);
    CHECK(per_col == inv);
  }
}

TEST_CASE("singular_value_extrema reference cases") {
  Mat d = Mat::Zero(3, 3);
  d.diagonal() << 9, 4, 1;
  auto ex = singular_value_extrema(d);
  CHECK(ex.sigma_max == 9.0);
  CHECK(ex.sigma_min == 1.0);

  Mat s(2, 2);
  s << 2, 1,
       1, 2;
  ex = singular_value_extrema(s);
  CHECK(ex.sigma_max == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(ex.sigma_min == doctest::Approx(1.0).epsilon(1e-14));

  ex = singular_value_extrema(Mat::Zero(3, 3));
  CHECK(ex.sigma_max == 0.0);
  CHECK(ex.sigma_min == 0.0);
}

TEST_CASE("Jacobi extrema agree with a self-adjoint eigensolver") {
  std::mt19937_64 gen(29);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 12;
    Mat p = oracle::random_matrix(gen, n, n);
    p = p + p.transpose().eval();  // indefinite symmetric
    const auto ex = singular_value_extrema(p);
    const auto [smax, smin] = oracle::sigma_extrema(p);
    CHECK(ex.sigma_max == doctest::Approx(smax).epsilon(1e-12));
    CHECK(std::abs(ex.sigma_min - smin) < 1e-12 * smax);
  }
  // Asymmetric input is symmetrized first.
  Mat a(2, 2);
  a << 2, 0,
       2, 2;
  const auto ex = singular_value_extrema(a);
  CHECK(ex.sigma_max == doctest::Approx(3.0));
  CHECK(ex.sigma_min == doctest::Approx(1.0));
}

TEST_CASE("Jacobi rejects non-finite input") {
  Mat p = Mat::Identity(3, 3);
  p(1, 2) = p(2, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(singular_value_extrema(p), Error);
}

TEST_CASE("QR FLOP count grows as alpha * m^3") {
  std::mt19937_64 gen(31);
  for (Index m : {20, 40, 80}) {
    FlopCounter fc;
    qr_triangularize(oracle::random_matrix(gen, m, m + 1), &fc);
    const double alpha = static_cast<double>(fc.total()) / (double(m) * m * m);
    CHECK(alpha >= 1.5);
    CHECK(alpha <= 3.5);
    CHECK(fc.sqrts == static_cast<std::uint64_t>(m * (m - 1) / 2));
  }
}

TEST_CASE("FLOP counters accumulate") {
  FlopCounter a{1, 2, 3, 4};
  FlopCounter b{10, 20, 30, 40};
  a += b;
  CHECK(a.total() == 110);
}
