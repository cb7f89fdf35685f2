#include "smr/numerics.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace smr;
using Catch::Approx;

namespace {
constexpr double kPi = 3.14159265358979323846;

CxMatrix random_cx(Index r, Index c, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  CxMatrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = cx(nd(rng), nd(rng));
  return m;
}

// Direct O(n^4) centered unitary DFT.
CxMatrix brute_dft(const CxMatrix& x) {
  const Index R = x.rows(), C = x.cols();
  CxMatrix y(R, C);
  for (Index u = 0; u < R; ++u) {
    for (Index v = 0; v < C; ++v) {
      cx acc = 0;
      for (Index r = 0; r < R; ++r) {
        for (Index c = 0; c < C; ++c) {
          const double ph = -2 * kPi *
                            (double(u - R / 2) * double(r - R / 2) / R + double(v - C / 2) * double(c - C / 2) / C);
          acc += x(r, c) * std::polar(1.0, ph);
        }
      }
      y(u, v) = acc / std::sqrt(double(R * C));
    }
  }
  return y;
}

// Gaussian elimination with partial pivoting, independent of Eigen's solvers.
CxVector gauss_solve(CxMatrix a, CxVector b) {
  const Index n = a.rows();
  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    for (Index i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    }
    a.row(k).swap(a.row(piv));
    std::swap(b(k), b(piv));
    for (Index i = k + 1; i < n; ++i) {
      const cx f = a(i, k) / a(k, k);
      a.row(i) -= f * a.row(k);
      b(i) -= f * b(k);
    }
  }
  CxVector x(n);
  for (Index i = n - 1; i >= 0; --i) {
    cx s = b(i);
    for (Index j = i + 1; j < n; ++j) s -= a(i, j) * x(j);
    x(i) = s / a(i, i);
  }
  return x;
}

LinearOperator<CxVector> dense_op(const CxMatrix& m) {
  return {[m](const CxVector& x) { return CxVector(m * x); }, {m.cols()}, {m.rows()}};
}
} // namespace

TEST_CASE("fft2_centered impulse gives a flat spectrum", "[numerics][fft]") {
  CxMatrix x = CxMatrix::Zero(4, 4);
  x(2, 2) = 1.0;
  const CxMatrix y = fft2_centered(x);
  for (Index i = 0; i < y.size(); ++i) CHECK(std::abs(y.data()[i]) == Approx(0.25).margin(1e-14));
}

TEST_CASE("fft2_centered matches a direct DFT sum and is unitary", "[numerics][fft]") {
  for (auto [r, c] : {std::pair<Index, Index>{4, 4}, {6, 5}, {8, 3}}) {
    const CxMatrix x = random_cx(r, c, 7 + unsigned(r * c));
    const CxMatrix y = fft2_centered(x);
    CHECK((y - brute_dft(x)).norm() / y.norm() < 1e-12);
    CHECK(std::abs(y.norm() - x.norm()) / x.norm() < 1e-12);
    CHECK((ifft2_centered(y) - x).norm() / x.norm() < 1e-12);
  }
}

TEST_CASE("fft2_centered rejects non-2-D input", "[numerics][fft]") {
  ComplexArray a({4, 4, 2});
  CHECK_THROWS_AS(fft2_centered(a), ShapeError);
  CHECK_THROWS_AS(fft2_centered(CxMatrix::Zero(1, 4).eval()), ShapeError);
}

TEST_CASE("cg_solve on simple systems", "[numerics][cg]") {
  SECTION("identity converges in one iteration") {
    const CxVector y = random_cx(5, 1, 3);
    SolverTrace trace;
    const CxVector x = cg_solve(dense_op(CxMatrix::Identity(5, 5)), y, {1e-12, 10}, &trace);
    CHECK(trace.iterations == 1);
    CHECK((x - y).norm() < 1e-12);
  }
  SECTION("diagonal system") {
    CxMatrix d = CxMatrix::Zero(3, 3);
    d.diagonal() << 1.0, 2.0, 4.0;
    CxVector rhs(3);
    rhs << 1.0, 2.0, 4.0;
    const CxVector x = cg_solve(dense_op(d), rhs, {1e-10, 50});
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(x(i) - 1.0) < 1e-9);
  }
  SECTION("random SPD system matches Gaussian elimination") {
    const CxMatrix b = random_cx(8, 8, 11);
    const CxMatrix a = b.adjoint() * b + CxMatrix::Identity(8, 8);
    const CxVector rhs = random_cx(8, 1, 12);
    SolverTrace trace;
    const CxVector x = cg_solve(dense_op(a), rhs, {1e-13, 200}, &trace);
    CHECK((x - gauss_solve(a, rhs)).norm() < 1e-8);
    for (size_t k = 1; k < trace.residuals.size(); ++k) {
      CHECK(trace.residuals[k] <= trace.residuals[k - 1] * (1 + 1e-12));
      CHECK(trace.objective[k] <= trace.objective[k - 1] + 1e-12 * std::abs(trace.objective[k - 1]));
    }
  }
  SECTION("zero rhs returns zero immediately") {
    SolverTrace trace;
    const CxVector x = cg_solve(dense_op(CxMatrix::Identity(4, 4)), CxVector::Zero(4).eval(), {1e-6, 10}, &trace);
    CHECK(x.norm() == 0.0);
    CHECK(trace.iterations == 0);
  }
  SECTION("non-finite values raise a numerical error") {
    LinearOperator<CxVector> bad{[](const CxVector& x) {
      CxVector y = x;
      y(0) = std::numeric_limits<double>::quiet_NaN();
      return y;
    }};
    CHECK_THROWS_AS(cg_solve(bad, CxVector::Ones(3).eval(), {1e-6, 10}), NumericalError);
  }
}

TEST_CASE("cg_solve residuals are monotone on ill-conditioned systems", "[numerics][cg][property]") {
  for (unsigned seed = 0; seed < 10; ++seed) {
    const CxMatrix b = random_cx(20, 20, 100 + seed);
    CxMatrix a = b.adjoint() * b;
    a.diagonal().array() += 1e-4;
    SolverTrace trace;
    (void)cg_solve(dense_op(a), CxVector(random_cx(20, 1, 200 + seed)), {1e-14, 60}, &trace);
    for (size_t k = 1; k < trace.residuals.size(); ++k) {
      REQUIRE(trace.residuals[k] <= trace.residuals[k - 1] * (1 + 1e-10));
    }
  }
}

TEST_CASE("sym_eig", "[numerics][eig]") {
  SECTION("identity") {
    const auto e = sym_eig(Eigen::MatrixXd::Identity(3, 3));
    CHECK((e.values.array() - 1.0).abs().maxCoeff() < 1e-14);
  }
  SECTION("two-frame Laplacian") {
    Eigen::Matrix2d l;
    l << 1, -1, -1, 1;
    const auto e = sym_eig(l);
    CHECK(e.values(0) == Approx(0.0).margin(1e-14));
    CHECK(e.values(1) == Approx(2.0));
    CHECK(std::abs(e.vectors(0, 0) - e.vectors(1, 0)) < 1e-12);
  }
  SECTION("random Hermitian reassembles") {
    for (Index n : {6, 8}) {
      const CxMatrix b = random_cx(n, n, unsigned(n));
      const CxMatrix h = b + b.adjoint();
      const auto e = sym_eig(h);
      const CxMatrix back = e.vectors * e.values.cast<cx>().asDiagonal() * e.vectors.adjoint();
      CHECK((back - h).norm() / h.norm() < 1e-9);
      CHECK((e.vectors.adjoint() * e.vectors - CxMatrix::Identity(n, n)).norm() < 1e-9);
      for (Index i = 1; i < n; ++i) CHECK(e.values(i) >= e.values(i - 1));
      for (Index i = 0; i < n; ++i) {
        CHECK((h * e.vectors.col(i) - e.values(i) * e.vectors.col(i)).norm() < 1e-8);
      }
    }
  }
  SECTION("non-square input") { CHECK_THROWS_AS(sym_eig(Eigen::MatrixXd::Zero(2, 3)), ShapeError); }
}

TEST_CASE("svd_thin", "[numerics][svd]") {
  SECTION("diagonal") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d.diagonal() << 3, 1;
    const auto s = svd_thin(d);
    CHECK(s.S(0) == Approx(3.0));
    CHECK(s.S(1) == Approx(1.0));
  }
  SECTION("rank one") {
    const CxMatrix a = random_cx(5, 1, 1), b = random_cx(4, 1, 2);
    const auto s = svd_thin(CxMatrix(a * b.adjoint()));
    CHECK((s.S.array() > 1e-10).count() == 1);
  }
  SECTION("random reassembly") {
    for (auto [r, c] : {std::pair<Index, Index>{5, 3}, {8, 8}, {3, 7}}) {
      const CxMatrix m = random_cx(r, c, unsigned(r + 10 * c));
      const auto s = svd_thin(m);
      CHECK((s.U * s.S.cast<cx>().asDiagonal() * s.V.adjoint() - m).norm() / m.norm() < 1e-9);
      CHECK((s.U.adjoint() * s.U - CxMatrix::Identity(s.U.cols(), s.U.cols())).norm() < 1e-9);
      CHECK((s.V.adjoint() * s.V - CxMatrix::Identity(s.V.cols(), s.V.cols())).norm() < 1e-9);
      for (Index i = 1; i < s.S.size(); ++i) CHECK(s.S(i) <= s.S(i - 1));
      CHECK(s.S.minCoeff() >= 0);
    }
  }
}

TEST_CASE("pca_coil_compress", "[numerics][pca]") {
  SECTION("full basis keeps all energy") {
    const auto out = pca_coil_compress(random_cx(6, 300, 5), 6);
    CHECK(std::abs(out.retained - 1.0) < 1e-12);
  }
  SECTION("duplicated coils collapse to one") {
    CxMatrix d(2, 100);
    d.row(0) = random_cx(1, 100, 9);
    d.row(1) = d.row(0);
    CHECK(pca_coil_compress(d, 1).retained == Approx(1.0).epsilon(1e-12));
  }
  SECTION("13 coils of rank-8 structure compress to 8 virtual coils") {
    const CxMatrix mix = random_cx(13, 8, 21);
    const CxMatrix src = random_cx(8, 2000, 22);
    const CxMatrix noise = random_cx(13, 2000, 23) * 1e-3;
    const auto out = pca_coil_compress(CxMatrix(mix * src + noise), 8);
    CHECK(out.retained >= 0.999);
    CHECK(out.compressed.rows() == 8);
    CHECK((out.basis.adjoint() * out.basis - CxMatrix::Identity(8, 8)).norm() < 1e-10);
  }
  SECTION("too many virtual coils") { CHECK_THROWS_AS(pca_coil_compress(random_cx(3, 10, 1), 4), ArgumentError); }
}

TEST_CASE("LinearOperator linearity probe", "[numerics][property]") {
  const CxMatrix m = random_cx(6, 6, 77);
  const auto op = dense_op(m);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 5; ++t) {
    const CxVector x = random_cx(6, 1, 300 + t), y = random_cx(6, 1, 400 + t);
    const cx a(nd(rng), nd(rng)), b(nd(rng), nd(rng));
    const CxVector lhs = op(a * x + b * y), rhs = a * op(x) + b * op(y);
    CHECK((lhs - rhs).norm() / rhs.norm() < 1e-10);
  }
}
