#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "minmc/linalg.hpp"
#include "minmc/rng.hpp"
#include "minmc/stats.hpp"

using namespace minmc;

TEST_CASE("rng reproducibility and stream independence") {
  RngStream a(42, 7);
  RngStream b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }

  // Cross-correlation between sibling streams stays below 0.01 on 1e5 draws.
  RngStream s0(42, 0);
  RngStream s1(42, 1);
  const int n = 100000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s0.normal();
    const double y = s1.normal();
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double corr = (n * sxy - sx * sy) /
                      std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(std::abs(corr) < 0.01);

  // Substream derivation is value-based: parent state is untouched.
  RngStream parent(1, 2);
  RngStream child1 = parent.substream(5);
  RngStream child2 = parent.substream(5);
  CHECK(child1.next_u64() == child2.next_u64());
}

TEST_CASE("uniform01 range and normal moments") {
  RngStream rng(123);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);          // ~4.5 sigma
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);   // ~6 sigma of chi2 band
}

TEST_CASE("normal_pair_correlated") {
  SUBCASE("rho outside [-1,1] rejected") {
    RngStream rng(1);
    CHECK_THROWS_AS(rng.normal_pair_correlated(1.5), std::invalid_argument);
  }

  SUBCASE("rho = 1 gives identical draws") {
    RngStream rng(2);
    for (int i = 0; i < 100; ++i) {
      const auto [z1, z2] = rng.normal_pair_correlated(1.0);
      CHECK(z1 == z2);
    }
  }

  auto sample_corr = [](double rho, std::uint64_t seed) {
    RngStream rng(seed);
    const int n = 1000000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
      const auto [x, y] = rng.normal_pair_correlated(rho);
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    return (n * sxy - sx * sy) /
           std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  };

  SUBCASE("rho = 0 within CLT band") {
    CHECK(std::abs(sample_corr(0.0, 3)) <= 0.004);
  }
  SUBCASE("rho = -0.5 within CLT band") {
    CHECK(std::abs(sample_corr(-0.5, 4) - (-0.5)) <= 0.004);
  }
}

TEST_CASE("solve_spd examples") {
  SUBCASE("identity") {
    SpdMatrix a(Eigen::MatrixXd::Identity(3, 3));
    Eigen::VectorXd b(3);
    b << 1, 2, 3;
    const Eigen::VectorXd x = solve_spd(a, b);
    CHECK(x.isApprox(b, 1e-12));
  }

  SUBCASE("2x2 hand inverse, det = 3.75") {
    Eigen::MatrixXd m(2, 2);
    m << 2.0, 0.5, 0.5, 2.0;
    Eigen::VectorXd b(2);
    b << 1, 2;
    const Eigen::VectorXd x = solve_spd(SpdMatrix(m), b);
    CHECK(x[0] == doctest::Approx(4.0 / 15.0).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(14.0 / 15.0).epsilon(1e-10));
  }

  SUBCASE("near-singular diagonal solves through the jitter path") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
    m(0, 0) = 1e-14;
    m(1, 1) = 1.0;
    Eigen::VectorXd b(2);
    b << 0, 1;
    try {
      const Eigen::VectorXd x = solve_spd(SpdMatrix(m), b);
      CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-8));
    } catch (const SingularMatrixError&) {
      // Contractually acceptable for this conditioning.
    }
  }

  SUBCASE("solve composed with multiply is the identity (random SPD)") {
    RngStream rng(7);
    for (int trial = 0; trial < 5; ++trial) {
      const int dim = 20 + static_cast<int>(rng.next_u64() % 481);
      Eigen::MatrixXd b(dim, dim);
      for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
      }
      Eigen::MatrixXd a = b * b.transpose() / dim;
      a.diagonal().array() += 1e-6;
      Eigen::VectorXd rhs(dim);
      for (int i = 0; i < dim; ++i) rhs[i] = rng.normal();

      const Eigen::VectorXd x = solve_spd(SpdMatrix(a), rhs);
      CHECK((a * x - rhs).norm() <= 1e-8 * rhs.norm());
    }
  }

  SUBCASE("asymmetric input rejected") {
    Eigen::MatrixXd m(2, 2);
    m << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(SpdMatrix{m}, std::invalid_argument);
  }
}

TEST_CASE("quantile") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(quantile(v, 0.5) == doctest::Approx(3.0));

  const std::vector<double> w = {1, 2, 3, 4};
  CHECK(quantile(w, 0.25) == doctest::Approx(1.75));

  const std::vector<double> s = {7};
  CHECK(quantile(s, 0.0) == 7.0);
  CHECK(quantile(s, 0.37) == 7.0);
  CHECK(quantile(s, 1.0) == 7.0);

  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);

  SUBCASE("p=0 is min, p=1 is max; input untouched") {
    RngStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> values(1 + rng.next_u64() % 40);
      for (auto& x : values) x = rng.normal();
      const std::vector<double> copy = values;
      CHECK(quantile(values, 0.0) ==
            *std::min_element(values.begin(), values.end()));
      CHECK(quantile(values, 1.0) ==
            *std::max_element(values.begin(), values.end()));
      CHECK(values == copy);
    }
  }
}

TEST_CASE("trapezoid") {
  SUBCASE("constant integrates to the span") {
    const auto grid = linspace(0.0, 1.0, 37);
    const std::vector<double> f(grid.size(), 1.0);
    CHECK(trapezoid(f, grid) == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("linear is exact") {
    const auto grid = linspace(0.0, 1.0, 101);
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = grid[i];
    CHECK(trapezoid(f, grid) == doctest::Approx(0.5).epsilon(1e-14));
  }

  SUBCASE("quadratic within the h^2 error bound") {
    const auto grid = linspace(0.0, 1.0, 1001);
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = grid[i] * grid[i];
    CHECK(std::abs(trapezoid(f, grid) - 1.0 / 3.0) <= 1e-6);
  }

  SUBCASE("error paths") {
    const auto grid = linspace(0.0, 1.0, 10);
    const std::vector<double> f(9, 1.0);
    CHECK_THROWS_AS(trapezoid(f, grid), std::invalid_argument);
    const std::vector<double> bad_grid = {0.0, 0.5, 0.4};
    const std::vector<double> g(3, 1.0);
    CHECK_THROWS_AS(trapezoid(g, bad_grid), std::invalid_argument);
  }
}

TEST_CASE("operator norm by power iteration") {
  Eigen::MatrixXd a(2, 2);
  a << 3.0, 0.0, 0.0, -5.0;
  CHECK(operator_norm_sym(a) == doctest::Approx(5.0).epsilon(1e-8));

  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
  CHECK(operator_norm_sym(zero) == 0.0);

  // Rayleigh-quotient power iteration approaches the true norm from below;
  // clustered spectra cap the attainable relative accuracy near 1e-3.
  RngStream rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 5 + static_cast<int>(rng.next_u64() % 60);
    Eigen::MatrixXd b(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
    }
    const Eigen::MatrixXd sym = (b + b.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                      Eigen::EigenvaluesOnly);
    const double exact = es.eigenvalues().cwiseAbs().maxCoeff();
    const double est = operator_norm_sym(sym, 500, 1e-13);
    CHECK(est <= exact * (1.0 + 1e-10));
    CHECK(est >= exact * (1.0 - 1e-3));
  }
}
