#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "flatdd/basis.hpp"
#include "flatdd/errors.hpp"
#include "flatdd/plant.hpp"

using namespace flatdd;
using namespace flatdd::basis;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

IoTrajectory example1_data(int length, std::uint64_t seed) {
  const auto model = plant::example1_model();
  const auto u = plant::generate_excitation(length - 2, {-0.5, 0.5}, seed);
  return IoTrajectory(u, plant::simulate(model, Eigen::VectorXd::Zero(2), u), 2);
}

std::vector<KernelPoint> random_points(int count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-2, 2);
  std::vector<KernelPoint> pts;
  for (int i = 0; i < count; ++i) pts.push_back({dist(rng), vec({dist(rng), dist(rng)})});
  return pts;
}

}  // namespace

TEST_CASE("example basis evaluation") {
  const auto b = example1_poly();
  CHECK(b.size() == 6);
  const Eigen::VectorXd psi = eval_psi_hat(b, 1.0, vec({2, 3}));
  CHECK(psi == vec({1, 2, 3, 6, 4, 9}));
  CHECK(eval_psi_hat(b, 0.0, vec({0, 0})).isZero(0.0));

  // v = u (xi1^2 + 2) with coefficient vector (2, 0, 0, 0, 1, 0).
  const Eigen::VectorXd a = vec({2, 0, 0, 0, 1, 0});
  CHECK(a.dot(psi) == 6.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int i = 0; i < 100; ++i) {
    const double u = dist(rng), x1 = dist(rng), x2 = dist(rng);
    CHECK(a.dot(eval_psi_hat(b, u, vec({x1, x2}))) == doctest::Approx(u * (x1 * x1 + 2)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(eval_psi_hat(b, 1.0, vec({1, 2, 3})), DimensionError);
}

TEST_CASE("non-finite basis values name the function") {
  BasisSet b{"bad", 1, {[](double u, const Eigen::VectorXd&) { return u; },
                        [](double u, const Eigen::VectorXd&) { return 1.0 / u; }},
             {}, false, false, 0};
  try {
    eval_psi_hat(b, 0.0, vec({1}));
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(std::string(e.what()).find("function 1") != std::string::npos);
  }
}

TEST_CASE("basis presets validate and flags are checked") {
  CHECK_NOTHROW(validate_basis(example1_poly()));
  CHECK_NOTHROW(validate_basis(identity_only(3)));
  CHECK(example1_poly().affine_in_u);
  CHECK_FALSE(example1_poly().affine_in_xi);
  CHECK(example1_poly().identity_index == 0);

  auto wrong_affine = example1_poly();
  wrong_affine.affine_in_xi = true;
  CHECK_THROWS_AS(validate_basis(wrong_affine), ConfigError);

  auto wrong_identity = example1_poly();
  wrong_identity.identity_index = 1;
  CHECK_THROWS_AS(validate_basis(wrong_identity), ConfigError);

  BasisSet quad{"quad", 1, {[](double u, const Eigen::VectorXd&) { return u * u; }}, {}, true, true, {}};
  CHECK_THROWS_AS(validate_basis(quad), ConfigError);

  CHECK(basis_by_name("identity-only", 2).size() == 1);
  CHECK_THROWS_AS(basis_by_name("example1-poly", 3), ConfigError);
  CHECK_THROWS_AS(basis_by_name("cubic", 2), ConfigError);
}

TEST_CASE("psi hankel shape and columns") {
  const auto traj = example1_data(500, 1);
  const auto b = example1_poly();
  const auto h = build_psi_hankel(b, traj, 50);
  CHECK(h.entries.rows() == 288);
  CHECK(h.cols() == 451);
  CHECK(h.depth == 48);
  for (int j : {0, 17, 450}) {
    for (int i = 0; i < 48; ++i) {
      const int k = i + j;
      Eigen::VectorXd xi(2);
      xi << traj.y()[k], traj.y()[k + 1];
      CHECK(h.block(i, j) == eval_psi_hat(b, traj.u()[k], xi));
    }
  }
  CHECK_THROWS_AS(build_psi_hankel(b, traj, 2), DimensionError);
  CHECK_THROWS_AS(build_psi_hankel(b, traj, 501), DimensionError);
}

TEST_CASE("identity basis hankel reduces to the input hankel") {
  const auto traj = example1_data(60, 2);
  const auto h = build_psi_hankel(identity_only(2), traj, 10);
  CHECK(h.entries == build_hankel(traj.u(), 8).entries);
}

TEST_CASE("kernel values") {
  const KernelPoint p{0.3, vec({1, -2})};
  CHECK(kernel_eval({KernelKind::gaussian, 1.0}, p, p) == 1.0);
  // Squared distance 2 sigma^2 with sigma = 0.5.
  const KernelPoint q{0.3 + 0.5, vec({1 + 0.5, -2})};
  CHECK(kernel_eval({KernelKind::gaussian, 0.5}, p, q) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::exp(-1.0) == doctest::Approx(0.367879).epsilon(1e-6));
  const KernelPoint r{2.0, vec({0.1, 0.2})};
  CHECK(kernel_eval({KernelKind::gaussian_plus_linear, 1.0}, r, r) == 5.0);
  CHECK_THROWS_AS(make_kernel({KernelKind::gaussian, 0.0}), ConfigError);
  CHECK_THROWS_AS(make_kernel({KernelKind::gaussian, -1.0}), ConfigError);
  CHECK(make_kernel({KernelKind::gaussian_plus_linear, 1.0}).has_identity_feature);
  CHECK_FALSE(make_kernel({KernelKind::gaussian, 1.0}).has_identity_feature);
  CHECK(kernel_kind_by_name("gaussian_plus_linear") == KernelKind::gaussian_plus_linear);
  CHECK(kernel_kind_name(KernelKind::gaussian) == "gaussian");
  CHECK_THROWS_AS(kernel_kind_by_name("laplace"), ConfigError);
}

TEST_CASE("kernel symmetry and range") {
  std::mt19937_64 rng(8);
  const auto pts = random_points(40, rng);
  for (double sigma : {0.3, 1.0, 4.0}) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const double g = kernel_eval({KernelKind::gaussian, sigma}, pts[i], pts[j]);
        CHECK(g == kernel_eval({KernelKind::gaussian, sigma}, pts[j], pts[i]));
        CHECK(g > 0.0);
        CHECK(g <= 1.0);
        const double gl = kernel_eval({KernelKind::gaussian_plus_linear, sigma}, pts[i], pts[j]);
        CHECK(gl == kernel_eval({KernelKind::gaussian_plus_linear, sigma}, pts[j], pts[i]));
        CHECK(gl - pts[i].u * pts[j].u == doctest::Approx(g).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("gaussian gram matrices are positive semidefinite") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int count = 1 + trial % 50;
    const auto pts = random_points(count + 20, rng);
    for (auto kind : {KernelKind::gaussian, KernelKind::gaussian_plus_linear}) {
      const Eigen::MatrixXd g = gram_matrix(make_kernel({kind, 0.5 + 0.1 * trial}), pts);
      CHECK((g - g.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
    }
  }
}

TEST_CASE("finite-basis kernel matches explicit inner products") {
  const auto traj = example1_data(40, 5);
  const auto pts = kernel_points(traj);
  REQUIRE(pts.size() == 38);
  for (const auto& b : {identity_only(2), example1_poly()}) {
    const Eigen::MatrixXd kernel_gram = gram_matrix(finite_basis_kernel(b), pts);
    const Eigen::MatrixXd psi = psi_sequence(b, traj).samples();
    CHECK((kernel_gram - psi.transpose() * psi).norm() <= 1e-12 * (1 + kernel_gram.norm()));
  }
  // The identity-only basis reduces to the plain product u_i u_j.
  const Eigen::MatrixXd g = gram_matrix(finite_basis_kernel(identity_only(2)), pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      CHECK(g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == pts[i].u * pts[j].u);
    }
  }
  CHECK(finite_basis_kernel(example1_poly()).has_identity_feature);
}
