#include <random>

#include "doctest.h"
#include "flatdd/errors.hpp"
#include "flatdd/plant.hpp"
#include "flatdd/repr.hpp"

using namespace flatdd;
using namespace flatdd::repr;

namespace {

struct LtiData {
  Signal u;
  Signal y;
};

// x+ = 0.5 x + u, y = x, with N input and output samples.
LtiData lti_data(int length, std::uint64_t seed, double x0 = 0.0) {
  const auto model = plant::scalar_lti(0.5, 1.0);
  const auto u = plant::generate_excitation(length, {-1, 1}, seed);
  const auto y = plant::simulate(model, Eigen::VectorXd::Constant(1, x0), u);
  return {u, Signal(Eigen::VectorXd(y.stacked().head(length)))};
}

Signal perturbed(const Signal& s, int index, double delta) {
  auto v = s.to_vector();
  v[static_cast<std::size_t>(index)] += delta;
  return Signal(v);
}

IoTrajectory example1_data(int length, std::uint64_t seed) {
  const auto u = plant::generate_excitation(length - 2, {-0.5, 0.5}, seed);
  return IoTrajectory(u, plant::simulate(plant::example1_model(), Eigen::VectorXd::Zero(2), u), 2);
}

}  // namespace

TEST_CASE("lti membership of fresh and perturbed trajectories") {
  const auto data = lti_data(60, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> dist(-1, 1);
  std::uniform_int_distribution<int> index(0, 9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto fresh = lti_data(10, 1000 + static_cast<std::uint64_t>(trial), dist(rng));
    const auto v = lti_membership(data.u, data.y, 1, 10, fresh.u, fresh.y);
    CHECK(v.residual < 1e-8);
    CHECK(v.is_member);
    CHECK(v.pe_satisfied);
    CHECK(v.warnings.empty());
    const auto bad = lti_membership(data.u, data.y, 1, 10, fresh.u, perturbed(fresh.y, index(rng), 0.1));
    CHECK(bad.residual > 1e-3);
    CHECK_FALSE(bad.is_member);
  }
}

TEST_CASE("every data window is an lti member") {
  const auto data = lti_data(60, 3);
  for (int j = 0; j + 10 <= 60; ++j) {
    const auto v = lti_membership(data.u, data.y, 1, 10, data.u.window(j, j + 9), data.y.window(j, j + 9));
    CHECK(v.residual <= 1e-10);
  }
}

TEST_CASE("minimum-norm alpha is orthogonal to the null space") {
  const auto data = lti_data(60, 4);
  const auto fresh = lti_data(10, 5, 0.3);
  const auto v = lti_membership(data.u, data.y, 1, 10, fresh.u, fresh.y);
  Eigen::MatrixXd m(20, 51);
  m << build_hankel(data.u, 10).entries, build_hankel(data.y, 10).entries;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const int rank = numerical_rank(m);
  const Eigen::MatrixXd null_basis = svd.matrixV().rightCols(51 - rank);
  CHECK((null_basis.transpose() * v.alpha).norm() <= 1e-10 * (1.0 + v.alpha.norm()));

  // Same property for the solver on a random wide matrix.
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  Eigen::MatrixXd wide(6, 15);
  for (Eigen::Index i = 0; i < wide.size(); ++i) wide.data()[i] = g(rng);
  Eigen::VectorXd rhs(6);
  for (Eigen::Index i = 0; i < 6; ++i) rhs(i) = g(rng);
  const Eigen::VectorXd alpha = min_norm_solve(wide, rhs);
  CHECK((wide * alpha - rhs).norm() <= 1e-12);
  CHECK((alpha - wide.completeOrthogonalDecomposition().pseudoInverse() * rhs).norm() <= 1e-12);
}

TEST_CASE("flat membership on noiseless example data") {
  const auto traj = example1_data(500, 7);
  const auto basis = basis::example1_poly();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x0(2);
    x0 << dist(rng), dist(rng);
    const auto u = plant::generate_excitation(48, {-0.5, 0.5}, 200 + static_cast<std::uint64_t>(trial));
    const auto y = plant::simulate(plant::example1_model(), x0, u);
    const auto v = flat_membership(traj, basis, 50, u, y, 1e-6);
    CHECK(v.residual < 1e-6);
    CHECK(v.is_member);
    CHECK(v.pe_satisfied);
    const auto bad = flat_membership(traj, basis, 50, u, perturbed(y, 20, 0.1), 1e-4);
    CHECK_FALSE(bad.is_member);
  }
  for (int j : {0, 1, 200, 450}) {
    const auto v = flat_membership(traj, basis, 50, traj.u().window(j, j + 47), traj.y().window(j, j + 49));
    CHECK(v.residual <= 1e-10);
  }
  CHECK_THROWS_AS(flat_membership(traj, basis, 2, traj.u().window(0, 1), traj.y().window(0, 1)), DimensionError);
  CHECK_THROWS_AS(flat_membership(traj, basis, 50, traj.u().window(0, 46), traj.y().window(0, 49)), DimensionError);
  CHECK_THROWS_AS(flat_membership(traj, basis::identity_only(3), 50, traj.u().window(0, 47), traj.y().window(0, 49)),
                  DimensionError);
}

TEST_CASE("short data downgrade to a warning") {
  const auto traj = example1_data(60, 9);
  const auto v = flat_membership(traj, basis::example1_poly(), 10, traj.u().window(0, 7), traj.y().window(0, 9));
  CHECK_FALSE(v.pe_satisfied);
  CHECK_FALSE(v.warnings.empty());
  CHECK(v.residual <= 1e-10);
}

TEST_CASE("flat and lti verdicts agree on a linear delay chain") {
  const auto model = plant::delay_chain(2, 1.5);
  const auto u = plant::generate_excitation(78, {-1, 1}, 10);
  const auto y = plant::simulate(model, Eigen::VectorXd::Zero(2), u);
  const IoTrajectory traj(u, y, 2);
  Eigen::VectorXd u_full = Eigen::VectorXd::Zero(80);
  u_full.head(78) = u.stacked();
  const auto basis = basis::identity_only(2);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x0(2);
    x0 << dist(rng), dist(rng);
    const auto ub = plant::generate_excitation(8, {-1, 1}, 300 + static_cast<std::uint64_t>(trial));
    auto yb = plant::simulate(model, x0, ub);
    if (trial % 2 == 1) yb = perturbed(yb, 2 + trial % 8, 0.1);  // y_0, y_1 only fix the state
    Eigen::VectorXd ub_full = Eigen::VectorXd::Zero(10);
    ub_full.head(8) = ub.stacked();
    const auto flat = flat_membership(traj, basis, 10, ub, yb);
    const auto lti = lti_membership(Signal(u_full), y, 2, 10, Signal(ub_full), yb);
    CHECK(flat.is_member == lti.is_member);
    CHECK(flat.is_member == (trial % 2 == 0));
  }
}

TEST_CASE("data length bound") {
  const auto r = data_length_check(500, 50, 2, 6);
  CHECK(r.required_length == 351);
  CHECK(r.feasible);
  CHECK_FALSE(data_length_check(350, 50, 2, 6).feasible);
  CHECK(data_length_check(351, 50, 2, 6).feasible);
  for (int n = 1; n <= 6; ++n) CHECK(data_length_check(100, n + 1, n, 1).required_length == 3 * n + 1);
  CHECK_THROWS_AS(data_length_check(100, 2, 2, 1), ConfigError);
  CHECK_THROWS_AS(data_length_check(0, 5, 2, 1), ConfigError);
}

TEST_CASE("a factored representation gives the same verdicts") {
  const auto traj = example1_data(200, 12);
  const auto basis = basis::example1_poly();
  const FlatRepresentation rep(traj, basis, 20);
  CHECK(rep.stacked().rows() == 6 * 18 + 20);
  CHECK(rep.stacked().cols() == 181);
  for (int j : {0, 50, 180}) {
    const auto ub = traj.u().window(j, j + 17);
    const auto yb = perturbed(traj.y().window(j, j + 19), 5, 0.01 * j);
    const auto a = rep.check(ub, yb);
    const auto b = flat_membership(traj, basis, 20, ub, yb);
    CHECK(a.residual == b.residual);
    CHECK(a.is_member == b.is_member);
    CHECK(a.alpha == b.alpha);
    CHECK(a.pe_satisfied == b.pe_satisfied);
  }
}
