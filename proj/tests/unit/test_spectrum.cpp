#include <cmath>

#include "doctest.h"
#include "spike/spectrum.hpp"

using namespace spike;

namespace {

const GroundStateProfile& profile24() {
  static GroundStateProfile prof = solve_ground_state({2, 4.0});
  return prof;
}

}  // namespace

TEST_CASE("half-box grid layout") {
  HalfBoxGrid g = HalfBoxGrid::make(2, 12.0, 0.2);
  CHECK(g.nt == 119);
  CHECK(g.nn == 60);
  CHECK(g.size() == 119u * 60u);
  CHECK(g.tangential(0) == doctest::Approx(-11.8));
  CHECK(g.tangential(59) == doctest::Approx(0.0));
  double z[3];
  g.coords(1, z);
  CHECK(z[0] == doctest::Approx(-11.8));
  CHECK(z[1] == doctest::Approx(0.2));
  CHECK(z[2] == 0.0);
  CHECK_THROWS_AS(HalfBoxGrid::make(2, 10.0, 0.1), Error);
  CHECK_THROWS_AS(HalfBoxGrid::make(2, 12.0, 0.3), Error);
  CHECK_THROWS_AS(HalfBoxGrid::make(4, 12.0, 0.1), Error);
}

TEST_CASE("matrix-free operator matches the assembled reference") {
  HalfBoxGrid g = HalfBoxGrid::make(2, 12.0, 0.2);
  LinearizedOperator op = assemble_linearized(profile24(), g);
  CHECK(op.symmetry_defect() < 1e-12);
  Eigen::SparseMatrix<double> S = op.to_sparse();
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(g.size()), 3);
  Eigen::MatrixXd ys = op.apply(X, Exec::Serial);
  Eigen::MatrixXd yp = op.apply(X, Exec::Parallel);
  CHECK((ys - yp).norm() == 0.0);
  CHECK((ys - S * X).norm() < 1e-10 * ys.norm());
  Eigen::VectorXd u = Eigen::VectorXd::Random(static_cast<Eigen::Index>(g.size()));
  CHECK((op.from_symmetric(op.to_symmetric(u)) - u).norm() < 1e-12 * u.norm());
}

TEST_CASE("free preconditioner inverts -Lap_h + I") {
  HalfBoxGrid g = HalfBoxGrid::make(2, 12.0, 0.2);
  LinearizedOperator op = assemble_linearized(profile24(), g);
  Eigen::SparseMatrix<double> S = op.to_sparse();
  Eigen::VectorXd shift = Eigen::VectorXd::Ones(S.rows()) - op.potential();
  Eigen::SparseMatrix<double> S0 = S;
  for (Eigen::Index i = 0; i < S.rows(); ++i) S0.coeffRef(i, i) += shift(i);
  Eigen::MatrixXd R = Eigen::MatrixXd::Random(S.rows(), 2);
  Eigen::MatrixXd W = op.precondition(R, Exec::Serial);
  CHECK((S0 * W - R).norm() < 1e-9 * R.norm());
}

TEST_CASE("tangential derivative is an approximate kernel vector") {
  HalfBoxGrid g = HalfBoxGrid::make(2, 12.0, 0.1);
  LinearizedOperator op = assemble_linearized(profile24(), g);
  Eigen::VectorXd d1 = op.sample_derivative(0);
  Eigen::VectorXd r = op.apply_unsymmetrized(d1);
  CHECK(r.lpNorm<Eigen::Infinity>() < 1e-2 * d1.lpNorm<Eigen::Infinity>());
}

TEST_CASE("kernel report on a coarse box") {
  HalfBoxGrid g = HalfBoxGrid::make(2, 12.0, 0.2);
  LinearizedOperator op = assemble_linearized(profile24(), g);
  SpectrumReport r = kernel_report(op, 4);
  REQUIRE(r.eigenvalues.size() == 4);
  CHECK(r.eigenvalues[0] < -1.0);  // the ground state has Morse index one
  CHECK(r.kernel_indices.size() == 1);
  CHECK(r.kernel_overlap.at(0) > 0.99);
  CHECK(r.kernel_overlap_normal < 0.2);
  CHECK(r.gap > 0.05);
  REQUIRE(r.parity.size() == 1);
  CHECK(r.parity[0].find("odd-z1") != std::string::npos);
  for (double res : r.residuals) CHECK(res < 1e-6);
  CHECK(std::abs(coercivity_gap(op, r.kernel_vectors) - r.gap) < 0.05 * r.gap);
  CHECK_THROWS_AS(kernel_report(op, 2), Error);
}

TEST_CASE("default kernel tolerance") {
  CHECK(default_kernel_tol(HalfBoxGrid::make(2, 14.0, 0.1)) == doctest::Approx(5e-3).epsilon(1e-6));
  CHECK(default_kernel_tol(HalfBoxGrid::make(2, 14.0, 0.05)) < 2e-3);
}
