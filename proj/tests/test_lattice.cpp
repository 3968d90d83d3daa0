#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "compolattice/errors.hpp"
#include "compolattice/lattice.hpp"
#include "test_support.hpp"

using namespace compolattice;

TEST_CASE("build_lattice small examples") {
  SUBCASE("two-node path") {
    const LatticeModel lat = build_lattice(1, 2, 1.0);
    CHECK(lat.num_nodes() == 2);
    CHECK(lat.c_diag.isApprox(Eigen::VectorXd::Ones(2)));
    const Eigen::MatrixXd g = Eigen::MatrixXd(lat.g);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(0, 1) == -1.0);
    CHECK(g(1, 0) == -1.0);
    CHECK(g(1, 1) == 1.0);
  }
  SUBCASE("2x2 corners have degree 2") {
    const LatticeModel lat = build_lattice(2, 2, 1.0);
    const Eigen::MatrixXd g = Eigen::MatrixXd(lat.g);
    for (int i = 0; i < 4; ++i) CHECK(g(i, i) == 2.0);
    CHECK(g(0, 1) == -1.0);
    CHECK(g(0, 2) == -1.0);
    CHECK(g(0, 3) == 0.0);
  }
  SUBCASE("isolated node") {
    const LatticeModel lat = build_lattice(1, 1, 1.0);
    CHECK(Eigen::MatrixXd(lat.g)(0, 0) == 0.0);
    CHECK(lat.c_diag[0] == 1.0);
  }
  SUBCASE("spacing scales C only") {
    const LatticeModel lat = build_lattice(2, 3, 0.5);
    CHECK(lat.c_diag[0] == doctest::Approx(0.25));
    CHECK(Eigen::MatrixXd(lat.g)(0, 1) == -1.0);
  }
  SUBCASE("invalid sizes rejected") {
    CHECK_THROWS_AS(build_lattice(0, 3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice(3, 0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_lattice(2, 2, 0.0), std::invalid_argument);
  }
}

TEST_CASE("masked lattice keeps zero row sums") {
  // L-shaped domain: (0,0), (0,1), (1,0) active
  std::vector<GridCell> cells = {{0, 0, 0}, {1, 0, 1}, {2, 1, 0}};
  const LatticeModel lat = build_lattice(2, 2, 1.0, cells);
  CHECK(lat.num_nodes() == 3);
  const Eigen::MatrixXd g = Eigen::MatrixXd(lat.g);
  CHECK(g(0, 0) == 2.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(2, 2) == 1.0);
  CHECK(g(1, 2) == 0.0);  // not neighbors in the induced subgraph
  for (int i = 0; i < 3; ++i) CHECK(g.row(i).sum() == doctest::Approx(0.0).epsilon(1e-15));

  std::vector<GridCell> dup = {{0, 0, 0}, {0, 0, 1}};
  CHECK_THROWS_AS(build_lattice(2, 2, 1.0, dup), std::invalid_argument);
}

TEST_CASE("assemble_Q matches the dense oracle on grids up to 5x5") {
  for (int nr = 1; nr <= 5; ++nr) {
    for (int nc = 1; nc <= 5; ++nc) {
      const LatticeModel lat = build_lattice(nr, nc, 1.0);
      for (double kappa : {0.1, 0.7, 1.0, 2.3}) {
        const Eigen::MatrixXd q = Eigen::MatrixXd(assemble_Q(lat, kappa));
        const Eigen::MatrixXd oracle = testsupport::dense_Q(nr, nc, 1.0, kappa);
        CHECK((q - oracle).lpNorm<Eigen::Infinity>() <= 1e-12 * oracle.lpNorm<Eigen::Infinity>());
      }
    }
  }
}

TEST_CASE("assemble_Q frozen entries") {
  const LatticeModel lat = build_lattice(2, 2, 1.0);
  const Eigen::MatrixXd q = Eigen::MatrixXd(assemble_Q(lat, 1.0));
  CHECK(q(0, 0) == doctest::Approx(11.0).epsilon(1e-14));  // 1 + 4 + 6
  CHECK(q(0, 1) == doctest::Approx(-6.0).epsilon(1e-14));  // 0 - 2 - 4

  const LatticeModel single = build_lattice(1, 1, 1.0);
  CHECK(Eigen::MatrixXd(assemble_Q(single, 2.0))(0, 0) == doctest::Approx(16.0));

  CHECK_THROWS_AS(assemble_Q(lat, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(assemble_Q(lat, -1.0), std::invalid_argument);
}

TEST_CASE("assemble_Q is exactly symmetric") {
  const LatticeModel lat = build_lattice(5, 4, 1.0);
  const Eigen::SparseMatrix<double> q = assemble_Q(lat, 0.37);
  const Eigen::MatrixXd dense = Eigen::MatrixXd(q);
  CHECK((dense - dense.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("smallest eigenvalue bounded below by kappa^4 min(C)") {
  for (int nr = 2; nr <= 5; ++nr) {
    const LatticeModel lat = build_lattice(nr, nr, 1.0);
    for (double kappa : {0.2, 1.0, 1.7}) {
      const Eigen::MatrixXd q = Eigen::MatrixXd(assemble_Q(lat, kappa));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
      const double k4 = kappa * kappa * kappa * kappa;
      CHECK(es.eigenvalues().minCoeff() >= k4 * lat.c_diag.minCoeff() - 1e-10);
    }
  }
}

TEST_CASE("assemble_joint_precision examples") {
  const LatticeModel lat = build_lattice(2, 2, 1.0);
  const Eigen::SparseMatrix<double> q = assemble_Q(lat, 1.0);

  SUBCASE("scalar rho") {
    Eigen::MatrixXd rho(1, 1);
    rho << 2.0;
    const Eigen::MatrixXd joint = Eigen::MatrixXd(assemble_joint_precision(q, rho));
    CHECK(joint.isApprox(0.5 * Eigen::MatrixXd(q), 1e-14));
  }
  SUBCASE("identity rho is block diagonal") {
    const Eigen::MatrixXd joint =
        Eigen::MatrixXd(assemble_joint_precision(q, Eigen::MatrixXd::Identity(2, 2)));
    const Eigen::MatrixXd qd = Eigen::MatrixXd(q);
    CHECK(joint.topLeftCorner(4, 4).isApprox(qd, 1e-14));
    CHECK(joint.bottomRightCorner(4, 4).isApprox(qd, 1e-14));
    CHECK(joint.topRightCorner(4, 4).lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("hand-inverted 2x2 rho on a single node") {
    const LatticeModel one = build_lattice(1, 1, 1.0);
    const Eigen::SparseMatrix<double> q1 = assemble_Q(one, 1.3);
    const double qv = Eigen::MatrixXd(q1)(0, 0);
    Eigen::MatrixXd rho(2, 2);
    rho << 1.0, 0.5, 0.5, 1.0;
    const Eigen::MatrixXd joint = Eigen::MatrixXd(assemble_joint_precision(q1, rho));
    CHECK(joint(0, 0) == doctest::Approx(qv / 0.75).epsilon(1e-12));
    CHECK(joint(0, 1) == doctest::Approx(-0.5 * qv / 0.75).epsilon(1e-12));
  }
  SUBCASE("non-SPD rho rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(assemble_joint_precision(q, bad), NumericalError);
  }
}

TEST_CASE("Kronecker identity (rho^-1 x Q) vec(x) = vec(Q x rho^-1)") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal;
  const LatticeModel lat = build_lattice(3, 4, 1.0);
  const Eigen::SparseMatrix<double> q = assemble_Q(lat, 0.6);
  Eigen::MatrixXd rho(2, 2);
  rho << 0.9, 0.3, 0.3, 0.7;
  const Eigen::SparseMatrix<double> joint = assemble_joint_precision(q, rho);
  const Eigen::MatrixXd rho_inv = rho.inverse();

  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd x(lat.num_nodes(), 2);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const Eigen::Map<const Eigen::VectorXd> vec_x(x.data(), x.size());
    const Eigen::VectorXd lhs = joint * vec_x;
    const Eigen::MatrixXd rhs_mat = q * x * rho_inv;
    const Eigen::Map<const Eigen::VectorXd> rhs(rhs_mat.data(), rhs_mat.size());
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() <= 1e-10 * rhs.lpNorm<Eigen::Infinity>());
  }
}
