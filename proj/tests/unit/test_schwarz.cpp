#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <atomic>
#include <sstream>

#include "geneo/schwarz.hpp"
#include "geneo/problems.hpp"
#include "test_helpers.hpp"

using namespace geneo;
using geneo::testing::dense_one_level;
using geneo::testing::random_vector;
using geneo::testing::SchwarzFixture;

TEST_SUITE("schwarz") {
  TEST_CASE("partition of unity sums to the identity") {
    for (int overlap : {1, 2}) {
      for (std::array<int, 3> shape :
           {std::array<int, 3>{1, 1, 1}, {2, 1, 1}, {2, 2, 1}, {4, 2, 1}}) {
        const int n_sub = shape[0] * shape[1] * shape[2];
        const Adjacency adj = (shape[1] > 1 || shape[2] > 1) ? Adjacency::Box : Adjacency::Face;
        SchwarzFixture f(8, 4, 4, shape, overlap, adj);
        REQUIRE(f.decomp.num_subdomains() == n_sub);
        const int n = f.box.sys.num_dofs();
        for (int trial = 0; trial < 50; ++trial) {
          const Vector v = random_vector(n);
          Vector sum = Vector::Zero(n);
          for (int j = 0; j < n_sub; ++j) {
            const auto& nodes = f.decomp.subdomain_nodes[j];
            for (std::size_t li = 0; li < nodes.size(); ++li)
              for (int d = 0; d < 3; ++d) {
                const int g = 3 * nodes[li] + d;
                sum[g] += f.pou.weights[j][3 * li + d] * v[g];
              }
          }
          CHECK((sum - v).cwiseAbs().maxCoeff() < 1e-13);
        }
      }
    }
  }

  TEST_CASE("partition of unity weights obey the boundary and interior rules") {
    SchwarzFixture f(8, 4, 4, {2, 1, 1}, 1);
    for (int j = 0; j < 2; ++j) {
      const auto& nodes = f.decomp.subdomain_nodes[j];
      for (std::size_t li = 0; li < nodes.size(); ++li) {
        const double w = f.pou.weights[j][3 * li];
        if (f.decomp.interior_boundary[j][li]) {
          CHECK(w == 0.0);
        } else if (f.decomp.node_multiplicity[nodes[li]] == 1) {
          CHECK(w == 1.0);
        } else {
          CHECK(w > 0.0);
          CHECK(w <= 1.0);
        }
      }
    }
  }

  TEST_CASE("partition of unity refuses configurations where it cannot exist") {
    // Face-adjacent (cross-shaped) extension of a 2x2x1 partition with one
    // layer of overlap leaves the cross-center nodes on every subdomain's
    // artificial boundary; the masked weights cannot sum to one there.
    geneo::testing::BoxElasticity box(8, 8, 2);
    OverlappingDecomposition decomp = decompose(box.grid, {2, 2, 1}, 1, Adjacency::Face);
    CHECK_THROWS_AS(build_pou(decomp, 3), NumericsError);
  }

  TEST_CASE("single subdomain: all four matrices coincide with the global one") {
    SchwarzFixture f(4, 2, 2, {1, 1, 1}, 1);
    REQUIRE(f.ops.size() == 1);
    const auto& s = f.ops[0];
    const Matrix a = Matrix(f.box.sys.A);
    CHECK((Matrix(s.a_dirichlet) - a).cwiseAbs().maxCoeff() < 1e-14 * a.cwiseAbs().maxCoeff());
    CHECK((Matrix(s.a_submatrix) - a).cwiseAbs().maxCoeff() < 1e-14 * a.cwiseAbs().maxCoeff());
    CHECK((Matrix(s.a_neumann) - a).cwiseAbs().maxCoeff() < 1e-14 * a.cwiseAbs().maxCoeff());
    CHECK(Matrix(s.a_overlap_neumann).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("a_dirichlet equals the eliminated principal submatrix") {
    SchwarzFixture f(8, 3, 3, {2, 1, 1}, 1);
    for (const auto& s : f.ops) {
      Matrix expect = Matrix(s.a_submatrix);
      const int nl = expect.rows();
      for (int i = 0; i < nl; ++i) {
        if (!s.interior_mask[i] && !s.dirichlet_mask[i]) continue;
        expect.row(i).setZero();
        expect.col(i).setZero();
        expect(i, i) = 1.0;
      }
      CHECK((Matrix(s.a_dirichlet) - expect).cwiseAbs().maxCoeff() <
            1e-13 * expect.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("floating subdomains carry a six-dimensional rigid kernel") {
    SchwarzFixture f(8, 2, 2, {4, 1, 1}, 1);
    const auto& s = f.ops[1];  // interior subdomain, away from the clamp
    const Matrix an = Matrix(s.a_neumann);
    Eigen::SelfAdjointEigenSolver<Matrix> es(an);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    int kernel = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] < 1e-10 * scale) ++kernel;
    CHECK(kernel == 6);
  }

  TEST_CASE("overlap energy never exceeds subdomain energy") {
    SchwarzFixture f(8, 3, 2, {2, 1, 1}, 2);
    for (const auto& s : f.ops) {
      for (int trial = 0; trial < 20; ++trial) {
        const Vector v = random_vector(s.a_neumann.rows());
        const double eo = v.dot(s.a_overlap_neumann * v);
        const double en = v.dot(s.a_neumann * v);
        CHECK(eo <= en + 1e-12 * std::abs(en));
      }
    }
  }

  TEST_CASE("one-level apply matches the dense triple-product oracle") {
    SchwarzFixture f(8, 3, 3, {4, 1, 1}, 1);
    const int n = f.box.sys.num_dofs();
    REQUIRE(n <= 5000);
    const Matrix m = dense_one_level(f.ops, n);
    const OneLevelSchwarz one(f.ops, f.comm, n);
    for (int trial = 0; trial < 20; ++trial) {
      const Vector r = random_vector(n);
      const Vector lib = one.apply(r);
      const Vector oracle = m * r;
      CHECK((lib - oracle).cwiseAbs().maxCoeff() < 1e-11 * oracle.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("one-level operator is symmetric and handles trivial inputs") {
    SchwarzFixture f(6, 2, 2, {2, 1, 1}, 1);
    const int n = f.box.sys.num_dofs();
    const OneLevelSchwarz one(f.ops, f.comm, n);
    CHECK(one.apply(Vector::Zero(n)).cwiseAbs().maxCoeff() == 0.0);
    for (int trial = 0; trial < 5; ++trial) {
      const Vector x = random_vector(n), y = random_vector(n);
      const double xy = one.apply(x).dot(y);
      const double yx = one.apply(y).dot(x);
      CHECK(std::abs(xy - yx) < 1e-12 * std::abs(xy));
    }
  }

  TEST_CASE("one subdomain yields an exact solve") {
    SchwarzFixture f(4, 2, 2, {1, 1, 1}, 1);
    const int n = f.box.sys.num_dofs();
    const OneLevelSchwarz one(f.ops, f.comm, n);
    const Vector r = random_vector(n);
    const Vector y = one.apply(r);
    CHECK((f.box.sys.A * y - r).cwiseAbs().maxCoeff() < 1e-9 * r.cwiseAbs().maxCoeff());
  }

  TEST_CASE("results do not depend on the worker count") {
    for (int workers : {1, 3}) {
      SchwarzFixture base(8, 3, 3, {4, 1, 1}, 1, Adjacency::Face, 1);
      SchwarzFixture other(8, 3, 3, {4, 1, 1}, 1, Adjacency::Face, workers);
      const int n = base.box.sys.num_dofs();
      const OneLevelSchwarz m1(base.ops, base.comm, n);
      const OneLevelSchwarz m2(other.ops, other.comm, n);
      const Vector r = random_vector(n);
      CHECK((m1.apply(r) - m2.apply(r)).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("neighbor exchange delivers payloads and fills the ledger") {
    SchwarzFixture f(8, 2, 2, {4, 1, 1}, 1);
    auto& comm = f.comm;
    CHECK(comm.ledger().point_to_point.empty());

    SubdomainComm::Mailbox empty(4);
    comm.neighbor_exchange(empty);
    CHECK(comm.ledger().point_to_point.empty());

    SubdomainComm::Mailbox out(4);
    for (int j = 0; j < 4; ++j)
      for (int nb : f.decomp.neighbors[j]) out[j].push_back({nb, Vector::Ones(3)});
    const auto in = comm.neighbor_exchange(out);
    for (int j = 0; j < 4; ++j) {
      CHECK(in[j].size() == f.decomp.neighbors[j].size());
      long rows = 0;
      for (const auto& [pair, stats] : comm.ledger().point_to_point)
        if (pair.first == j) rows += stats.messages;
      CHECK(rows == static_cast<long>(f.decomp.neighbors[j].size()));
    }

    SubdomainComm::Mailbox bad(4);
    bad[0].push_back({3, Vector::Ones(1)});  // 0 and 3 are not neighbors
    CHECK_THROWS_AS(comm.neighbor_exchange(bad), NumericsError);
  }

  TEST_CASE("ledger CSV and collective accounting") {
    SchwarzFixture f(6, 2, 2, {2, 1, 1}, 1);
    f.comm.ledger().clear();
    f.comm.record_allgather("coarse", 10);
    f.comm.record_allgather("coarse", 12);
    CHECK(f.comm.ledger().allgather_events() == 2);
    CHECK(f.comm.ledger().allgather_events("coarse") == 2);
    CHECK(f.comm.ledger().allgather_events("other") == 0);

    std::ostringstream csv;
    f.comm.ledger().write_csv(csv);
    CHECK(csv.str().rfind("sender,receiver,messages,doubles_sent", 0) == 0);
    CHECK(csv.str().find("-1,-1,") != std::string::npos);
  }

  TEST_CASE("parallel_for covers the range and propagates exceptions") {
    SchwarzFixture f(6, 2, 2, {2, 1, 1}, 1, Adjacency::Face, 3);
    std::vector<std::atomic<int>> hits(17);
    f.comm.parallel_for(17, [&](int i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(
        f.comm.parallel_for(4, [](int i) { if (i == 2) throw NumericsError("boom"); }),
        NumericsError);
  }
}
