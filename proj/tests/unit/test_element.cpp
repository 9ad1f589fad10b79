#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "geneo/element.hpp"
#include "geneo/materials.hpp"
#include "test_helpers.hpp"

using namespace geneo;
using geneo::testing::test_rng;

namespace {

NodeBlock unit_cube_nodes(ElementType t) {
  const auto& ref = reference_nodes(t);
  NodeBlock X(static_cast<int>(ref.size()), 3);
  for (std::size_t i = 0; i < ref.size(); ++i)
    X.row(static_cast<int>(i)) = 0.5 * (ref[i].transpose().array() + 1.0);
  return X;
}

// Affine image of the unit cube (a parallelepiped): keeps the stiffness
// integrand polynomial, so over-integration must not change the matrix.
NodeBlock affine_nodes(ElementType t) {
  Eigen::Matrix3d g;
  g << 1.3, 0.2, 0.1, 0.0, 0.8, 0.15, 0.05, -0.1, 1.1;
  NodeBlock X = unit_cube_nodes(t);
  for (int i = 0; i < X.rows(); ++i) {
    const Vector3 p = X.row(i).transpose();
    X.row(i) = (g * p).transpose();
  }
  return X;
}

int kernel_dimension(const Matrix& K) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
  int dim = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < 1e-10 * scale) ++dim;
  return dim;
}

Vector3 random_point_in_cube() {
  std::uniform_real_distribution<double> dist(-0.95, 0.95);
  return Vector3(dist(test_rng()), dist(test_rng()), dist(test_rng()));
}

}  // namespace

TEST_SUITE("element") {
  TEST_CASE("hex8 shape values at the center") {
    const ShapeEval sh = shape_basis(ElementType::Hex8, Vector3(0, 0, 0));
    for (int i = 0; i < 8; ++i) CHECK(sh.N[i] == doctest::Approx(0.125).epsilon(1e-15));
  }

  TEST_CASE("Kronecker property at the reference nodes") {
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const auto& ref = reference_nodes(t);
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const ShapeEval sh = shape_basis(t, ref[i]);
        for (std::size_t j = 0; j < ref.size(); ++j)
          CHECK(sh.N[static_cast<int>(j)] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("partition of unity and gradient closure at random points") {
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      for (int k = 0; k < 5; ++k) {
        const ShapeEval sh = shape_basis(t, random_point_in_cube());
        CHECK(sh.N.sum() == doctest::Approx(1.0).epsilon(1e-13));
        for (int d = 0; d < 3; ++d)
          CHECK(sh.dN.col(d).sum() == doctest::Approx(0.0).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("gradients match central finite differences") {
    const double h = 1e-6;
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      for (int k = 0; k < 5; ++k) {
        const Vector3 xi = random_point_in_cube();
        const ShapeEval sh = shape_basis(t, xi);
        for (int d = 0; d < 3; ++d) {
          Vector3 xp = xi, xm = xi;
          xp[d] += h;
          xm[d] -= h;
          const Vector fd = (shape_basis(t, xp).N - shape_basis(t, xm).N) / (2 * h);
          CHECK((sh.dN.col(d) - fd).cwiseAbs().maxCoeff() < 1e-8);
        }
      }
    }
  }

  TEST_CASE("shape_basis rejects points outside the reference cell") {
    CHECK_THROWS_AS(shape_basis(ElementType::Hex8, Vector3(1.5, 0, 0)), ConfigError);
  }

  TEST_CASE("gauss rules integrate the reference volume") {
    for (int n = 1; n <= 5; ++n) {
      const QuadratureRule& rule = gauss_rule(n);
      double sum = 0;
      for (double w : rule.weights) {
        CHECK(w > 0.0);
        sum += w;
      }
      CHECK(sum == doctest::Approx(8.0).epsilon(1e-13));
    }
    CHECK_THROWS_AS(gauss_rule(6), ConfigError);
    CHECK(full_integration_points(ElementType::Hex8) == 2);
    CHECK(full_integration_points(ElementType::Serendipity20) == 3);
  }

  TEST_CASE("elasticity stiffness annihilates rigid modes") {
    const Matrix6 C = isotropic_stiffness(10.0, 0.3);
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const NodeBlock X = unit_cube_nodes(t);
      const Matrix K = element_stiffness_elasticity(X, t, C);
      const int n = X.rows();
      const double scale = K.cwiseAbs().maxCoeff();

      for (int d = 0; d < 3; ++d) {
        Vector u = Vector::Zero(3 * n);
        for (int i = 0; i < n; ++i) u[3 * i + d] = 1.0;
        CHECK((K * u).cwiseAbs().maxCoeff() < 1e-10 * scale);
      }
      const Vector3 omegas[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
      for (const Vector3& w : omegas) {
        Vector u(3 * n);
        for (int i = 0; i < n; ++i) u.segment<3>(3 * i) = w.cross(Vector3(X.row(i).transpose()));
        CHECK((K * u).cwiseAbs().maxCoeff() < 1e-9 * scale);
      }
      CHECK(kernel_dimension(K) == 6);
    }
  }

  TEST_CASE("elasticity stiffness is exactly integrated on affine cells") {
    const Matrix6 C = orthotropic_stiffness([] {
      OrthotropicParams p;
      p.E11 = 162;
      p.E22 = p.E33 = 10;
      p.G12 = p.G13 = 5.2;
      p.G23 = 3.5;
      p.nu12 = p.nu13 = 0.35;
      p.nu23 = 0.5;
      return p;
    }());
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const NodeBlock X = affine_nodes(t);
      const int full = full_integration_points(t);
      const Matrix K1 = element_stiffness_elasticity(X, t, C, full);
      const Matrix K2 = element_stiffness_elasticity(X, t, C, full + 1);
      CHECK((K1 - K2).cwiseAbs().maxCoeff() < 1e-10 * K1.cwiseAbs().maxCoeff());
      CHECK(kernel_dimension(K1) == 6);
    }
  }

  TEST_CASE("elasticity stiffness rejects inverted cells") {
    NodeBlock X = unit_cube_nodes(ElementType::Hex8);
    X.col(0) *= -1.0;  // mirror flips the Jacobian sign
    CHECK_THROWS_AS(
        element_stiffness_elasticity(X, ElementType::Hex8, isotropic_stiffness(1.0, 0.3)),
        NumericsError);
  }

  TEST_CASE("diffusion stiffness on the unit cube has diagonal 1/3") {
    const NodeBlock X = unit_cube_nodes(ElementType::Hex8);
    const Matrix K = element_stiffness_diffusion(X, ElementType::Hex8, Vector3(1, 1, 1));
    for (int i = 0; i < 8; ++i) CHECK(K(i, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK((K * Vector::Ones(8)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(kernel_dimension(K) == 1);

    const Matrix K10 = element_stiffness_diffusion(X, ElementType::Hex8, Vector3(10, 10, 10));
    CHECK((K10 - 10.0 * K).cwiseAbs().maxCoeff() < 5e-15 * K10.cwiseAbs().maxCoeff());
  }

  TEST_CASE("body load integrates a constant force density") {
    const Vector3 f(1.0, -2.0, 0.5);
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const NodeBlock X = unit_cube_nodes(t);
      const Vector load =
          element_body_load(X, t, 3, [f](const Vector3&) { return f; });
      Vector3 total = Vector3::Zero();
      for (int i = 0; i < X.rows(); ++i) total += load.segment<3>(3 * i);
      for (int d = 0; d < 3; ++d)
        CHECK(total[d] == doctest::Approx(f[d]).epsilon(1e-12));  // unit volume
    }
  }

  TEST_CASE("face load integrates a top pressure with outward normals") {
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const NodeBlock X = unit_cube_nodes(t);
      const double q = 0.25;
      Vector3 seen_normal = Vector3::Zero();
      const Vector load = element_face_load(
          X, t, 5, 3, [&](const Vector3&, const Vector3& n) {
            seen_normal = n;
            return Vector3(0, 0, -q);
          });
      CHECK(seen_normal[2] == doctest::Approx(1.0).epsilon(1e-12));
      Vector3 total = Vector3::Zero();
      for (int i = 0; i < X.rows(); ++i) total += load.segment<3>(3 * i);
      CHECK(total[2] == doctest::Approx(-q).epsilon(1e-12));  // unit area
      CHECK(total[0] == doctest::Approx(0.0).epsilon(1e-12));

      // Only dofs of nodes on the loaded face receive anything.
      const auto& face = face_local_nodes(t, 5);
      for (int i = 0; i < X.rows(); ++i) {
        const bool on_face = std::find(face.begin(), face.end(), i) != face.end();
        if (!on_face) CHECK(load.segment<3>(3 * i).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }

  TEST_CASE("strain-displacement reproduces linear fields") {
    Eigen::Matrix3d g;
    g << 0.1, 0.4, -0.2, 0.3, -0.5, 0.25, 0.0, 0.15, 0.6;
    const Eigen::Matrix3d sym = 0.5 * (g + g.transpose());
    Vector6 expect;
    expect << sym(0, 0), sym(1, 1), sym(2, 2), 2 * sym(1, 2), 2 * sym(0, 2), 2 * sym(0, 1);
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      const NodeBlock X = affine_nodes(t);
      Vector u(3 * X.rows());
      for (int i = 0; i < X.rows(); ++i)
        u.segment<3>(3 * i) = g * Vector3(X.row(i).transpose());
      for (int k = 0; k < 3; ++k) {
        double detj = 0;
        const Matrix B = strain_displacement(X, t, random_point_in_cube(), &detj);
        CHECK(detj > 0.0);
        const Vector6 eps = B * u;
        CHECK((eps - expect).cwiseAbs().maxCoeff() < 1e-11);
      }
    }
  }
}
