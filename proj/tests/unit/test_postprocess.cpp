#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <sstream>

#include "geneo/postprocess.hpp"
#include "geneo/element.hpp"
#include "geneo/materials.hpp"
#include "geneo/problems.hpp"
#include "test_helpers.hpp"

using namespace geneo;

namespace {

StructuredGrid small_box(int nx, int ny, int nz, ElementType t = ElementType::Hex8) {
  return build_layer_cake(GridSpec::box(nx, ny, nz, nx, ny, nz, t));
}

Vector displacement_from(const StructuredGrid& grid,
                         const std::function<Vector3(const Vector3&)>& u_of_x) {
  Vector u(3 * grid.num_nodes());
  for (int i = 0; i < grid.num_nodes(); ++i) {
    const Vector3 v = u_of_x(grid.node_coordinates[i]);
    for (int r = 0; r < 3; ++r) u[3 * i + r] = v[r];
  }
  return u;
}

Eigen::Matrix3d stress_tensor(const Vector6& s) {
  Eigen::Matrix3d t;
  t << s[0], s[5], s[4],
       s[5], s[1], s[3],
       s[4], s[3], s[2];
  return t;
}

Vector6 stress_voigt(const Eigen::Matrix3d& t) {
  Vector6 s;
  s << t(0, 0), t(1, 1), t(2, 2), t(1, 2), t(0, 2), t(0, 1);
  return s;
}

Vector6 make_stress(double s11, double s22, double s33, double s23, double s13, double s12) {
  Vector6 s;
  s << s11, s22, s33, s23, s13, s12;
  return s;
}

}  // namespace

TEST_SUITE("postprocess") {
  TEST_CASE("uniaxial stretch recovers the Lame stresses") {
    const double E = 12.0, nu = 0.28, eps = 1e-3;
    const double mu = E / (2.0 * (1.0 + nu));
    const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    StructuredGrid grid = small_box(2, 2, 2);
    const Vector u = displacement_from(
        grid, [eps](const Vector3& x) { return Vector3(eps * x[0], 0.0, 0.0); });
    const StressField field =
        recover_stress(grid, u, {{0, isotropic_stiffness(E, nu)}}, {{0, 0.0}}, 1.0);
    REQUIRE(static_cast<int>(field.stress.size()) == grid.num_cells());
    for (int c = 0; c < grid.num_cells(); ++c) {
      CHECK(field.region[c] == 0);
      const Vector6& s = field.stress[c];
      CHECK(s[0] == doctest::Approx((lambda + 2.0 * mu) * eps).epsilon(1e-10));
      CHECK(s[1] == doctest::Approx(lambda * eps).epsilon(1e-10));
      CHECK(s[2] == doctest::Approx(lambda * eps).epsilon(1e-10));
      for (int k = 3; k < 6; ++k) CHECK(std::abs(s[k]) < 1e-12 * E);
    }
  }

  TEST_CASE("linearized rigid rotation carries no stress") {
    StructuredGrid grid = small_box(2, 1, 1);
    const Vector3 omega(0.3, -0.2, 0.5);
    const Vector u = displacement_from(
        grid, [&omega](const Vector3& x) { return Vector3(omega.cross(x)); });
    const Matrix6 c = isotropic_stiffness(7.0, 0.3);
    const StressField field = recover_stress(grid, u, {{0, c}}, {{0, 0.0}}, 1.0);
    for (const auto& s : field.stress)
      CHECK(s.cwiseAbs().maxCoeff() < 1e-12 * c.norm() * omega.norm());
  }

  TEST_CASE("affine fields give constant stress on distorted meshes") {
    for (ElementType t : {ElementType::Hex8, ElementType::Serendipity20}) {
      StructuredGrid grid = small_box(3, 2, 2, t);
      apply_transformation(grid, [](const Vector3& x) {
        return Vector3(x[0] + 0.05 * x[1] * x[2], x[1] - 0.04 * x[0] * x[2],
                       x[2] + 0.03 * x[0] * x[1]);
      });
      Eigen::Matrix3d g;
      g << 2e-3, 1e-3, -4e-4,
           5e-4, -1e-3, 8e-4,
           -2e-4, 3e-4, 1.5e-3;
      const Vector u = displacement_from(
          grid, [&g](const Vector3& x) { return Vector3(g * x); });
      Vector6 eps;
      eps << g(0, 0), g(1, 1), g(2, 2), g(1, 2) + g(2, 1), g(0, 2) + g(2, 0), g(0, 1) + g(1, 0);
      const Matrix6 c = isotropic_stiffness(9.0, 0.25);
      const Vector6 expect = c * eps;
      const StressField field = recover_stress(grid, u, {{0, c}}, {{0, 0.0}}, 1.0);
      for (const auto& s : field.stress)
        CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-11 * expect.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("rotated regions report stress in the material frame") {
    const double theta_deg = 30.0;
    StructuredGrid grid = small_box(2, 2, 1);
    const Matrix6 c_mat = orthotropic_stiffness(reference_ply_material());
    const Matrix6 c_glob = rotate_stiffness(c_mat, theta_deg);

    Eigen::Matrix3d g;
    g << 1e-3, 4e-4, 2e-4,
         -3e-4, 2e-3, 5e-4,
         1e-4, -2e-4, -1e-3;
    const Vector u = displacement_from(
        grid, [&g](const Vector3& x) { return Vector3(g * x); });
    Vector6 eps;
    eps << g(0, 0), g(1, 1), g(2, 2), g(1, 2) + g(2, 1), g(0, 2) + g(2, 0), g(0, 1) + g(1, 0);
    const Vector6 sigma_glob = c_glob * eps;

    // Material axes sit at +theta about z: components transform with R^T S R.
    const double th = theta_deg * M_PI / 180.0;
    Eigen::Matrix3d r;
    r << std::cos(th), -std::sin(th), 0.0,
         std::sin(th), std::cos(th), 0.0,
         0.0, 0.0, 1.0;
    const Vector6 expect =
        stress_voigt(r.transpose() * stress_tensor(sigma_glob) * r);

    const StressField field =
        recover_stress(grid, u, {{0, c_glob}}, {{0, theta_deg}}, 1.0);
    for (const auto& s : field.stress)
      CHECK((s - expect).cwiseAbs().maxCoeff() < 1e-10 * expect.cwiseAbs().maxCoeff());

    // The default unit conversion scales everything by 1000.
    const StressField mpa = recover_stress(grid, u, {{0, c_glob}}, {{0, theta_deg}});
    for (std::size_t e = 0; e < mpa.stress.size(); ++e)
      CHECK((mpa.stress[e] - 1000.0 * field.stress[e]).cwiseAbs().maxCoeff() <
            1e-12 * mpa.stress[e].cwiseAbs().maxCoeff());
  }

  TEST_CASE("recover_stress rejects bad inputs") {
    StructuredGrid grid = small_box(1, 1, 1);
    const Matrix6 c = isotropic_stiffness(1.0, 0.3);
    CHECK_THROWS_AS(recover_stress(grid, Vector::Zero(5), {{0, c}}, {}), ConfigError);
    CHECK_THROWS_AS(
        recover_stress(grid, Vector::Zero(3 * grid.num_nodes()), {{7, c}}, {}), ConfigError);
  }

  TEST_CASE("quadratic interaction criterion") {
    const Allowables a;
    CHECK(camanho(make_stress(0, 0, 61, 0, 0, 0), a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(camanho(make_stress(0, 0, -100, 0, 0, 0), a) == 0.0);
    CHECK(camanho(make_stress(0, 0, 61, 94, 97, 0), a) ==
          doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    CHECK(camanho(make_stress(0, 0, 0, 47, 0, 0), a) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(camanho(make_stress(0, 0, 0, 0, 48.5, 0), a) == doctest::Approx(0.5).epsilon(1e-14));

    // In-plane components do not contribute.
    CHECK(camanho(make_stress(500, -300, 61, 0, 0, 999), a) ==
          doctest::Approx(1.0).epsilon(1e-14));
    // Shear enters squared, so the sign is immaterial.
    CHECK(camanho(make_stress(0, 0, 0, -94, 0, 0), a) ==
          camanho(make_stress(0, 0, 0, 94, 0, 0), a));
    // Monotone in each damaging component.
    const double base = camanho(make_stress(0, 0, 30, 20, 10, 0), a);
    CHECK(camanho(make_stress(0, 0, 40, 20, 10, 0), a) > base);
    CHECK(camanho(make_stress(0, 0, 30, 30, 10, 0), a) > base);
    CHECK(camanho(make_stress(0, 0, 30, 20, 20, 0), a) > base);

    CHECK_THROWS_AS(camanho(make_stress(0, 0, 1, 0, 0, 0), Allowables{0.0, 97.0, 94.0}),
                    ConfigError);
  }

  TEST_CASE("failure load scales the applied pressure to first failure") {
    const Allowables a;
    StressField field;
    field.stress = {make_stress(0, 0, 1000, 0, 0, 0),   // region 0: ignored
                    make_stress(0, 0, 30.5, 0, 0, 0),   // region 1: F = 0.5
                    make_stress(0, 0, 12.2, 0, 0, 0)};  // region 1: F = 0.2
    field.region = {0, 1, 1};

    const FailureSummary s = failure_load(0.01, field, {1}, a);
    CHECK(s.f_max == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.q_star == doctest::Approx(0.02).epsilon(1e-12));

    // Doubling the stresses halves the failure load.
    StressField doubled = field;
    for (auto& sig : doubled.stress) sig *= 2.0;
    CHECK(failure_load(0.01, doubled, {1}, a).q_star == doctest::Approx(0.01).epsilon(1e-12));

    // F_max = 1 returns the applied load itself.
    StressField critical;
    critical.stress = {make_stress(0, 0, 61, 0, 0, 0)};
    critical.region = {1};
    CHECK(failure_load(0.01, critical, {1}, a).q_star == doctest::Approx(0.01).epsilon(1e-12));

    // No interface stress leaves the sentinel.
    StressField quiet;
    quiet.stress = {make_stress(0, 0, -5, 0, 0, 0)};
    quiet.region = {1};
    const FailureSummary empty = failure_load(0.01, quiet, {1}, a);
    CHECK(empty.f_max == 0.0);
    CHECK(std::isinf(empty.q_star));
  }

  TEST_CASE("max displacement scans one block component") {
    Vector u(9);
    u << 1.0, -2.5, 0.5, -0.25, 2.0, -1.5, 0.75, -0.5, 1.25;
    CHECK(max_displacement(u) == doctest::Approx(1.5));           // component 2
    CHECK(max_displacement(u, 3, 0) == doctest::Approx(1.0));
    CHECK(max_displacement(u, 3, 1) == doctest::Approx(2.5));
    CHECK(max_displacement(Vector::Zero(9)) == 0.0);
    CHECK_THROWS_AS(max_displacement(u, 3, 3), ConfigError);
  }

  TEST_CASE("vtk output round-trips geometry and fields") {
    StructuredGrid grid = small_box(1, 1, 1);
    Vector u(3 * grid.num_nodes());
    for (int i = 0; i < u.size(); ++i) u[i] = 0.001 * i - 0.01;
    Vector scalar(grid.num_nodes());
    for (int i = 0; i < scalar.size(); ++i) scalar[i] = 10.0 + i;
    std::vector<VtkCellField> cells{{"failure_index", {0.75}}};

    std::ostringstream out;
    write_vtk(out, grid, &u, &scalar, "pressure", cells);
    std::istringstream in(out.str());
    std::string line;

    REQUIRE(std::getline(in, line));
    CHECK(line == "# vtk DataFile Version 3.0");
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line == "ASCII");
    std::getline(in, line);
    CHECK(line == "DATASET UNSTRUCTURED_GRID");
    std::getline(in, line);
    CHECK(line == "POINTS 8 double");
    for (int i = 0; i < 8; ++i) {
      REQUIRE(std::getline(in, line));
      std::istringstream coords(line);
      Vector3 x;
      coords >> x[0] >> x[1] >> x[2];
      CHECK((x - grid.node_coordinates[i]).norm() < 1e-9);
    }
    std::getline(in, line);
    CHECK(line == "CELLS 1 9");
    REQUIRE(std::getline(in, line));
    {
      std::istringstream conn(line);
      int npc = 0;
      conn >> npc;
      CHECK(npc == 8);
      const int* nodes = grid.cell_nodes(0);
      for (int i = 0; i < 8; ++i) {
        int id = -1;
        conn >> id;
        CHECK(id == nodes[i]);
      }
    }
    std::getline(in, line);
    CHECK(line == "CELL_TYPES 1");
    std::getline(in, line);
    CHECK(line == "12");
    std::getline(in, line);
    CHECK(line == "POINT_DATA 8");
    std::getline(in, line);
    CHECK(line == "VECTORS displacement double");
    for (int i = 0; i < 8; ++i) {
      REQUIRE(std::getline(in, line));
      std::istringstream vec(line);
      double a = 0, b = 0, c = 0;
      vec >> a >> b >> c;
      CHECK(a == doctest::Approx(u[3 * i]).epsilon(1e-9));
      CHECK(b == doctest::Approx(u[3 * i + 1]).epsilon(1e-9));
      CHECK(c == doctest::Approx(u[3 * i + 2]).epsilon(1e-9));
    }
    std::getline(in, line);
    CHECK(line == "SCALARS pressure double 1");
    std::getline(in, line);
    CHECK(line == "LOOKUP_TABLE default");
    for (int i = 0; i < 8; ++i) {
      REQUIRE(std::getline(in, line));
      CHECK(std::stod(line) == doctest::Approx(scalar[i]).epsilon(1e-12));
    }
    std::getline(in, line);
    CHECK(line == "CELL_DATA 1");
    std::getline(in, line);
    CHECK(line == "SCALARS failure_index double 1");
    std::getline(in, line);
    CHECK(line == "LOOKUP_TABLE default");
    std::getline(in, line);
    CHECK(std::stod(line) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(!std::getline(in, line));  // nothing trails the last section
  }

  TEST_CASE("vtk handles serendipity cells and bare geometry") {
    StructuredGrid grid = small_box(1, 1, 1, ElementType::Serendipity20);
    std::ostringstream out;
    write_vtk(out, grid, nullptr, {});
    const std::string text = out.str();
    CHECK(text.find("POINTS 20 double") != std::string::npos);
    CHECK(text.find("CELLS 1 21") != std::string::npos);
    CHECK(text.find("\n25\n") != std::string::npos);
    CHECK(text.find("POINT_DATA") == std::string::npos);
    CHECK(text.find("CELL_DATA") == std::string::npos);

    Vector bad(5);
    CHECK_THROWS_AS(write_vtk(out, grid, &bad, {}), ConfigError);
    CHECK_THROWS_AS(
        write_vtk(std::string("/nonexistent_dir_xyz/f.vtk"), grid, nullptr, {}), IoError);
  }
}
