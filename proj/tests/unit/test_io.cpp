#include <doctest.h>

#include <sstream>

#include "geneo/io.hpp"
#include "geneo/problems.hpp"
#include "test_helpers.hpp"

using namespace geneo;
using geneo::testing::random_vector;
using geneo::testing::to_sparse;

TEST_SUITE("io") {
  TEST_CASE("stacking CSV round-trips the reference laminate") {
    const std::vector<StackingRow> rows = reference_plate_stacking();
    std::ostringstream out;
    write_stacking_csv(out, rows);
    CHECK(out.str().rfind("region_id,orientation_deg,thickness,elements_through_layer,"
                          "material_id\n", 0) == 0);

    std::istringstream in(out.str());
    const std::vector<StackingRow> back = read_stacking_csv(in);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(back[i].region_id == rows[i].region_id);
      CHECK(back[i].orientation_deg == rows[i].orientation_deg);
      CHECK(back[i].thickness == rows[i].thickness);
      CHECK(back[i].elements_through_layer == rows[i].elements_through_layer);
      CHECK(back[i].material_id == rows[i].material_id);
    }
  }

  TEST_CASE("stacking CSV tolerates comments and blank lines") {
    std::istringstream in(
        "# laminate definition\n"
        "\n"
        "region_id,orientation_deg,thickness,elements_through_layer,material_id\n"
        "# ply block\n"
        "0, -45.0, 0.23, 2, 0\n"
        "\n"
        "1, 0, 0.02, 1, 1\n");
    const auto rows = read_stacking_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].region_id == 0);
    CHECK(rows[0].orientation_deg == -45.0);
    CHECK(rows[0].thickness == 0.23);
    CHECK(rows[0].elements_through_layer == 2);
    CHECK(rows[0].material_id == 0);
    CHECK(rows[1].material_id == 1);
  }

  TEST_CASE("stacking CSV rejects malformed input") {
    SUBCASE("missing header") {
      std::istringstream in("0,45,0.23,2,0\n");
      CHECK_THROWS_AS(read_stacking_csv(in), IoError);
    }
    SUBCASE("wrong field count") {
      std::istringstream in(
          "region_id,orientation_deg,thickness,elements_through_layer,material_id\n"
          "0,45,0.23\n");
      CHECK_THROWS_AS(read_stacking_csv(in), IoError);
    }
    SUBCASE("unparsable number names the line") {
      std::istringstream in(
          "region_id,orientation_deg,thickness,elements_through_layer,material_id\n"
          "0,forty-five,0.23,2,0\n");
      CHECK_THROWS_WITH_AS(read_stacking_csv(in),
                           doctest::Contains("line 2"), IoError);
    }
    SUBCASE("non-positive thickness") {
      std::istringstream in(
          "region_id,orientation_deg,thickness,elements_through_layer,material_id\n"
          "0,45,0.0,2,0\n");
      CHECK_THROWS_AS(read_stacking_csv(in), IoError);
    }
    SUBCASE("empty input") {
      std::istringstream in("");
      CHECK_THROWS_AS(read_stacking_csv(in), IoError);
    }
    SUBCASE("missing file") {
      CHECK_THROWS_AS(read_stacking_csv(std::string("/no/such/file.csv")), IoError);
    }
  }

  TEST_CASE("matrix market sparse output parses back exactly") {
    Matrix dense(3, 2);
    dense << 1.5, 0.0,
             0.0, -2.25,
             3.125, 0.0;
    const SparseMatrix a = to_sparse(dense);
    std::ostringstream out;
    write_matrix_market(out, a);

    std::istringstream in(out.str());
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "%%MatrixMarket matrix coordinate real general");
    int rows = 0, cols = 0, nnz = 0;
    in >> rows >> cols >> nnz;
    CHECK(rows == 3);
    CHECK(cols == 2);
    CHECK(nnz == 3);
    Matrix parsed = Matrix::Zero(rows, cols);
    for (int k = 0; k < nnz; ++k) {
      int i = 0, j = 0;
      double v = 0.0;
      in >> i >> j >> v;
      parsed(i - 1, j - 1) = v;
    }
    CHECK((parsed - dense).cwiseAbs().maxCoeff() == 0.0);  // values are dyadic
  }

  TEST_CASE("matrix market array output is column major") {
    Matrix a(2, 2);
    a << 1, 3,
         2, 4;
    std::ostringstream out;
    write_matrix_market(out, a);
    CHECK(out.str() == "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");

    const Vector v = (Vector(3) << -1.5, 0.0, 2.5).finished();
    std::ostringstream vout;
    write_matrix_market(vout, v);
    CHECK(vout.str() == "%%MatrixMarket matrix array real general\n3 1\n-1.5\n0\n2.5\n");
  }

  TEST_CASE("matrix market round-trips random data through full precision") {
    const Vector v = random_vector(20);
    std::ostringstream out;
    write_matrix_market(out, v);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    int rows = 0, cols = 0;
    in >> rows >> cols;
    REQUIRE(rows == 20);
    REQUIRE(cols == 1);
    for (int i = 0; i < rows; ++i) {
      double x = 0.0;
      in >> x;
      CHECK(x == v[i]);  // 17 significant digits reproduce doubles exactly
    }
  }

  TEST_CASE("residual CSV lists the relative history") {
    SolveReport report;
    report.residual_history = {1.0, 0.25, 0.0625};
    std::ostringstream out;
    write_residual_csv(out, report);
    CHECK(out.str() == "iteration,rel_residual\n0,1\n1,0.25\n2,0.0625\n");
  }

  TEST_CASE("open_output fails loudly") {
    CHECK_THROWS_AS(open_output("/nonexistent_dir_xyz/file.csv"), IoError);
  }
}
