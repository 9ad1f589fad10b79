#include "geneo/element.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>

namespace geneo {

namespace {

const double H = 1.0;  // reference half-width

const std::array<std::array<double, 3>, 8> kCorners = {{{-H, -H, -H},
                                                        {H, -H, -H},
                                                        {H, H, -H},
                                                        {-H, H, -H},
                                                        {-H, -H, H},
                                                        {H, -H, H},
                                                        {H, H, H},
                                                        {-H, H, H}}};

// VTK quadratic hexahedron edge list: (corner, corner) per mid-edge node.
const std::array<std::array<int, 2>, 12> kEdges = {{{0, 1},
                                                    {1, 2},
                                                    {2, 3},
                                                    {3, 0},
                                                    {4, 5},
                                                    {5, 6},
                                                    {6, 7},
                                                    {7, 4},
                                                    {0, 4},
                                                    {1, 5},
                                                    {2, 6},
                                                    {3, 7}}};

std::vector<Vector3> make_reference_nodes(ElementType t) {
  std::vector<Vector3> nodes;
  for (const auto& c : kCorners) nodes.emplace_back(c[0], c[1], c[2]);
  if (t == ElementType::Serendipity20)
    for (const auto& e : kEdges) nodes.push_back(0.5 * (nodes[e[0]] + nodes[e[1]]));
  return nodes;
}

struct Gauss1d {
  std::vector<double> x, w;
};

Gauss1d gauss_1d(int n) {
  switch (n) {
    case 1:
      return {{0.0}, {2.0}};
    case 2: {
      const double a = 1.0 / std::sqrt(3.0);
      return {{-a, a}, {1.0, 1.0}};
    }
    case 3: {
      const double a = std::sqrt(3.0 / 5.0);
      return {{-a, 0.0, a}, {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    }
    case 4: {
      const double a = 0.33998104358485626, b = 0.8611363115940526;
      const double wa = 0.6521451548625461, wb = 0.34785484513745385;
      return {{-b, -a, a, b}, {wb, wa, wa, wb}};
    }
    case 5: {
      const double a = 0.5384693101056831, b = 0.9061798459386640;
      const double wa = 0.47862867049936647, wb = 0.23692688505618908;
      const double w0 = 0.5688888888888889;
      return {{-b, -a, 0.0, a, b}, {wb, wa, w0, wa, wb}};
    }
    default:
      throw ConfigError("gauss_rule: supported orders are 1..5");
  }
}

}  // namespace

int nodes_per_element(ElementType t) { return t == ElementType::Hex8 ? 8 : 20; }

const std::vector<Vector3>& reference_nodes(ElementType t) {
  static const std::vector<Vector3> hex8 = make_reference_nodes(ElementType::Hex8);
  static const std::vector<Vector3> s20 = make_reference_nodes(ElementType::Serendipity20);
  return t == ElementType::Hex8 ? hex8 : s20;
}

ShapeEval shape_basis(ElementType t, const Vector3& xi) {
  for (int d = 0; d < 3; ++d)
    if (std::abs(xi[d]) > 1.0 + 1e-12)
      throw ConfigError("shape_basis: reference point outside [-1,1]^3");
  const int n = nodes_per_element(t);
  ShapeEval sh;
  sh.N.resize(n);
  sh.dN.resize(n, 3);
  const double x = xi[0], y = xi[1], z = xi[2];

  if (t == ElementType::Hex8) {
    for (int i = 0; i < 8; ++i) {
      const double a = kCorners[i][0], b = kCorners[i][1], c = kCorners[i][2];
      sh.N[i] = (1 + a * x) * (1 + b * y) * (1 + c * z) / 8.0;
      sh.dN(i, 0) = a * (1 + b * y) * (1 + c * z) / 8.0;
      sh.dN(i, 1) = (1 + a * x) * b * (1 + c * z) / 8.0;
      sh.dN(i, 2) = (1 + a * x) * (1 + b * y) * c / 8.0;
    }
    return sh;
  }

  // 20-node serendipity element.
  for (int i = 0; i < 8; ++i) {
    const double a = kCorners[i][0], b = kCorners[i][1], c = kCorners[i][2];
    const double fx = 1 + a * x, fy = 1 + b * y, fz = 1 + c * z;
    const double g = a * x + b * y + c * z - 2.0;
    sh.N[i] = fx * fy * fz * g / 8.0;
    sh.dN(i, 0) = a * fy * fz * (2 * a * x + b * y + c * z - 1.0) / 8.0;
    sh.dN(i, 1) = b * fx * fz * (a * x + 2 * b * y + c * z - 1.0) / 8.0;
    sh.dN(i, 2) = c * fx * fy * (a * x + b * y + 2 * c * z - 1.0) / 8.0;
  }
  const auto& ref = reference_nodes(t);
  for (int i = 8; i < 20; ++i) {
    const double a = ref[i][0], b = ref[i][1], c = ref[i][2];
    if (a == 0.0) {
      const double fy = 1 + b * y, fz = 1 + c * z;
      sh.N[i] = (1 - x * x) * fy * fz / 4.0;
      sh.dN(i, 0) = -x * fy * fz / 2.0;
      sh.dN(i, 1) = (1 - x * x) * b * fz / 4.0;
      sh.dN(i, 2) = (1 - x * x) * fy * c / 4.0;
    } else if (b == 0.0) {
      const double fx = 1 + a * x, fz = 1 + c * z;
      sh.N[i] = fx * (1 - y * y) * fz / 4.0;
      sh.dN(i, 0) = a * (1 - y * y) * fz / 4.0;
      sh.dN(i, 1) = fx * (-y) * fz / 2.0;
      sh.dN(i, 2) = fx * (1 - y * y) * c / 4.0;
    } else {
      const double fx = 1 + a * x, fy = 1 + b * y;
      sh.N[i] = fx * fy * (1 - z * z) / 4.0;
      sh.dN(i, 0) = a * fy * (1 - z * z) / 4.0;
      sh.dN(i, 1) = fx * b * (1 - z * z) / 4.0;
      sh.dN(i, 2) = fx * fy * (-z) / 2.0;
    }
  }
  return sh;
}

const QuadratureRule& gauss_rule(int points_per_axis) {
  static std::map<int, QuadratureRule> cache;
  auto it = cache.find(points_per_axis);
  if (it != cache.end()) return it->second;

  const Gauss1d g = gauss_1d(points_per_axis);
  QuadratureRule rule;
  rule.points_per_axis = points_per_axis;
  for (int k = 0; k < points_per_axis; ++k)
    for (int j = 0; j < points_per_axis; ++j)
      for (int i = 0; i < points_per_axis; ++i) {
        rule.points.emplace_back(g.x[i], g.x[j], g.x[k]);
        rule.weights.push_back(g.w[i] * g.w[j] * g.w[k]);
      }
  return cache.emplace(points_per_axis, std::move(rule)).first->second;
}

int full_integration_points(ElementType t) { return t == ElementType::Hex8 ? 2 : 3; }

namespace {

struct MappedGradients {
  Eigen::Matrix<double, Eigen::Dynamic, 3> dNp;  // physical gradients
  double detJ = 0;
};

MappedGradients map_gradients(const NodeBlock& X, const ShapeEval& sh) {
  Eigen::Matrix3d J = Eigen::Matrix3d::Zero();
  // J(r,s) = d x_r / d xi_s
  J = (X.transpose() * sh.dN).eval();
  MappedGradients m;
  m.detJ = J.determinant();
  if (!(m.detJ > 0.0))
    throw NumericsError("element mapping: non-positive Jacobian determinant " +
                        std::to_string(m.detJ));
  m.dNp = sh.dN * J.inverse();
  return m;
}

Matrix build_B(const Eigen::Matrix<double, Eigen::Dynamic, 3>& dNp) {
  const int n = static_cast<int>(dNp.rows());
  Matrix B = Matrix::Zero(6, 3 * n);
  for (int i = 0; i < n; ++i) {
    const double dx = dNp(i, 0), dy = dNp(i, 1), dz = dNp(i, 2);
    B(0, 3 * i + 0) = dx;
    B(1, 3 * i + 1) = dy;
    B(2, 3 * i + 2) = dz;
    B(3, 3 * i + 1) = dz;  // g23 = dv/dz + dw/dy
    B(3, 3 * i + 2) = dy;
    B(4, 3 * i + 0) = dz;  // g13 = du/dz + dw/dx
    B(4, 3 * i + 2) = dx;
    B(5, 3 * i + 0) = dy;  // g12 = du/dy + dv/dx
    B(5, 3 * i + 1) = dx;
  }
  return B;
}

}  // namespace

Matrix element_stiffness_elasticity(const NodeBlock& X, ElementType t, const Matrix6& C,
                                    int npts) {
  const int n = nodes_per_element(t);
  if (X.rows() != n) throw ConfigError("element_stiffness_elasticity: node count mismatch");
  const auto& rule = gauss_rule(npts > 0 ? npts : full_integration_points(t));
  Matrix K = Matrix::Zero(3 * n, 3 * n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const ShapeEval sh = shape_basis(t, rule.points[q]);
    const MappedGradients m = map_gradients(X, sh);
    const Matrix B = build_B(m.dNp);
    K.noalias() += (rule.weights[q] * m.detJ) * (B.transpose() * C * B);
  }
  return K;
}

Matrix element_stiffness_diffusion(const NodeBlock& X, ElementType t, const Vector3& K,
                                   int npts) {
  const int n = nodes_per_element(t);
  if (X.rows() != n) throw ConfigError("element_stiffness_diffusion: node count mismatch");
  const auto& rule = gauss_rule(npts > 0 ? npts : full_integration_points(t));
  Matrix A = Matrix::Zero(n, n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const ShapeEval sh = shape_basis(t, rule.points[q]);
    const MappedGradients m = map_gradients(X, sh);
    A.noalias() += (rule.weights[q] * m.detJ) * (m.dNp * K.asDiagonal() * m.dNp.transpose());
  }
  return A;
}

Vector element_body_load(const NodeBlock& X, ElementType t, int block_size,
                         const std::function<Vector3(const Vector3&)>& f, int npts) {
  const int n = nodes_per_element(t);
  const auto& rule = gauss_rule(npts > 0 ? npts : full_integration_points(t));
  Vector fe = Vector::Zero(block_size * n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const ShapeEval sh = shape_basis(t, rule.points[q]);
    const MappedGradients m = map_gradients(X, sh);
    const Vector3 x = X.transpose() * sh.N;
    const Vector3 fv = f(x);
    const double s = rule.weights[q] * m.detJ;
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < block_size; ++r) fe[block_size * i + r] += s * sh.N[i] * fv[r];
  }
  return fe;
}

namespace {

// Faces 0..5 = -x,+x,-y,+y,-z,+z; corners first, then mid-edge nodes.
const std::array<std::vector<int>, 6> kFacesHex8 = {{{0, 3, 7, 4},
                                                     {1, 2, 6, 5},
                                                     {0, 1, 5, 4},
                                                     {3, 2, 6, 7},
                                                     {0, 1, 2, 3},
                                                     {4, 5, 6, 7}}};

const std::array<std::vector<int>, 6> kFacesS20 = {{{0, 3, 7, 4, 11, 19, 15, 16},
                                                    {1, 2, 6, 5, 9, 18, 13, 17},
                                                    {0, 1, 5, 4, 8, 17, 12, 16},
                                                    {3, 2, 6, 7, 10, 18, 14, 19},
                                                    {0, 1, 2, 3, 8, 9, 10, 11},
                                                    {4, 5, 6, 7, 12, 13, 14, 15}}};

// 2D shape functions on the reference face, corner order
// (-1,-1),(1,-1),(1,1),(-1,1), midsides (0,-1),(1,0),(0,1),(-1,0).
void face_shape(int nn, double s, double t, Eigen::VectorXd& N, Eigen::MatrixXd& dN) {
  const double cs[4] = {-1, 1, 1, -1}, ct[4] = {-1, -1, 1, 1};
  N.resize(nn);
  dN.resize(nn, 2);
  if (nn == 4) {
    for (int i = 0; i < 4; ++i) {
      N[i] = (1 + cs[i] * s) * (1 + ct[i] * t) / 4.0;
      dN(i, 0) = cs[i] * (1 + ct[i] * t) / 4.0;
      dN(i, 1) = (1 + cs[i] * s) * ct[i] / 4.0;
    }
    return;
  }
  for (int i = 0; i < 4; ++i) {
    const double a = cs[i], b = ct[i];
    N[i] = (1 + a * s) * (1 + b * t) * (a * s + b * t - 1) / 4.0;
    dN(i, 0) = a * (1 + b * t) * (2 * a * s + b * t) / 4.0;
    dN(i, 1) = b * (1 + a * s) * (a * s + 2 * b * t) / 4.0;
  }
  const double ms[4] = {0, 1, 0, -1}, mt[4] = {-1, 0, 1, 0};
  for (int i = 0; i < 4; ++i) {
    const double a = ms[i], b = mt[i];
    if (a == 0.0) {
      N[4 + i] = (1 - s * s) * (1 + b * t) / 2.0;
      dN(4 + i, 0) = -s * (1 + b * t);
      dN(4 + i, 1) = (1 - s * s) * b / 2.0;
    } else {
      N[4 + i] = (1 + a * s) * (1 - t * t) / 2.0;
      dN(4 + i, 0) = a * (1 - t * t) / 2.0;
      dN(4 + i, 1) = (1 + a * s) * (-t);
    }
  }
}

}  // namespace

const std::vector<int>& face_local_nodes(ElementType t, int face) {
  if (face < 0 || face > 5) throw ConfigError("face_local_nodes: face index out of range");
  return t == ElementType::Hex8 ? kFacesHex8[face] : kFacesS20[face];
}

Vector element_face_load(const NodeBlock& X, ElementType t, int face, int block_size,
                         const std::function<Vector3(const Vector3&, const Vector3&)>& traction,
                         int npts) {
  const int n = nodes_per_element(t);
  const auto& fnodes = face_local_nodes(t, face);
  const int fn = static_cast<int>(fnodes.size());
  const Gauss1d g = gauss_1d(npts > 0 ? npts : full_integration_points(t));

  // Physical coordinates of the face nodes and the cell centroid (used to
  // orient the normal outward regardless of mesh transformation).
  Eigen::MatrixXd Xf(fn, 3);
  for (int i = 0; i < fn; ++i) Xf.row(i) = X.row(fnodes[i]);
  const Vector3 cell_centroid = X.colwise().mean();

  Vector fe = Vector::Zero(block_size * n);
  Eigen::VectorXd N;
  Eigen::MatrixXd dN;
  for (int qj = 0; qj < (int)g.x.size(); ++qj)
    for (int qi = 0; qi < (int)g.x.size(); ++qi) {
      face_shape(fn, g.x[qi], g.x[qj], N, dN);
      const Vector3 x = Xf.transpose() * N;
      const Vector3 ts = Xf.transpose() * dN.col(0);
      const Vector3 tt = Xf.transpose() * dN.col(1);
      Vector3 normal = ts.cross(tt);
      const double dA = normal.norm();
      if (dA <= 0.0) throw NumericsError("element_face_load: degenerate face mapping");
      normal /= dA;
      if (normal.dot(x - cell_centroid) < 0.0) normal = -normal;
      const Vector3 tr = traction(x, normal);
      const double s = g.w[qi] * g.w[qj] * dA;
      for (int i = 0; i < fn; ++i)
        for (int r = 0; r < block_size; ++r)
          fe[block_size * fnodes[i] + r] += s * N[i] * tr[r];
    }
  return fe;
}

Matrix strain_displacement(const NodeBlock& X, ElementType t, const Vector3& xi, double* detJ) {
  const ShapeEval sh = shape_basis(t, xi);
  const MappedGradients m = map_gradients(X, sh);
  if (detJ) *detJ = m.detJ;
  return build_B(m.dNp);
}

}  // namespace geneo
