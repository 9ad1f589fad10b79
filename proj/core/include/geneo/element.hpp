#pragma once

#include <functional>

#include "geneo/common.hpp"

namespace geneo {

enum class ElementType { Hex8, Serendipity20 };

int nodes_per_element(ElementType t);

/// Node coordinates on the reference cube [-1,1]^3 in VTK ordering
/// (8 corners, then 12 edge midpoints for the 20-node serendipity element).
const std::vector<Vector3>& reference_nodes(ElementType t);

/// Shape function values and reference-space gradients at a point.
struct ShapeEval {
  Eigen::VectorXd N;                          // n
  Eigen::Matrix<double, Eigen::Dynamic, 3> dN;  // n x 3, d/dxi
};

ShapeEval shape_basis(ElementType t, const Vector3& xi);

struct QuadratureRule {
  std::vector<Vector3> points;
  std::vector<double> weights;
  int points_per_axis = 0;
};

/// Tensor Gauss-Legendre rule with n points per axis (1 <= n <= 5).
const QuadratureRule& gauss_rule(int points_per_axis);

/// Full integration order for each element type (2 for Hex8, 3 for the
/// 20-node serendipity element).
int full_integration_points(ElementType t);

using NodeBlock = Eigen::Matrix<double, Eigen::Dynamic, 3>;  // n x 3 coordinates

/// Element stiffness for anisotropic linear elasticity, dofs blocked per node
/// (ux, uy, uz). C is the 6x6 Hooke matrix in Voigt order (11,22,33,23,13,12)
/// with engineering shear. npts = 0 uses full integration.
/// Throws NumericsError when det J <= 0 at a quadrature point.
Matrix element_stiffness_elasticity(const NodeBlock& X, ElementType t, const Matrix6& C,
                                    int npts = 0);

/// Element stiffness for scalar diffusion with diagonal coefficient K.
Matrix element_stiffness_diffusion(const NodeBlock& X, ElementType t, const Vector3& K,
                                   int npts = 0);

/// Consistent body force vector: f(x) returns the force density per volume
/// (3 components for elasticity, use block_size 1 with f returning (s,0,0)
/// for a scalar source).
Vector element_body_load(const NodeBlock& X, ElementType t, int block_size,
                         const std::function<Vector3(const Vector3&)>& f, int npts = 0);

/// Local node indices of one of the six cell faces (0..5 = -x,+x,-y,+y,-z,+z);
/// 4 nodes for Hex8, 8 for Serendipity20, corners first.
const std::vector<int>& face_local_nodes(ElementType t, int face);

/// Surface traction load on a cell face. The traction callback receives the
/// physical point and the outward unit normal and returns the traction vector
/// (or (q,0,0) for a scalar flux with block_size 1). The outward direction is
/// fixed by comparison against the cell centroid, so any orientation
/// preserving mesh transformation is handled.
Vector element_face_load(const NodeBlock& X, ElementType t, int face, int block_size,
                         const std::function<Vector3(const Vector3&, const Vector3&)>& traction,
                         int npts = 0);

/// Strain-displacement matrix (6 x 3n) at a reference point; also returns
/// det J. Exposed for stress recovery and tests.
Matrix strain_displacement(const NodeBlock& X, ElementType t, const Vector3& xi, double* detJ = nullptr);

}  // namespace geneo
