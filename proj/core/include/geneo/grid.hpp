#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "geneo/common.hpp"
#include "geneo/element.hpp"

namespace geneo {

/// One layer of a layer-cake mesh (a ply, an interface, or a plain slab).
struct LayerSpec {
  int region_id = 0;
  double thickness = 0;
  int elements = 0;  // elements through this layer
};

struct GridSpec {
  double extent_x = 0, extent_y = 0;  // z extent is the layer stack total
  int cells_x = 0, cells_y = 0;
  std::vector<LayerSpec> layers;
  ElementType element_type = ElementType::Hex8;
  std::string transformation;  // optional named transformation id

  /// Plain box domain: a single layer with nz elements.
  static GridSpec box(double lx, double ly, double lz, int nx, int ny, int nz,
                      ElementType t = ElementType::Hex8);

  double total_thickness() const;
};

/// Uniform refinement: doubles the cell count per axis per level.
GridSpec refine(const GridSpec& spec, int levels);

/// Structured hexahedral mesh. Vertex nodes are numbered x-fastest; the
/// 20-node serendipity variant appends x-, y- and z-edge midpoint nodes.
class StructuredGrid {
 public:
  ElementType element_type = ElementType::Hex8;
  int ncx = 0, ncy = 0, ncz = 0;
  std::vector<Vector3> node_coordinates;
  std::vector<int> cell_connectivity;  // num_cells * nodes_per_cell
  std::vector<int> cell_region;
  std::vector<int> sheet_layer;  // layer index of each z-sheet of cells
  GridSpec spec;

  int num_cells() const { return ncx * ncy * ncz; }
  int num_nodes() const { return static_cast<int>(node_coordinates.size()); }
  int nodes_per_cell() const { return nodes_per_element(element_type); }
  int num_vertices() const { return (ncx + 1) * (ncy + 1) * (ncz + 1); }

  int cell_index(int i, int j, int k) const { return i + ncx * (j + ncy * k); }
  std::array<int, 3> cell_ijk(int c) const {
    return {c % ncx, (c / ncx) % ncy, c / (ncx * ncy)};
  }
  const int* cell_nodes(int c) const { return cell_connectivity.data() + (std::size_t)c * nodes_per_cell(); }
  NodeBlock cell_coordinates(int c) const;

  /// Minimum axis-aligned extents of a cell's vertex bounding box.
  Vector3 cell_extents(int c) const;

  struct Face {
    int cell;
    int side;  // 0..5 = -x,+x,-y,+y,-z,+z
  };
  std::vector<Face> boundary_faces() const;

  /// Node to incident-cell adjacency (cells sharing the node).
  std::vector<std::vector<int>> node_cells() const;
};

/// Builds the layer-cake mesh and applies the spec's named transformation.
/// Throws ConfigError for invalid specs and NumericsError when the mapped
/// mesh has a non-positive Jacobian.
StructuredGrid build_layer_cake(const GridSpec& spec);

using PointMap = std::function<Vector3(const Vector3&)>;

/// Maps every node and re-validates cell Jacobians.
void apply_transformation(StructuredGrid& grid, const PointMap& map);

/// Parses a named transformation: "identity", "scale:sx,sy,sz",
/// "zgrade:bias" (per-layer symmetric geometric grading toward the layer
/// boundaries with max/min element size = bias), "bend:R" (cylindrical bend
/// of the x axis about radius R).
PointMap make_transformation(const std::string& id, const GridSpec& spec);

/// Checks det J > 0 at every quadrature point of every cell.
void check_jacobians(const StructuredGrid& grid);

enum class Adjacency { Face, Box };

/// Overlapping domain decomposition of the cell set: a Cartesian block
/// partition (x-fastest subdomain numbering) extended by `overlap` layers of
/// cells on every side. Face adjacency grows by face-neighbor layers; box
/// adjacency grows the block's index box (and keeps the partition of unity
/// well defined for multi-axis partitions).
struct OverlappingDecomposition {
  std::array<int, 3> shape{1, 1, 1};
  int overlap = 0;
  Adjacency adjacency = Adjacency::Face;

  std::vector<int> cell_owner;                    // per cell
  std::vector<std::vector<int>> subdomain_cells;  // sorted, includes overlap
  std::vector<std::vector<int>> overlap_cells;    // cells lying in >= 2 subdomains
  std::vector<std::vector<int>> neighbors;        // sorted, irreflexive
  std::vector<std::vector<int>> subdomain_nodes;  // sorted global node ids
  // Aligned with subdomain_nodes: 1 when the node touches a cell outside the
  // subdomain (the artificial interior boundary).
  std::vector<std::vector<uint8_t>> interior_boundary;
  std::vector<int> node_multiplicity;  // # subdomains containing the node
  std::vector<int> pou_count;          // # subdomains where the node is interior
  std::vector<int> node_owner;         // min owner over incident cells
  std::vector<std::string> warnings;

  int num_subdomains() const { return static_cast<int>(subdomain_cells.size()); }
};

OverlappingDecomposition decompose(const StructuredGrid& grid, const std::array<int, 3>& shape,
                                   int overlap, Adjacency adjacency = Adjacency::Face);

}  // namespace geneo
