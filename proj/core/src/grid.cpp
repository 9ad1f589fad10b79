#include "geneo/grid.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <climits>
#include <cmath>
#include <deque>
#include <memory>
#include <set>
#include <sstream>

namespace geneo {

GridSpec GridSpec::box(double lx, double ly, double lz, int nx, int ny, int nz, ElementType t) {
  GridSpec s;
  s.extent_x = lx;
  s.extent_y = ly;
  s.cells_x = nx;
  s.cells_y = ny;
  s.layers.push_back({0, lz, nz});
  s.element_type = t;
  return s;
}

double GridSpec::total_thickness() const {
  double t = 0;
  for (const auto& l : layers) t += l.thickness;
  return t;
}

GridSpec refine(const GridSpec& spec, int levels) {
  if (levels < 0) throw ConfigError("refine: negative level");
  GridSpec r = spec;
  const int f = 1 << levels;
  r.cells_x *= f;
  r.cells_y *= f;
  for (auto& l : r.layers) l.elements *= f;
  return r;
}

namespace {

struct Numbering {
  int ncx, ncy, ncz;
  int nvx, nvy, nvz;  // vertices per axis
  int V, Ex, Ey;

  explicit Numbering(int cx, int cy, int cz)
      : ncx(cx), ncy(cy), ncz(cz), nvx(cx + 1), nvy(cy + 1), nvz(cz + 1) {
    V = nvx * nvy * nvz;
    Ex = ncx * nvy * nvz;
    Ey = nvx * ncy * nvz;
  }
  int vid(int i, int j, int k) const { return i + nvx * (j + nvy * k); }
  int xe(int i, int j, int k) const { return V + i + ncx * (j + nvy * k); }
  int ye(int i, int j, int k) const { return V + Ex + i + nvx * (j + ncy * k); }
  int ze(int i, int j, int k) const { return V + Ex + Ey + i + nvx * (j + nvy * k); }
};

}  // namespace

NodeBlock StructuredGrid::cell_coordinates(int c) const {
  const int npc = nodes_per_cell();
  NodeBlock X(npc, 3);
  const int* conn = cell_nodes(c);
  for (int i = 0; i < npc; ++i) X.row(i) = node_coordinates[conn[i]];
  return X;
}

Vector3 StructuredGrid::cell_extents(int c) const {
  const int* conn = cell_nodes(c);
  Vector3 lo = node_coordinates[conn[0]], hi = lo;
  for (int i = 1; i < 8; ++i) {  // vertex nodes bound the cell box
    lo = lo.cwiseMin(node_coordinates[conn[i]]);
    hi = hi.cwiseMax(node_coordinates[conn[i]]);
  }
  return hi - lo;
}

std::vector<StructuredGrid::Face> StructuredGrid::boundary_faces() const {
  std::vector<Face> faces;
  for (int k = 0; k < ncz; ++k)
    for (int j = 0; j < ncy; ++j)
      for (int i = 0; i < ncx; ++i) {
        const int c = cell_index(i, j, k);
        if (i == 0) faces.push_back({c, 0});
        if (i == ncx - 1) faces.push_back({c, 1});
        if (j == 0) faces.push_back({c, 2});
        if (j == ncy - 1) faces.push_back({c, 3});
        if (k == 0) faces.push_back({c, 4});
        if (k == ncz - 1) faces.push_back({c, 5});
      }
  return faces;
}

std::vector<std::vector<int>> StructuredGrid::node_cells() const {
  std::vector<std::vector<int>> inc(num_nodes());
  const int npc = nodes_per_cell();
  for (int c = 0; c < num_cells(); ++c) {
    const int* conn = cell_nodes(c);
    for (int i = 0; i < npc; ++i) inc[conn[i]].push_back(c);
  }
  return inc;
}

StructuredGrid build_layer_cake(const GridSpec& spec) {
  if (spec.cells_x < 1 || spec.cells_y < 1)
    throw ConfigError("build_layer_cake: in-plane cell counts must be >= 1");
  if (spec.extent_x <= 0 || spec.extent_y <= 0)
    throw ConfigError("build_layer_cake: extents must be positive");
  if (spec.layers.empty()) throw ConfigError("build_layer_cake: empty layer stack");
  for (const auto& l : spec.layers) {
    if (l.thickness <= 0) throw ConfigError("build_layer_cake: non-positive layer thickness");
    if (l.elements < 1) throw ConfigError("build_layer_cake: layer needs >= 1 element");
  }

  StructuredGrid g;
  g.spec = spec;
  g.element_type = spec.element_type;
  g.ncx = spec.cells_x;
  g.ncy = spec.cells_y;
  g.ncz = 0;
  for (const auto& l : spec.layers) g.ncz += l.elements;

  // z sheet coordinates and the layer owning each cell sheet
  std::vector<double> zs;
  zs.reserve(g.ncz + 1);
  zs.push_back(0.0);
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const double dz = spec.layers[l].thickness / spec.layers[l].elements;
    for (int e = 0; e < spec.layers[l].elements; ++e) {
      zs.push_back(zs.back() + dz);
      g.sheet_layer.push_back(static_cast<int>(l));
    }
  }

  const Numbering num(g.ncx, g.ncy, g.ncz);
  const bool quadratic = spec.element_type == ElementType::Serendipity20;
  const int total_nodes =
      quadratic ? num.V + num.Ex + num.Ey + num.nvx * num.nvy * g.ncz : num.V;
  g.node_coordinates.resize(total_nodes);

  auto xc = [&](int i) { return spec.extent_x * i / g.ncx; };
  auto yc = [&](int j) { return spec.extent_y * j / g.ncy; };

  for (int k = 0; k <= g.ncz; ++k)
    for (int j = 0; j <= g.ncy; ++j)
      for (int i = 0; i <= g.ncx; ++i)
        g.node_coordinates[num.vid(i, j, k)] = Vector3(xc(i), yc(j), zs[k]);

  if (quadratic) {
    for (int k = 0; k <= g.ncz; ++k)
      for (int j = 0; j <= g.ncy; ++j)
        for (int i = 0; i < g.ncx; ++i)
          g.node_coordinates[num.xe(i, j, k)] = Vector3(0.5 * (xc(i) + xc(i + 1)), yc(j), zs[k]);
    for (int k = 0; k <= g.ncz; ++k)
      for (int j = 0; j < g.ncy; ++j)
        for (int i = 0; i <= g.ncx; ++i)
          g.node_coordinates[num.ye(i, j, k)] = Vector3(xc(i), 0.5 * (yc(j) + yc(j + 1)), zs[k]);
    for (int k = 0; k < g.ncz; ++k)
      for (int j = 0; j <= g.ncy; ++j)
        for (int i = 0; i <= g.ncx; ++i)
          g.node_coordinates[num.ze(i, j, k)] =
              Vector3(xc(i), yc(j), 0.5 * (zs[k] + zs[k + 1]));
  }

  const int npc = g.nodes_per_cell();
  g.cell_connectivity.resize(static_cast<std::size_t>(g.num_cells()) * npc);
  g.cell_region.resize(g.num_cells());
  for (int k = 0; k < g.ncz; ++k)
    for (int j = 0; j < g.ncy; ++j)
      for (int i = 0; i < g.ncx; ++i) {
        const int c = g.cell_index(i, j, k);
        int* conn = g.cell_connectivity.data() + static_cast<std::size_t>(c) * npc;
        conn[0] = num.vid(i, j, k);
        conn[1] = num.vid(i + 1, j, k);
        conn[2] = num.vid(i + 1, j + 1, k);
        conn[3] = num.vid(i, j + 1, k);
        conn[4] = num.vid(i, j, k + 1);
        conn[5] = num.vid(i + 1, j, k + 1);
        conn[6] = num.vid(i + 1, j + 1, k + 1);
        conn[7] = num.vid(i, j + 1, k + 1);
        if (quadratic) {
          conn[8] = num.xe(i, j, k);
          conn[9] = num.ye(i + 1, j, k);
          conn[10] = num.xe(i, j + 1, k);
          conn[11] = num.ye(i, j, k);
          conn[12] = num.xe(i, j, k + 1);
          conn[13] = num.ye(i + 1, j, k + 1);
          conn[14] = num.xe(i, j + 1, k + 1);
          conn[15] = num.ye(i, j, k + 1);
          conn[16] = num.ze(i, j, k);
          conn[17] = num.ze(i + 1, j, k);
          conn[18] = num.ze(i + 1, j + 1, k);
          conn[19] = num.ze(i, j + 1, k);
        }
        g.cell_region[c] = spec.layers[g.sheet_layer[k]].region_id;
      }

  if (!spec.transformation.empty() && spec.transformation != "identity")
    apply_transformation(g, make_transformation(spec.transformation, spec));
  else
    check_jacobians(g);
  return g;
}

void check_jacobians(const StructuredGrid& grid) {
  const auto& rule = gauss_rule(full_integration_points(grid.element_type));
  for (int c = 0; c < grid.num_cells(); ++c) {
    const NodeBlock X = grid.cell_coordinates(c);
    for (const auto& xi : rule.points) {
      const ShapeEval sh = shape_basis(grid.element_type, xi);
      const Eigen::Matrix3d J = X.transpose() * sh.dN;
      if (!(J.determinant() > 0.0))
        throw NumericsError("check_jacobians: non-positive Jacobian in cell " + std::to_string(c) +
                            " (det = " + std::to_string(J.determinant()) + ")");
    }
  }
}

void apply_transformation(StructuredGrid& grid, const PointMap& map) {
  for (auto& x : grid.node_coordinates) x = map(x);
  check_jacobians(grid);
}

namespace {

std::vector<double> parse_args(const std::string& s) {
  std::vector<double> args;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) args.push_back(std::stod(tok));
  return args;
}

}  // namespace

PointMap make_transformation(const std::string& id, const GridSpec& spec) {
  if (id.empty() || id == "identity") return [](const Vector3& x) { return x; };

  const auto colon = id.find(':');
  const std::string name = id.substr(0, colon);
  const std::string argstr = colon == std::string::npos ? "" : id.substr(colon + 1);

  if (name == "scale") {
    const auto a = parse_args(argstr);
    if (a.size() != 3) throw ConfigError("transformation scale needs 3 factors");
    const Vector3 s(a[0], a[1], a[2]);
    return [s](const Vector3& x) { return Vector3(x.cwiseProduct(s)); };
  }

  if (name == "bend") {
    const auto a = parse_args(argstr);
    if (a.size() != 1 || a[0] <= 0) throw ConfigError("transformation bend needs a positive radius");
    const double R = a[0];
    return [R](const Vector3& x) {
      const double phi = x[0] / R;
      return Vector3((R + x[2]) * std::sin(phi), x[1], (R + x[2]) * std::cos(phi) - R);
    };
  }

  if (name == "zgrade") {
    const auto a = parse_args(argstr);
    if (a.size() != 1 || a[0] < 1.0) throw ConfigError("transformation zgrade needs bias >= 1");
    const double bias = a[0];
    // Per layer: symmetric geometric progression of element sizes, smallest
    // at the layer boundaries, with max/min = bias. Piecewise linear map on
    // the uniform element knots, so midside nodes stay at element midpoints.
    struct LayerMap {
      double z0, t;
      std::vector<double> knots;  // normalized graded knots, size m+1
    };
    auto maps = std::make_shared<std::vector<LayerMap>>();
    double z0 = 0;
    for (const auto& l : spec.layers) {
      LayerMap lm;
      lm.z0 = z0;
      lm.t = l.thickness;
      const int m = l.elements;
      std::vector<double> w(m, 1.0);
      if (m >= 3) {
        const int p = (m - 1) / 2;
        const double q = std::pow(bias, 1.0 / p);
        for (int e = 0; e < m; ++e) w[e] = std::pow(q, std::min(e, m - 1 - e));
      }
      lm.knots.assign(1, 0.0);
      for (int e = 0; e < m; ++e) lm.knots.push_back(lm.knots.back() + w[e]);
      for (auto& k : lm.knots) k /= lm.knots.back();
      maps->push_back(std::move(lm));
      z0 += l.thickness;
    }
    const double total = z0;
    return [maps, total](const Vector3& x) {
      double z = std::clamp(x[2], 0.0, total);
      for (const auto& lm : *maps) {
        if (z > lm.z0 + lm.t + 1e-14 * total) continue;
        const int m = static_cast<int>(lm.knots.size()) - 1;
        double u = (z - lm.z0) / lm.t;
        u = std::clamp(u, 0.0, 1.0);
        int e = std::min(static_cast<int>(u * m), m - 1);
        const double local = u * m - e;
        const double s = lm.knots[e] + local * (lm.knots[e + 1] - lm.knots[e]);
        return Vector3(x[0], x[1], lm.z0 + s * lm.t);
      }
      return x;
    };
  }

  throw ConfigError("unknown transformation id '" + id + "'");
}

namespace {

std::vector<int> chunk_starts(int n, int parts) {
  std::vector<int> starts(parts + 1, 0);
  const int base = n / parts, rem = n % parts;
  for (int p = 0; p < parts; ++p) starts[p + 1] = starts[p] + base + (p < rem ? 1 : 0);
  return starts;
}

}  // namespace

OverlappingDecomposition decompose(const StructuredGrid& grid, const std::array<int, 3>& shape,
                                   int overlap, Adjacency adjacency) {
  const int n_axis[3] = {grid.ncx, grid.ncy, grid.ncz};
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1) throw ConfigError("decompose: partition shape entries must be >= 1");
    if (shape[a] > n_axis[a])
      throw ConfigError("decompose: more blocks than cells along axis " + std::to_string(a));
  }
  if (overlap < 0) throw ConfigError("decompose: overlap must be >= 0");

  OverlappingDecomposition d;
  d.shape = shape;
  d.overlap = overlap;
  d.adjacency = adjacency;
  const int N = shape[0] * shape[1] * shape[2];
  const int ncells = grid.num_cells();

  const auto sx = chunk_starts(grid.ncx, shape[0]);
  const auto sy = chunk_starts(grid.ncy, shape[1]);
  const auto sz = chunk_starts(grid.ncz, shape[2]);

  auto block_of_coord = [](const std::vector<int>& starts, int i) {
    int b = 0;
    while (i >= starts[b + 1]) ++b;
    return b;
  };

  d.cell_owner.resize(ncells);
  for (int c = 0; c < ncells; ++c) {
    const auto ijk = grid.cell_ijk(c);
    const int bx = block_of_coord(sx, ijk[0]);
    const int by = block_of_coord(sy, ijk[1]);
    const int bz = block_of_coord(sz, ijk[2]);
    d.cell_owner[c] = bx + shape[0] * (by + shape[1] * bz);
  }

  // Extended subdomains
  d.subdomain_cells.resize(N);
  if (adjacency == Adjacency::Box) {
    for (int j = 0; j < N; ++j) {
      const int bx = j % shape[0], by = (j / shape[0]) % shape[1], bz = j / (shape[0] * shape[1]);
      const int ilo = std::max(0, sx[bx] - overlap), ihi = std::min(grid.ncx, sx[bx + 1] + overlap);
      const int jlo = std::max(0, sy[by] - overlap), jhi = std::min(grid.ncy, sy[by + 1] + overlap);
      const int klo = std::max(0, sz[bz] - overlap), khi = std::min(grid.ncz, sz[bz + 1] + overlap);
      for (int k = klo; k < khi; ++k)
        for (int jj = jlo; jj < jhi; ++jj)
          for (int i = ilo; i < ihi; ++i) d.subdomain_cells[j].push_back(grid.cell_index(i, jj, k));
    }
  } else {
    std::vector<int> depth(ncells);
    for (int j = 0; j < N; ++j) {
      std::fill(depth.begin(), depth.end(), -1);
      std::deque<int> queue;
      for (int c = 0; c < ncells; ++c)
        if (d.cell_owner[c] == j) {
          depth[c] = 0;
          queue.push_back(c);
        }
      while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        if (depth[c] == overlap) continue;
        const auto ijk = grid.cell_ijk(c);
        const int di[6] = {-1, 1, 0, 0, 0, 0};
        const int dj[6] = {0, 0, -1, 1, 0, 0};
        const int dk[6] = {0, 0, 0, 0, -1, 1};
        for (int f = 0; f < 6; ++f) {
          const int i2 = ijk[0] + di[f], j2 = ijk[1] + dj[f], k2 = ijk[2] + dk[f];
          if (i2 < 0 || i2 >= grid.ncx || j2 < 0 || j2 >= grid.ncy || k2 < 0 || k2 >= grid.ncz)
            continue;
          const int c2 = grid.cell_index(i2, j2, k2);
          if (depth[c2] < 0) {
            depth[c2] = depth[c] + 1;
            queue.push_back(c2);
          }
        }
      }
      for (int c = 0; c < ncells; ++c)
        if (depth[c] >= 0) d.subdomain_cells[j].push_back(c);
    }
  }

  // Cell membership, overlap cells, neighbor graph
  std::vector<std::vector<int>> cell_subs(ncells);
  for (int j = 0; j < N; ++j)
    for (int c : d.subdomain_cells[j]) cell_subs[c].push_back(j);

  d.overlap_cells.resize(N);
  std::vector<std::set<int>> nb(N);
  for (int c = 0; c < ncells; ++c) {
    const auto& subs = cell_subs[c];
    if (subs.size() < 2) continue;
    for (int j : subs) {
      d.overlap_cells[j].push_back(c);
      for (int q : subs)
        if (q != j) nb[j].insert(q);
    }
  }
  d.neighbors.resize(N);
  for (int j = 0; j < N; ++j) d.neighbors[j].assign(nb[j].begin(), nb[j].end());

  // Node-level structures
  const auto inc = grid.node_cells();
  const int nnodes = grid.num_nodes();
  d.subdomain_nodes.resize(N);
  d.interior_boundary.resize(N);
  d.node_multiplicity.assign(nnodes, 0);
  d.pou_count.assign(nnodes, 0);

  std::vector<char> in_sub(ncells, 0);
  std::vector<char> node_seen(nnodes, 0);
  const int npc = grid.nodes_per_cell();
  for (int j = 0; j < N; ++j) {
    for (int c : d.subdomain_cells[j]) in_sub[c] = 1;
    auto& nodes = d.subdomain_nodes[j];
    for (int c : d.subdomain_cells[j]) {
      const int* conn = grid.cell_nodes(c);
      for (int i = 0; i < npc; ++i)
        if (!node_seen[conn[i]]) {
          node_seen[conn[i]] = 1;
          nodes.push_back(conn[i]);
        }
    }
    std::sort(nodes.begin(), nodes.end());
    auto& ib = d.interior_boundary[j];
    ib.resize(nodes.size(), 0);
    for (std::size_t li = 0; li < nodes.size(); ++li) {
      for (int c : inc[nodes[li]])
        if (!in_sub[c]) {
          ib[li] = 1;
          break;
        }
      d.node_multiplicity[nodes[li]] += 1;
      if (!ib[li]) d.pou_count[nodes[li]] += 1;
      node_seen[nodes[li]] = 0;
    }
    for (int c : d.subdomain_cells[j]) in_sub[c] = 0;
  }

  d.node_owner.assign(nnodes, -1);
  for (int n = 0; n < nnodes; ++n) {
    int owner = INT_MAX;
    for (int c : inc[n]) owner = std::min(owner, d.cell_owner[c]);
    d.node_owner[n] = owner;
  }

  // Report overlaps that reach into blocks that are not lattice-adjacent.
  std::set<std::pair<int, int>> far;
  auto lattice = [&](int j) {
    return std::array<int, 3>{j % shape[0], (j / shape[0]) % shape[1], j / (shape[0] * shape[1])};
  };
  for (int c = 0; c < ncells; ++c) {
    const int o = d.cell_owner[c];
    const auto lo = lattice(o);
    for (int j : cell_subs[c]) {
      if (j == o) continue;
      const auto lj = lattice(j);
      const int cheb = std::max({std::abs(lj[0] - lo[0]), std::abs(lj[1] - lo[1]),
                                 std::abs(lj[2] - lo[2])});
      if (cheb >= 2) far.insert({j, o});
    }
  }
  for (const auto& [j, o] : far)
    d.warnings.push_back("overlap " + std::to_string(overlap) + " extends subdomain " +
                         std::to_string(j) + " into the non-adjacent block of subdomain " +
                         std::to_string(o));
  return d;
}

}  // namespace geneo
