#include "geneo/materials.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace geneo {

namespace {

void require_spd(const Matrix6& M, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix6> es(M);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NumericsError(std::string(what) + ": matrix is not SPD (min eigenvalue " +
                        std::to_string(es.eigenvalues().minCoeff()) + ")");
}

}  // namespace

Matrix6 isotropic_stiffness(double E, double nu) {
  if (E <= 0.0) throw ConfigError("isotropic_stiffness: E must be positive");
  if (nu <= -1.0 || nu >= 0.5) throw ConfigError("isotropic_stiffness: nu outside (-1, 0.5)");
  const double lambda = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
  const double mu = E / (2.0 * (1.0 + nu));
  Matrix6 C = Matrix6::Zero();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) C(a, b) = lambda;
    C(a, a) = lambda + 2.0 * mu;
    C(3 + a, 3 + a) = mu;  // engineering shear: sigma23 = mu * g23
  }
  return C;
}

Matrix6 orthotropic_stiffness(const OrthotropicParams& p) {
  for (double m : {p.E11, p.E22, p.E33, p.G23, p.G13, p.G12})
    if (m <= 0.0) throw ConfigError("orthotropic_stiffness: moduli must be positive");

  Matrix6 S = Matrix6::Zero();
  S(0, 0) = 1.0 / p.E11;
  S(1, 1) = 1.0 / p.E22;
  S(2, 2) = 1.0 / p.E33;
  S(0, 1) = S(1, 0) = -p.nu12 / p.E11;
  S(0, 2) = S(2, 0) = -p.nu13 / p.E11;
  S(1, 2) = S(2, 1) = -p.nu23 / p.E22;
  S(3, 3) = 1.0 / p.G23;
  S(4, 4) = 1.0 / p.G13;
  S(5, 5) = 1.0 / p.G12;

  require_spd(S, "orthotropic_stiffness (compliance)");
  Matrix6 C = S.inverse();
  C = 0.5 * (C + C.transpose()).eval();  // enforce exact symmetry
  require_spd(C, "orthotropic_stiffness");
  return C;
}

Matrix6 voigt_stress_rotation(double theta_rad) {
  const double c = std::cos(theta_rad), s = std::sin(theta_rad);
  Matrix6 T = Matrix6::Zero();
  T(0, 0) = c * c;
  T(0, 1) = s * s;
  T(0, 5) = 2.0 * c * s;
  T(1, 0) = s * s;
  T(1, 1) = c * c;
  T(1, 5) = -2.0 * c * s;
  T(2, 2) = 1.0;
  T(3, 3) = c;
  T(3, 4) = -s;
  T(4, 3) = s;
  T(4, 4) = c;
  T(5, 0) = -c * s;
  T(5, 1) = c * s;
  T(5, 5) = c * c - s * s;
  return T;
}

Matrix6 rotate_stiffness(const Matrix6& C, double angle_deg) {
  // Stiffness in global coordinates of a material whose frame sits at +angle
  // about the z axis: C_glob = T(-theta) C T(-theta)^T, since T(theta) takes
  // global stress components into the rotated frame.
  const double theta = angle_deg * M_PI / 180.0;
  const Matrix6 T = voigt_stress_rotation(-theta);
  Matrix6 R = T * C * T.transpose();
  return 0.5 * (R + R.transpose()).eval();
}

Matrix6 mandel_form(const Matrix6& C) {
  Matrix6 D = Matrix6::Identity();
  const double r2 = std::sqrt(2.0);
  for (int a = 3; a < 6; ++a) D(a, a) = r2;
  return D * C * D;
}

std::vector<std::string> material_warnings(const OrthotropicParams& p) {
  std::vector<std::string> notes;
  if (p.nu23 >= 0.5 - 1e-12)
    notes.push_back("nu23 = " + std::to_string(p.nu23) +
                    " sits on the isotropic incompressibility boundary; the orthotropic "
                    "compliance stays SPD and the value is used as given");
  return notes;
}

PermeabilityField load_spe10(std::istream& in, const std::array<int, 3>& dims) {
  PermeabilityField f;
  f.dims = dims;
  const long n = static_cast<long>(dims[0]) * dims[1] * dims[2];
  if (n <= 0) throw ConfigError("load_spe10: dims must be positive");
  auto read_block = [&](std::vector<double>& dst, const char* name) {
    dst.resize(n);
    for (long i = 0; i < n; ++i) {
      double v;
      if (!(in >> v))
        throw IoError(std::string("load_spe10: file ended inside ") + name + " block (read " +
                      std::to_string(i) + " of " + std::to_string(n) + " values)");
      if (!(v > 0.0))
        throw ConfigError(std::string("load_spe10: non-positive permeability ") +
                          std::to_string(v) + " in " + name + " block at index " + std::to_string(i));
      dst[i] = v;
    }
  };
  read_block(f.kx, "Kx");
  read_block(f.ky, "Ky");
  read_block(f.kz, "Kz");
  return f;
}

PermeabilityField load_spe10(const std::string& path, const std::array<int, 3>& dims) {
  std::ifstream in(path);
  if (!in) throw IoError("load_spe10: cannot open '" + path + "'");
  return load_spe10(in, dims);
}

void save_spe10(const PermeabilityField& field, std::ostream& out) {
  out.precision(17);
  auto write_block = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      out << v[i] << ((i % 6 == 5) ? '\n' : ' ');
    out << '\n';
  };
  write_block(field.kx);
  write_block(field.ky);
  write_block(field.kz);
}

PermeabilityField subsample(const PermeabilityField& field, int stride) {
  if (stride < 1) throw ConfigError("subsample: stride must be >= 1");
  if (stride == 1) return field;
  PermeabilityField out;
  for (int a = 0; a < 3; ++a) {
    out.dims[a] = field.dims[a] / stride;
    if (out.dims[a] == 0) throw ConfigError("subsample: stride larger than axis extent");
  }
  const long n = out.cells();
  out.kx.resize(n);
  out.ky.resize(n);
  out.kz.resize(n);
  for (int k = 0; k < out.dims[2]; ++k)
    for (int j = 0; j < out.dims[1]; ++j)
      for (int i = 0; i < out.dims[0]; ++i) {
        const int src = field.index(i * stride, j * stride, k * stride);
        const int dst = out.index(i, j, k);
        out.kx[dst] = field.kx[src];
        out.ky[dst] = field.ky[src];
        out.kz[dst] = field.kz[src];
      }
  return out;
}

PermeabilityField generate_synthetic_contrast(const std::array<int, 3>& dims, double contrast,
                                              ContrastPattern pattern, unsigned seed) {
  if (contrast <= 0.0) throw ConfigError("generate_synthetic_contrast: contrast must be positive");
  PermeabilityField f;
  f.dims = dims;
  const long n = f.cells();
  if (n <= 0) throw ConfigError("generate_synthetic_contrast: dims must be positive");
  f.kx.assign(n, 1.0);

  if (pattern == ContrastPattern::Layers) {
    for (int k = 0; k < dims[2]; ++k)
      if (k % 2 == 1)
        for (int j = 0; j < dims[1]; ++j)
          for (int i = 0; i < dims[0]; ++i) f.kx[f.index(i, j, k)] = contrast;
  } else {
    // Channels: random walks along x, one cell wide, deterministic in the seed.
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> jy(0, dims[1] - 1), jz(0, dims[2] - 1);
    std::uniform_int_distribution<int> step(-1, 1);
    const int channels = std::max(1, dims[1] / 4);
    for (int c = 0; c < channels; ++c) {
      int y = jy(rng), z = jz(rng);
      for (int i = 0; i < dims[0]; ++i) {
        f.kx[f.index(i, y, z)] = contrast;
        y = std::clamp(y + step(rng), 0, dims[1] - 1);
        z = std::clamp(z + step(rng), 0, dims[2] - 1);
      }
    }
  }
  f.ky = f.kx;
  f.kz = f.kx;
  return f;
}

}  // namespace geneo
