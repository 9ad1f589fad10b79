#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "geneo/common.hpp"

namespace geneo {

// Voigt ordering used throughout: (11, 22, 33, 23, 13, 12) with engineering
// shear strain, i.e. sigma = C * (e11, e22, e33, g23, g13, g12).

/// Engineering constants of an orthotropic material (moduli in GPa).
struct OrthotropicParams {
  double E11 = 0, E22 = 0, E33 = 0;
  double G23 = 0, G13 = 0, G12 = 0;
  double nu12 = 0, nu13 = 0, nu23 = 0;
};

/// Isotropic Hooke matrix from Young's modulus and Poisson ratio.
Matrix6 isotropic_stiffness(double E, double nu);

/// Orthotropic Hooke matrix: inverse of the compliance built from the
/// engineering constants. Throws NumericsError if the result is not SPD.
Matrix6 orthotropic_stiffness(const OrthotropicParams& p);

/// Stress transformation matrix for a rotation by theta (radians) about the
/// through-thickness axis (axis 3), acting on Voigt stress vectors.
Matrix6 voigt_stress_rotation(double theta_rad);

/// Stiffness of a ply rotated by angle_deg about axis 3:
/// C_global = T_sigma * C * T_sigma^T.
Matrix6 rotate_stiffness(const Matrix6& C, double angle_deg);

/// Congruence scaling that turns the engineering-shear Voigt matrix into its
/// tensor (Mandel) form; orthogonal rotations act by similarity on the result,
/// so its eigenvalues are rotation invariants.
Matrix6 mandel_form(const Matrix6& C);

/// Human-readable warnings about parameter values that sit on admissibility
/// boundaries (e.g. nu23 = 0.5). Empty when nothing is noteworthy.
std::vector<std::string> material_warnings(const OrthotropicParams& p);

/// Cell-wise diagonal permeability on a structured grid, x-fastest storage.
struct PermeabilityField {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> kx, ky, kz;

  int cells() const { return dims[0] * dims[1] * dims[2]; }
  int index(int i, int j, int k) const { return i + dims[0] * (j + dims[1] * k); }
  Vector3 cell_tensor(int c) const { return Vector3(kx[c], ky[c], kz[c]); }
};

/// Reads the SPE10 permeability text format: whitespace separated values,
/// three blocks (Kx, Ky, Kz) of nx*ny*nz entries each, x-fastest.
/// Throws IoError on short files and ConfigError on non-positive values.
PermeabilityField load_spe10(std::istream& in, const std::array<int, 3>& dims);
PermeabilityField load_spe10(const std::string& path, const std::array<int, 3>& dims);

/// Writes a field in the same text format (round-trips through load_spe10).
void save_spe10(const PermeabilityField& field, std::ostream& out);

/// Keeps every stride-th cell per axis; output dims are floor(dims/stride).
PermeabilityField subsample(const PermeabilityField& field, int stride);

enum class ContrastPattern { Layers, Channels };

/// Deterministic synthetic high-contrast field: isotropic, values in
/// {1, contrast}. "Layers" alternates z-slabs; "channels" carves random-walk
/// channels along x from a seeded RNG.
PermeabilityField generate_synthetic_contrast(const std::array<int, 3>& dims,
                                              double contrast,
                                              ContrastPattern pattern,
                                              unsigned seed);

}  // namespace geneo
