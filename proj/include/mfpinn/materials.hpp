#pragma once

#include <array>
#include <string>
#include <vector>

#include "mfpinn/common.hpp"

namespace mfpinn {

enum class BoundaryKind { Dirichlet, Neumann, Robin };

/// Per-material multigroup constants. Group indices are 0-based here;
/// scattering(g, gp) is the cross section for scattering FROM group g
/// TO group gp (diagonal entries unused, kept zero).
struct MaterialSpec {
  std::string name;
  VectorXd diffusion;     // D^g  (cm)
  VectorXd removal;       // Sigma_r^g  (1/cm)
  MatrixXd scattering;    // Sigma_s^{g->g'}  (1/cm)
  VectorXd chi;           // fission spectrum fractions
  VectorXd nu_fission;    // nu*Sigma_f^g  (1/cm)
  VectorXd source;        // fixed source S_f^g  (1/cm^3/s)

  int groups() const { return static_cast<int>(diffusion.size()); }
  void validate_shapes() const;
};

/// G x G removal matrix T_e: Sigma_r on the diagonal, -Sigma_s^{g'->g}
/// at (g, g').
MatrixXd removal_matrix(const MaterialSpec& mat);

struct Box {
  std::array<double, kMaxDim> lo{};
  std::array<double, kMaxDim> hi{};

  bool contains(const double* p, int dim) const {
    for (int a = 0; a < dim; ++a)
      if (p[a] < lo[a] || p[a] > hi[a]) return false;
    return true;
  }
};

/// Axis-aligned domain with material regions painted in order (the
/// last region covering a point wins) and one boundary kind per face.
/// Faces are indexed 2*axis + (0 for the low face, 1 for the high one).
struct Geometry {
  int dim = 2;
  Box domain;
  struct Region {
    Box box;
    int material = 0;
  };
  std::vector<Region> regions;
  std::array<BoundaryKind, 2 * kMaxDim> boundary{};

  double extent(int axis) const { return domain.hi[axis] - domain.lo[axis]; }
  double volume() const;
  /// Checks region containment and that the regions cover the domain.
  void validate(int material_count) const;
};

/// Geometry plus material table; total point -> material lookup on the
/// closed domain.
class MaterialField {
 public:
  MaterialField(Geometry geometry, std::vector<MaterialSpec> materials);

  const Geometry& geometry() const { return geom_; }
  const std::vector<MaterialSpec>& materials() const { return mats_; }
  int groups() const { return groups_; }

  int material_index_at(const double* p) const;
  const MaterialSpec& at(const double* p) const { return mats_[material_index_at(p)]; }

 private:
  Geometry geom_;
  std::vector<MaterialSpec> mats_;
  int groups_;
};

/// Positivity and strict-dominance validation report.
struct AssumptionReport {
  struct PerMaterial {
    std::string name;
    double diffusion_min, diffusion_max;
    double removal_min, removal_max;
  };
  std::vector<PerMaterial> per_material;
  double diffusion_min, diffusion_max;  // D_*, D^*
  double removal_min, removal_max;      // (Sigma_r)_*, (Sigma_r)^*
};

/// Verifies, for every material: D^g > 0, Sigma_r^g > 0, strict
/// dominance (total out-scatter of each group below its removal),
/// chi >= 0 with sum 0 or 1, and nu*Sigma_f >= 0. Throws an Error
/// naming material, group, and the failed clause.
AssumptionReport check_assumptions(const std::vector<MaterialSpec>& materials);

}  // namespace mfpinn
