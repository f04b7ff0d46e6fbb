#include "mfpinn/materials.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace mfpinn {

void MaterialSpec::validate_shapes() const {
  const int g = groups();
  require(g >= 1, "material '", name, "': needs at least one group");
  require(removal.size() == g && scattering.rows() == g && scattering.cols() == g &&
              chi.size() == g && nu_fission.size() == g && source.size() == g,
          "material '", name, "': inconsistent group counts");
}

MatrixXd removal_matrix(const MaterialSpec& mat) {
  mat.validate_shapes();
  const int g = mat.groups();
  MatrixXd te = MatrixXd::Zero(g, g);
  for (int row = 0; row < g; ++row) {
    te(row, row) = mat.removal[row];
    for (int col = 0; col < g; ++col) {
      if (col != row) te(row, col) = -mat.scattering(col, row);
    }
  }
  return te;
}

double Geometry::volume() const {
  double v = 1.0;
  for (int a = 0; a < dim; ++a) v *= extent(a);
  return v;
}

void Geometry::validate(int material_count) const {
  require(dim == 2 || dim == 3, "geometry: dim must be 2 or 3");
  for (int a = 0; a < dim; ++a)
    require(domain.hi[a] > domain.lo[a], "geometry: degenerate domain extent on axis ", a);
  require(!regions.empty(), "geometry: no material regions");

  std::array<std::set<double>, kMaxDim> cuts;
  for (int a = 0; a < dim; ++a) {
    cuts[a].insert(domain.lo[a]);
    cuts[a].insert(domain.hi[a]);
  }
  for (size_t r = 0; r < regions.size(); ++r) {
    const auto& reg = regions[r];
    require(reg.material >= 0 && reg.material < material_count,
            "geometry: region ", r, " references unknown material ", reg.material);
    for (int a = 0; a < dim; ++a) {
      require(reg.box.hi[a] > reg.box.lo[a], "geometry: region ", r,
              " has degenerate extent on axis ", a);
      require(reg.box.lo[a] >= domain.lo[a] - 1e-12 && reg.box.hi[a] <= domain.hi[a] + 1e-12,
              "geometry: region ", r, " extends outside the domain on axis ", a);
      cuts[a].insert(reg.box.lo[a]);
      cuts[a].insert(reg.box.hi[a]);
    }
  }

  // Coverage: the midpoint of every elementary cell of the region
  // arrangement must lie in some region.
  std::array<std::vector<double>, kMaxDim> mids;
  for (int a = 0; a < dim; ++a) {
    std::vector<double> line(cuts[a].begin(), cuts[a].end());
    for (size_t i = 0; i + 1 < line.size(); ++i) mids[a].push_back(0.5 * (line[i] + line[i + 1]));
  }
  std::array<double, kMaxDim> p{};
  const size_t nz = (dim == 3) ? mids[2].size() : 1;
  for (size_t iz = 0; iz < nz; ++iz) {
    if (dim == 3) p[2] = mids[2][iz];
    for (double y : mids[1]) {
      p[1] = y;
      for (double x : mids[0]) {
        p[0] = x;
        bool covered = false;
        for (const auto& reg : regions)
          if (reg.box.contains(p.data(), dim)) {
            covered = true;
            break;
          }
        if (!covered) {
          if (dim == 3) fail("geometry: point (", p[0], ", ", p[1], ", ", p[2],
                             ") is not covered by any region");
          fail("geometry: point (", p[0], ", ", p[1], ") is not covered by any region");
        }
      }
    }
  }
}

MaterialField::MaterialField(Geometry geometry, std::vector<MaterialSpec> materials)
    : geom_(std::move(geometry)), mats_(std::move(materials)) {
  require(!mats_.empty(), "material field: empty material table");
  groups_ = mats_.front().groups();
  for (const auto& m : mats_) {
    m.validate_shapes();
    require(m.groups() == groups_, "material field: material '", m.name,
            "' has ", m.groups(), " groups, expected ", groups_);
  }
  geom_.validate(static_cast<int>(mats_.size()));
}

int MaterialField::material_index_at(const double* p) const {
  if (!geom_.domain.contains(p, geom_.dim)) {
    if (geom_.dim == 3)
      fail("material lookup outside the domain at (", p[0], ", ", p[1], ", ", p[2], ")");
    fail("material lookup outside the domain at (", p[0], ", ", p[1], ")");
  }
  for (auto it = geom_.regions.rbegin(); it != geom_.regions.rend(); ++it) {
    if (it->box.contains(p, geom_.dim)) return it->material;
  }
  fail("material lookup: uncovered point despite validated geometry");
}

AssumptionReport check_assumptions(const std::vector<MaterialSpec>& materials) {
  require(!materials.empty(), "check_assumptions: empty material list");
  AssumptionReport report;
  report.diffusion_min = report.removal_min = std::numeric_limits<double>::infinity();
  report.diffusion_max = report.removal_max = 0.0;

  for (const auto& m : materials) {
    m.validate_shapes();
    const int g = m.groups();
    AssumptionReport::PerMaterial pm;
    pm.name = m.name;
    pm.diffusion_min = m.diffusion.minCoeff();
    pm.diffusion_max = m.diffusion.maxCoeff();
    pm.removal_min = m.removal.minCoeff();
    pm.removal_max = m.removal.maxCoeff();

    for (int gg = 0; gg < g; ++gg) {
      require(std::isfinite(m.diffusion[gg]) && m.diffusion[gg] > 0.0, "material '", m.name,
              "', group ", gg + 1, ": clause (i) violated, diffusion coefficient must be > 0");
      require(std::isfinite(m.removal[gg]) && m.removal[gg] > 0.0, "material '", m.name,
              "', group ", gg + 1, ": clause (ii) violated, removal cross section must be > 0");
      double out_scatter = 0.0;
      for (int gp = 0; gp < g; ++gp) {
        if (gp != gg) out_scatter += std::abs(m.scattering(gg, gp));
      }
      require(out_scatter < m.removal[gg], "material '", m.name, "', group ", gg + 1,
              ": clause (iii) violated, total out-scatter ", out_scatter,
              " must be strictly below removal ", m.removal[gg]);
      require(m.chi[gg] >= 0.0, "material '", m.name, "', group ", gg + 1,
              ": fission spectrum must be non-negative");
      require(m.nu_fission[gg] >= 0.0, "material '", m.name, "', group ", gg + 1,
              ": nu*Sigma_f must be non-negative");
    }
    const double chi_sum = m.chi.sum();
    require(std::abs(chi_sum) < 1e-12 || std::abs(chi_sum - 1.0) < 1e-12, "material '", m.name,
            "': fission spectrum must sum to 0 or 1, got ", chi_sum);

    report.diffusion_min = std::min(report.diffusion_min, pm.diffusion_min);
    report.diffusion_max = std::max(report.diffusion_max, pm.diffusion_max);
    report.removal_min = std::min(report.removal_min, pm.removal_min);
    report.removal_max = std::max(report.removal_max, pm.removal_max);
    report.per_material.push_back(std::move(pm));
  }
  return report;
}

}  // namespace mfpinn
