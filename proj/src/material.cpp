#include "locband/material.hpp"

#include <cmath>

namespace locband {

double MaterialSpec::sigma_p_at(double y) const {
  switch (sigma_p_profile) {
    case SigmaPProfile::kUniform:
      return sigma_p;
    case SigmaPProfile::kParabolicY: {
      const double t = 2.0 * y - 1.0;
      return 0.75 + 0.25 * t * t;
    }
  }
  return sigma_p;
}

double MaterialSpec::sigma_p_min() const {
  return sigma_p_profile == SigmaPProfile::kParabolicY ? 0.75 : sigma_p;
}

void MaterialSpec::validate() const {
  if (!(E > 0.0)) throw ConfigError("material.E must be positive");
  if (!(nu > -1.0 && nu < 0.5))
    throw ConfigError("material.nu must lie in (-1, 0.5)");
  if (!(h > 0.0)) throw ConfigError("material.h must be positive");
  if (!(sigma_p > 0.0)) throw ConfigError("material.sigma_p must be positive");
  if (N != 1 && N != 2 && N != 3)
    throw ConfigError("material.N must be 1, 2 or 3");
}

double k_factor(int N) {
  switch (N) {
    case 1: return 1.0;
    case 2: return std::sqrt(1.0) / 2.0;
    case 3: return std::sqrt(2.0) / 3.0;
    default: throw ConfigError("k_factor: dimension must be 1, 2 or 3");
  }
}

double elastic_energy_density(const Sym2& e, const MaterialSpec& m) {
  if (m.N == 1) return 0.5 * m.E * e.xx * e.xx;
  const double tr = e.trace();
  return 0.5 * m.lame_lambda() * tr * tr + m.lame_mu() * e.self_contract();
}

Sym2 stress(const Sym2& e, const MaterialSpec& m) {
  if (m.N == 1) return Sym2{m.E * e.xx, 0.0, 0.0};
  const double lam = m.lame_lambda();
  const double mu = m.lame_mu();
  const double tr = e.trace();
  return Sym2{lam * tr + 2.0 * mu * e.xx, lam * tr + 2.0 * mu * e.yy,
              2.0 * mu * e.xy};
}

double cohesive_energy_density(double j, const MaterialSpec& m) {
  if (j < 0.0) throw ConfigError("cohesive_energy_density: jump must be >= 0");
  return 0.5 * m.Hbar * j * j + m.sigma_p_min() * j;
}

double cohesive_traction(double j, const MaterialSpec& m) {
  if (j < 0.0) throw ConfigError("cohesive_traction: jump must be >= 0");
  return m.sigma_p_min() + m.Hbar * j;
}

double yield_diagnostic(const Sym2& s, double p, const MaterialSpec& m) {
  double dev_norm;
  if (m.N == 1) {
    dev_norm = std::fabs(s.xx);
  } else {
    // Plane strain: out-of-plane stress nu*(sxx + syy), deviator of the
    // full 3x3 tensor with both shear components counted.
    const double szz = m.nu * (s.xx + s.yy);
    const double mean = (s.xx + s.yy + szz) / 3.0;
    const double dxx = s.xx - mean, dyy = s.yy - mean, dzz = szz - mean;
    dev_norm =
        std::sqrt(dxx * dxx + dyy * dyy + dzz * dzz + 2.0 * s.xy * s.xy);
  }
  return dev_norm - k_factor(m.N) * (m.sigma_p_min() + m.softening_H() * p);
}

}  // namespace locband
