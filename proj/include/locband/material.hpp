#ifndef LOCBAND_MATERIAL_HPP
#define LOCBAND_MATERIAL_HPP

#include <functional>

#include "locband/common.hpp"

namespace locband {

// Yield stress may vary over the domain; profile id selects the built-in
// shape, keeping configs round-trippable.
enum class SigmaPProfile {
  kUniform,
  kParabolicY,  // 0.75 + 0.25*(2y - 1)^2 on the unit square
};

struct MaterialSpec {
  double E = 1.0;        // Young's modulus
  double nu = 0.0;       // Poisson ratio (unused in 1D)
  double sigma_p = 1.0;  // yield stress (uniform value or profile minimum)
  double Hbar = 0.0;     // intrinsic softening parameter (negative: softening)
  double h = 0.1;        // regularization bandwidth
  int N = 1;             // spatial dimension
  SigmaPProfile sigma_p_profile = SigmaPProfile::kUniform;

  double softening_H() const { return h * Hbar; }  // H = h * Hbar
  double lame_lambda() const { return E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)); }
  double lame_mu() const { return E / (2.0 * (1.0 + nu)); }

  // Yield stress at a point; y is the vertical coordinate in 2D, ignored
  // for the uniform profile.
  double sigma_p_at(double y) const;
  double sigma_p_min() const;

  void validate() const;  // throws ConfigError
};

// Dimension factor in the yield function: 1 in 1D, sqrt(N-1)/N otherwise.
double k_factor(int N);

// Elastic energy density. 1D: E*eps^2/2 (eps in xx). 2D plane strain:
// lambda*tr(e)^2/2 + mu*(e:e).
double elastic_energy_density(const Sym2& eps_e, const MaterialSpec& m);

// Cauchy stress, the gradient of the elastic energy density.
Sym2 stress(const Sym2& eps_e, const MaterialSpec& m);

// Induced cohesive energy per unit band surface: Hbar*j^2/2 + sigma_p*j.
double cohesive_energy_density(double j, const MaterialSpec& m);

// Cohesive traction magnitude: sigma_p + Hbar*j.
double cohesive_traction(double j, const MaterialSpec& m);

// Yield function value ||dev sigma|| - k_N*(sigma_p + H*p). Diagnostic only;
// 1D convention: ||dev sigma|| is |sigma_xx| with k_1 = 1.
double yield_diagnostic(const Sym2& sigma, double p, const MaterialSpec& m);

}  // namespace locband

#endif
