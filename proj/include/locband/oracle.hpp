#ifndef LOCBAND_ORACLE_HPP
#define LOCBAND_ORACLE_HPP

#include <functional>

#include "locband/energy.hpp"
#include "locband/material.hpp"

namespace locband::oracle {

// Integral of 1/(E*A(x)) over [0, L] by composite Simpson quadrature.
double compliance_integral(const std::function<double(double)>& area, double E,
                           double length, int n_quad = 20000);

// Sharp-discontinuity (h -> 0) solution of the tapered softening bar.
struct BarSolution {
  double delta = 0.0;
  double P = 0.0;       // axial force
  double j = 0.0;       // jump magnitude
  double x_band = 0.0;  // argmin of A
  double W = 0.0;       // total energy: P^2 C/2 + cohesive psi(j) * A_min
  double compliance = 0.0;  // C = integral dx/(E A)
};

BarSolution solve_bar(double delta, const MaterialSpec& m,
                      const BarGeometry& geo, int n_quad = 20000);

// Displacement sampler for the bar solution: elastic stretch plus a step of
// size j at the band.
double bar_displacement(const BarSolution& s, const MaterialSpec& m,
                        const BarGeometry& geo, double x, int n_quad = 2000);

// Sharp-limit solution of the unit-square simple-shear specimen. The band
// sits on the minimum-sigma_p row; the reduced energy over the jump j is
// W(j) = mu (delta - j)^2 / 2 + Hbar j^2 / 2 + sigma_p_min j on [0, delta].
struct ShearSolution {
  double delta = 0.0;
  double tau = 0.0;      // shear stress mu * gamma_e
  double gamma_e = 0.0;  // elastic shear strain
  double j = 0.0;        // tangential jump (closed form)
  double j_grid = 0.0;   // brute-force grid minimizer (verification)
  double W = 0.0;
  bool unique = true;  // false when mu + Hbar <= 0 (no unique minimizer)
};

ShearSolution solve_shear(double delta, const MaterialSpec& m);

}  // namespace locband::oracle

#endif
