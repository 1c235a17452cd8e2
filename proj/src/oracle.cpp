#include "locband/oracle.hpp"

#include <cmath>

namespace locband::oracle {

namespace {

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  if (n < 2) throw ConfigError("oracle quadrature: need at least 2 intervals");
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

double compliance_integral(const std::function<double(double)>& area, double E,
                           double length, int n_quad) {
  if (!(E > 0.0) || !(length > 0.0))
    throw ConfigError("compliance_integral: E and length must be positive");
  return simpson([&](double x) { return 1.0 / (E * area(x)); }, 0.0, length,
                 n_quad);
}

BarSolution solve_bar(double delta, const MaterialSpec& m,
                      const BarGeometry& geo, int n_quad) {
  if (delta < 0.0) throw ConfigError("solve_bar: delta must be >= 0");
  if (!(m.Hbar < 0.0)) throw ConfigError("solve_bar: Hbar must be negative");

  BarSolution s;
  s.delta = delta;
  s.x_band = geo.parabolic_area ? 0.5 * geo.length : 0.0;
  const double a_min = geo.area(s.x_band);
  const double C =
      compliance_integral([&](double x) { return geo.area(x); }, m.E,
                          geo.length, n_quad);
  s.compliance = C;

  const double delta_y = m.sigma_p * a_min * C;
  if (delta <= delta_y) {
    s.P = delta / C;
    s.j = 0.0;
  } else {
    // traction continuity P = A_min (sigma_p + Hbar j), compatibility
    // delta = P C + j
    s.j = (delta - m.sigma_p * a_min * C) / (1.0 + a_min * m.Hbar * C);
    s.P = a_min * (m.sigma_p + m.Hbar * s.j);
    const double j_max = -m.sigma_p / m.Hbar;
    if (s.P < 0.0 || s.j > j_max) {  // cohesive traction exhausted
      s.P = 0.0;
      s.j = delta;
    }
  }
  const double j_max = -m.sigma_p / m.Hbar;
  const double j_eff = std::min(s.j, j_max);
  s.W = 0.5 * s.P * s.P * C +
        (0.5 * m.Hbar * j_eff * j_eff + m.sigma_p * j_eff) * a_min;
  return s;
}

double bar_displacement(const BarSolution& s, const MaterialSpec& m,
                        const BarGeometry& geo, double x, int n_quad) {
  if (x < 0.0 || x > geo.length)
    throw ConfigError("bar_displacement: point outside the bar");
  double u = 0.0;
  if (x > 0.0)
    u = s.P * simpson([&](double t) { return 1.0 / (m.E * geo.area(t)); }, 0.0,
                      x, n_quad);
  if (x > s.x_band) u += s.j;
  if (x == s.x_band) u += 0.5 * s.j;  // symmetric convention at the band
  return u;
}

ShearSolution solve_shear(double delta, const MaterialSpec& m) {
  if (delta < 0.0) throw ConfigError("solve_shear: delta must be >= 0");
  ShearSolution s;
  s.delta = delta;
  const double mu = m.lame_mu();
  const double sp = m.sigma_p_min();

  auto W = [&](double j) {
    const double ge = delta - j;
    return 0.5 * mu * ge * ge + 0.5 * m.Hbar * j * j + sp * j;
  };

  if (!(mu + m.Hbar > 0.0)) {
    // reduced energy is concave in j; no unique interior minimizer
    s.unique = false;
    s.j = 0.0;
    s.j_grid = 0.0;
    s.gamma_e = delta;
    s.tau = mu * delta;
    s.W = W(0.0);
    return s;
  }

  double j = (mu * delta - sp) / (mu + m.Hbar);
  j = std::min(std::max(j, 0.0), delta);
  s.j = j;
  s.gamma_e = delta - j;
  s.tau = mu * s.gamma_e;
  s.W = W(j);

  // brute-force verification on a 1e-5 grid over [0, delta]
  const double step = 1e-5;
  double best_j = 0.0, best_w = W(0.0);
  const long nsteps = static_cast<long>(std::ceil(delta / step));
  for (long i = 1; i <= nsteps; ++i) {
    const double jj = std::min(delta, static_cast<double>(i) * step);
    const double w = W(jj);
    if (w < best_w) {
      best_w = w;
      best_j = jj;
    }
  }
  s.j_grid = best_j;
  return s;
}

}  // namespace locband::oracle
