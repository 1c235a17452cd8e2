#include "locband/optim.hpp"

#include <cmath>
#include <deque>

namespace locband::opt {

double cosine_lr(long t, long total, double lr0) {
  if (total <= 0) throw ConfigError("cosine_lr: total steps must be positive");
  if (t < 0 || t > total) throw ConfigError("cosine_lr: step outside [0, T]");
  return lr0 * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) /
                                     static_cast<double>(total)));
}

AdamW::AdamW(std::size_t n, const AdamWConfig& cfg) : cfg_(cfg) {
  if (!(cfg.b1 >= 0.0 && cfg.b1 < 1.0 && cfg.b2 >= 0.0 && cfg.b2 < 1.0))
    throw ConfigError("adamw: betas must lie in [0, 1)");
  if (!(cfg.eps > 0.0)) throw ConfigError("adamw: eps must be positive");
  m_.assign(n, 0.0);
  v_.assign(n, 0.0);
}

double AdamW::current_lr() const {
  return cfg_.use_schedule ? cosine_lr(std::min(t_, cfg_.total_steps),
                                       cfg_.total_steps, cfg_.lr0)
                           : cfg_.lr0;
}

void AdamW::step(Vector& params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ConfigError("adamw: size mismatch");
  for (double g : grads)
    if (!std::isfinite(g))
      throw NumericsError("adamw: non-finite gradient");

  const double lr = current_lr();
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = cfg_.b1 * m_[i] + (1.0 - cfg_.b1) * grads[i];
    v_[i] = cfg_.b2 * v_[i] + (1.0 - cfg_.b2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) +
                       cfg_.weight_decay * params[i]);
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Probe {
  double f = 0.0;
  double df = 0.0;  // directional derivative
};

// Cubic interpolation of the minimizer within [alo, ahi]; falls back to
// bisection when the interpolant is ill-conditioned or leaves the bracket.
double interpolate(double alo, double flo, double dlo, double ahi, double fhi,
                   double dhi) {
  const double d1 = dlo + dhi - 3.0 * (flo - fhi) / (alo - ahi);
  const double disc = d1 * d1 - dlo * dhi;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), ahi - alo);
    const double cand = ahi - (ahi - alo) * (dhi + d2 - d1) /
                                  (dhi - dlo + 2.0 * d2);
    const double lo = std::min(alo, ahi), hi = std::max(alo, ahi);
    const double margin = 0.05 * (hi - lo);
    if (std::isfinite(cand) && cand > lo + margin && cand < hi - margin)
      return cand;
  }
  return 0.5 * (alo + ahi);
}

}  // namespace

LbfgsResult lbfgs_minimize(const LossFn& f, Vector params0,
                           const LbfgsConfig& cfg) {
  const std::size_t n = params0.size();
  LbfgsResult res;
  res.params = std::move(params0);

  Vector g(n), x = res.params, d(n), x_trial(n), g_trial(n);
  double fx = f(x, g);
  if (!std::isfinite(fx)) throw NumericsError("lbfgs: non-finite initial loss");
  res.loss = fx;
  res.grad_norm = norm2(g);
  if (res.grad_norm <= cfg.grad_tol) {
    res.converged = true;
    return res;
  }

  std::deque<std::pair<Vector, Vector>> pairs;  // (s, y)

  auto probe = [&](double a) {
    for (std::size_t i = 0; i < n; ++i) x_trial[i] = x[i] + a * d[i];
    Probe p;
    p.f = f(x_trial, g_trial);
    p.df = dot(g_trial, d);
    return p;
  };

  // One secant refinement of a Wolfe-accepted step whose slope is still
  // large; exact for quadratic objectives, one extra probe otherwise.
  Vector x_keep(n), g_keep(n);
  auto refine = [&](double a_acc, Probe p_acc, double d0, double f0,
                    double a_other, double d_other,
                    const LbfgsConfig& c) -> std::pair<double, Probe> {
    if (std::fabs(p_acc.df) <= 0.1 * std::fabs(d0) || p_acc.df == d_other)
      return {a_acc, p_acc};
    const double a_ref =
        a_acc - p_acc.df * (a_acc - a_other) / (p_acc.df - d_other);
    if (!std::isfinite(a_ref) || !(a_ref > 0.0)) return {a_acc, p_acc};
    x_keep = x_trial;
    g_keep = g_trial;
    const Probe pr = probe(a_ref);
    if (std::isfinite(pr.f) && pr.f <= f0 + c.c1 * a_ref * d0 &&
        std::fabs(pr.df) <= -c.c2 * d0 &&
        std::fabs(pr.df) < std::fabs(p_acc.df))
      return {a_ref, pr};
    x_trial = x_keep;
    g_trial = g_keep;
    return {a_acc, p_acc};
  };

  for (int it = 0; it < cfg.max_iters; ++it) {
    // two-loop recursion
    d.assign(g.begin(), g.end());
    std::vector<double> alpha_hist(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
      const auto& [s, y] = pairs[k];
      const double rho = 1.0 / dot(s, y);
      const double a = rho * dot(s, d);
      alpha_hist[k] = a;
      for (std::size_t i = 0; i < n; ++i) d[i] -= a * y[i];
    }
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& v : d) v *= gamma;
    }
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, y] = pairs[k];
      const double rho = 1.0 / dot(s, y);
      const double b = rho * dot(y, d);
      for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_hist[k] - b) * s[i];
    }
    for (double& v : d) v = -v;

    double d0 = dot(g, d);
    if (!(d0 < 0.0)) {  // not a descent direction; restart from steepest
      pairs.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      d0 = dot(g, d);
    }

    // strong Wolfe line search (Nocedal & Wright alg. 3.5/3.6)
    const double f0 = fx;
    double a_prev = 0.0, f_prev = f0, d_prev = d0;
    double a = (it == 0 && pairs.empty())
                   ? std::min(1.0, 1.0 / std::max(1e-12, norm2(g)))
                   : 1.0;
    double a_max = 1e10;
    bool found = false;
    double a_lo = 0, f_lo = 0, d_lo = 0, a_hi = 0, f_hi = 0, d_hi = 0;
    bool bracketed = false;
    for (int ls = 0; ls < cfg.max_line_search; ++ls) {
      const Probe p = probe(a);
      if (!std::isfinite(p.f))
        throw NumericsError("lbfgs: non-finite loss during line search");
      if (p.f > f0 + cfg.c1 * a * d0 || (ls > 0 && p.f >= f_prev)) {
        a_lo = a_prev; f_lo = f_prev; d_lo = d_prev;
        a_hi = a; f_hi = p.f; d_hi = p.df;
        bracketed = true;
        break;
      }
      if (std::fabs(p.df) <= -cfg.c2 * d0) {
        const auto [ar, pr] = refine(a, p, d0, f0, a_prev, d_prev, cfg);
        a = ar;
        found = true;
        fx = pr.f;
        break;
      }
      if (p.df >= 0.0) {
        a_lo = a; f_lo = p.f; d_lo = p.df;
        a_hi = a_prev; f_hi = f_prev; d_hi = d_prev;
        bracketed = true;
        break;
      }
      a_prev = a; f_prev = p.f; d_prev = p.df;
      // expand toward the one-dimensional minimizer; the parabola through
      // (0, f0, d0) and (a, f) is exact for quadratic objectives
      const double curv = (p.f - f0 - d0 * a) / (a * a);
      double next = curv > 0.0 ? -d0 / (2.0 * curv) : 2.0 * a;
      if (!(next > 1.01 * a) || !(next < 100.0 * a) || !std::isfinite(next))
        next = 2.0 * a;
      a = std::min(next, a_max);
    }
    if (bracketed) {
      for (int z = 0; z < cfg.max_line_search; ++z) {
        const double aj = interpolate(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi);
        const Probe p = probe(aj);
        if (!std::isfinite(p.f))
          throw NumericsError("lbfgs: non-finite loss during line search");
        if (p.f > f0 + cfg.c1 * aj * d0 || p.f >= f_lo) {
          a_hi = aj; f_hi = p.f; d_hi = p.df;
        } else {
          if (std::fabs(p.df) <= -cfg.c2 * d0) {
            const auto [ar, pr] = refine(aj, p, d0, f0, a_lo, d_lo, cfg);
            found = true;
            a = ar;
            fx = pr.f;
            break;
          }
          if (p.df * (a_hi - a_lo) >= 0.0) {
            a_hi = a_lo; f_hi = f_lo; d_hi = d_lo;
          }
          a_lo = aj; f_lo = p.f; d_lo = p.df;
        }
        if (std::fabs(a_hi - a_lo) <= 1e-16 * std::max(1.0, std::fabs(a_lo)))
          break;
      }
      if (!found && f_lo < f0) {
        // accept the best bracketed point even without the curvature bound
        const Probe p = probe(a_lo);
        found = true;
        a = a_lo;
        fx = p.f;
      }
    }
    if (!found) {
      res.line_search_failed = true;
      break;
    }

    // x_trial/g_trial hold the accepted point after the last probe
    Vector s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_trial[i] - x[i];
      y[i] = g_trial[i] - g[i];
    }
    x = x_trial;
    g = g_trial;
    res.iterations = it + 1;
    res.loss = fx;
    res.grad_norm = norm2(g);
    const double sy = dot(s, y);
    if (sy > 1e-12 * norm2(s) * norm2(y)) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > cfg.memory) pairs.pop_front();
    }
    if (res.grad_norm <= cfg.grad_tol) {
      res.converged = true;
      break;
    }
  }

  res.params = x;
  return res;
}

}  // namespace locband::opt
