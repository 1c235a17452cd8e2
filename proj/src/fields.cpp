#include "locband/fields.hpp"

#include <cmath>
#include <random>

namespace locband {

namespace {

inline double stable_logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double stable_softplus(double x, double beta) {
  return std::max(x, 0.0) + std::log1p(std::exp(-beta * std::fabs(x))) / beta;
}

}  // namespace

std::array<double, 2> BandGeometry::normal() const {
  if (dim == 1) return {1.0, 0.0};
  return {std::cos(alpha), std::sin(alpha)};
}

std::array<double, 2> BandGeometry::tangent() const {
  if (dim == 1) return {1.0, 0.0};  // 1D jump acts along the axis
  return {-std::sin(alpha), std::cos(alpha)};
}

void BandGeometry::validate() const {
  if (!(c > 0.0)) throw ConfigError("band.c must be positive");
  if (!(beta > 0.0)) throw ConfigError("band.beta must be positive");
  if (dim != 1 && dim != 2) throw ConfigError("band.dim must be 1 or 2");
}

double band_activation(std::span<const double> x, const BandGeometry& g) {
  const auto n = g.normal();
  double y = x[0] * n[0];
  if (g.dim == 2) y += x[1] * n[1];
  const double z = (y - g.y_p) / g.c;
  return stable_softplus(z + 0.5, g.beta) - stable_softplus(z - 0.5, g.beta);
}

std::array<double, 2> band_activation_spatial_gradient(std::span<const double> x,
                                                       const BandGeometry& g) {
  const auto n = g.normal();
  double y = x[0] * n[0];
  if (g.dim == 2) y += x[1] * n[1];
  const double z = (y - g.y_p) / g.c;
  const double s = stable_logistic(g.beta * (z + 0.5)) -
                   stable_logistic(g.beta * (z - 0.5));
  return {s * n[0] / g.c, g.dim == 2 ? s * n[1] / g.c : 0.0};
}

double RegularField1D::eval(double x) const {
  const double L = knots.back();
  if (x < knots.front() || x > L)
    throw ConfigError("RegularField1D: point outside [0, L]");
  const double dx = knots[1] - knots[0];
  std::size_t e = static_cast<std::size_t>((x - knots.front()) / dx);
  if (e >= knots.size() - 1) e = knots.size() - 2;
  const double t = (x - knots[e]) / dx;
  return (1.0 - t) * nodal_values[e] + t * nodal_values[e + 1];
}

std::size_t RegularField2D::weight_count(const std::vector<int>& widths) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l + 1]) *
             static_cast<std::size_t>(widths[l]) +
         static_cast<std::size_t>(widths[l + 1]);
  return n;
}

Vector RegularField2D::init_weights(const std::vector<int>& widths,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Vector w;
  w.reserve(weight_count(widths));
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fan_in = widths[l];
    const int fan_out = widths[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (int i = 0; i < fan_out * fan_in; ++i) w.push_back(dist(rng));
    for (int i = 0; i < fan_out; ++i) w.push_back(0.0);
  }
  return w;
}

std::array<double, 2> RegularField2D::eval(std::span<const double> x) const {
  Vector act(x.begin(), x.end());
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const int fi = widths[l];
    const int fo = widths[l + 1];
    Vector next(static_cast<std::size_t>(fo));
    for (int o = 0; o < fo; ++o) {
      double s = weights[off + static_cast<std::size_t>(fo) *
                                   static_cast<std::size_t>(fi) +
                         static_cast<std::size_t>(o)];  // bias
      for (int i = 0; i < fi; ++i)
        s += weights[off + static_cast<std::size_t>(o * fi + i)] *
             act[static_cast<std::size_t>(i)];
      const bool hidden = l + 2 < widths.size();
      next[static_cast<std::size_t>(o)] = hidden ? std::max(s, 0.0) : s;
    }
    act = std::move(next);
    off += static_cast<std::size_t>(fo) * static_cast<std::size_t>(fi) +
           static_cast<std::size_t>(fo);
  }
  return {act[0], act[1]};
}

FieldModel FieldModel::bar(int n_nodes, double length, double c, double beta) {
  if (n_nodes < 2) throw ConfigError("bar field: need at least 2 nodes");
  if (!(length > 0.0)) throw ConfigError("bar field: length must be positive");
  FieldModel f;
  f.dim_ = 1;
  f.length_ = length;
  f.c_ = c;
  f.beta_ = beta;
  f.n_regular_ = n_nodes;
  f.knots_.resize(static_cast<std::size_t>(n_nodes));
  for (int i = 0; i < n_nodes; ++i)
    f.knots_[static_cast<std::size_t>(i)] = length * i / (n_nodes - 1);
  f.params_.assign(static_cast<std::size_t>(n_nodes) + 2, 0.0);
  f.idx_yp_ = n_nodes;
  f.idx_jump_ = n_nodes + 1;
  return f;
}

FieldModel FieldModel::shear(const std::vector<int>& hidden_widths, double c,
                             double beta, std::uint64_t seed) {
  FieldModel f;
  f.dim_ = 2;
  f.length_ = 1.0;
  f.c_ = c;
  f.beta_ = beta;
  f.widths_.push_back(2);
  for (int w : hidden_widths) f.widths_.push_back(w);
  f.widths_.push_back(2);
  const auto nw = RegularField2D::weight_count(f.widths_);
  f.n_regular_ = static_cast<int>(nw);
  f.params_ = RegularField2D::init_weights(f.widths_, seed);
  f.params_.resize(nw + 3, 0.0);
  f.idx_alpha_ = static_cast<int>(nw);
  f.idx_yp_ = static_cast<int>(nw) + 1;
  f.idx_jump_ = static_cast<int>(nw) + 2;
  return f;
}

BandGeometry FieldModel::band() const {
  BandGeometry g;
  g.dim = dim_;
  g.c = c_;
  g.beta = beta_;
  if (idx_alpha_ >= 0) g.alpha = params_[static_cast<std::size_t>(idx_alpha_)];
  g.y_p = params_[static_cast<std::size_t>(idx_yp_)];
  g.jump = params_[static_cast<std::size_t>(idx_jump_)];
  return g;
}

void FieldModel::set_band(const BandGeometry& g) {
  if (idx_alpha_ >= 0) params_[static_cast<std::size_t>(idx_alpha_)] = g.alpha;
  params_[static_cast<std::size_t>(idx_yp_)] = g.y_p;
  params_[static_cast<std::size_t>(idx_jump_)] = g.jump;
}

std::array<double, 2> FieldModel::eval_regular(std::span<const double> x) const {
  if (dim_ == 1) {
    RegularField1D f{knots_, Vector(params_.begin(),
                                    params_.begin() + n_regular_)};
    return {f.eval(x[0]), 0.0};
  }
  if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > 1.0)
    throw ConfigError("eval_regular: point outside the unit square");
  RegularField2D f{widths_, Vector(params_.begin(),
                                   params_.begin() + n_regular_)};
  return f.eval(x);
}

std::array<double, 2> FieldModel::eval_total(std::span<const double> x) const {
  const auto ur = eval_regular(x);
  const BandGeometry g = band();
  const double phi = band_activation(x, g);
  const auto t = g.tangent();
  return {ur[0] + g.jump * t[0] * phi, ur[1] + g.jump * t[1] * phi};
}

FieldModel::GraphNodes FieldModel::build_into(ad::Graph& g) const {
  GraphNodes out;
  const ad::NodeId x0 = g.input(0);

  if (dim_ == 1) {
    // Hat basis from shared ReLU kinks: interior hats are
    // (relu(x-k_{i-1}) - 2 relu(x-k_i) + relu(x-k_{i+1})) / dx; the boundary
    // hats use one-sided ramps, valid on [0, L].
    const int n = n_regular_;
    const double dx = knots_[1] - knots_[0];
    std::vector<ad::NodeId> r(static_cast<std::size_t>(n));
    // The first ramp needs no relu on [0, L]; keeping it linear preserves the
    // strain sample at x = 0, where relu' at the kink is defined as 0.
    r[0] = g.sub(x0, g.constant(knots_[0]));
    for (int i = 1; i < n; ++i)
      r[static_cast<std::size_t>(i)] =
          g.relu(g.sub(x0, g.constant(knots_[static_cast<std::size_t>(i)])));
    const ad::NodeId inv_dx = g.constant(1.0 / dx);
    ad::NodeId u = g.constant(0.0);
    for (int i = 0; i < n; ++i) {
      ad::NodeId hat;
      if (i == 0) {
        hat = g.mul(g.relu(g.sub(g.constant(knots_[1]), x0)), inv_dx);
      } else if (i == n - 1) {
        hat = g.mul(r[static_cast<std::size_t>(n - 2)], inv_dx);
      } else {
        const ad::NodeId mid = g.scale(r[static_cast<std::size_t>(i)], -2.0);
        hat = g.mul(g.add(g.add(r[static_cast<std::size_t>(i - 1)], mid),
                          r[static_cast<std::size_t>(i + 1)]),
                    inv_dx);
      }
      u = g.add(u, g.mul(g.param(i), hat));
    }
    out.u_regular = {u, g.constant(0.0)};

    const ad::NodeId z =
        g.mul(g.sub(x0, g.param(idx_yp_)), g.constant(1.0 / c_));
    out.phi = g.sub(g.softplus(g.add(z, g.constant(0.5)), beta_),
                    g.softplus(g.sub(z, g.constant(0.5)), beta_));
    out.u_total = {g.add(u, g.mul(g.param(idx_jump_), out.phi)),
                   g.constant(0.0)};
    return out;
  }

  // 2D perceptron
  const ad::NodeId x1 = g.input(1);
  std::vector<ad::NodeId> act{x0, x1};
  int off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int fi = widths_[l];
    const int fo = widths_[l + 1];
    const bool hidden = l + 2 < widths_.size();
    std::vector<ad::NodeId> next(static_cast<std::size_t>(fo));
    for (int o = 0; o < fo; ++o) {
      ad::NodeId s = g.param(off + fo * fi + o);  // bias
      for (int i = 0; i < fi; ++i)
        s = g.add(s, g.mul(g.param(off + o * fi + i),
                           act[static_cast<std::size_t>(i)]));
      next[static_cast<std::size_t>(o)] = hidden ? g.relu(s) : s;
    }
    act = std::move(next);
    off += fo * fi + fo;
  }
  out.u_regular = {act[0], act[1]};

  const ad::NodeId ca = g.cos(g.param(idx_alpha_));
  const ad::NodeId sa = g.sin(g.param(idx_alpha_));
  const ad::NodeId y = g.add(g.mul(x0, ca), g.mul(x1, sa));
  const ad::NodeId z =
      g.mul(g.sub(y, g.param(idx_yp_)), g.constant(1.0 / c_));
  out.phi = g.sub(g.softplus(g.add(z, g.constant(0.5)), beta_),
                  g.softplus(g.sub(z, g.constant(0.5)), beta_));
  const ad::NodeId jphi = g.mul(g.param(idx_jump_), out.phi);
  out.u_total = {g.add(act[0], g.mul(g.neg(sa), jphi)),
                 g.add(act[1], g.mul(ca, jphi))};
  return out;
}

}  // namespace locband
