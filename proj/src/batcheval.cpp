#include "locband/batcheval.hpp"

#include <cmath>
#include <cstring>

namespace locband::ad {

namespace {

inline double stable_logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double stable_softplus(double x, double beta) {
  return std::max(x, 0.0) + std::log1p(std::exp(-beta * std::fabs(x))) / beta;
}

inline double signum(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

BatchEvaluator::BatchEvaluator(const Graph& g, NodeId root,
                               std::vector<NodeId> tracked)
    : g_(g), root_(root), tracked_(std::move(tracked)) {
  vals_.resize(g_.size() * kChunk);
  adj_.resize(g_.size() * kChunk);
}

void BatchEvaluator::forward_chunk(std::span<const double> params,
                                   std::span<const double> points,
                                   std::size_t first, int lanes) const {
  const auto& nodes = g_.nodes();
  const int nin = g_.n_inputs();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    double* v = &vals_[i * kChunk];
    const double* a = n.a >= 0 ? &vals_[static_cast<std::size_t>(n.a) * kChunk]
                               : nullptr;
    const double* b = n.b >= 0 ? &vals_[static_cast<std::size_t>(n.b) * kChunk]
                               : nullptr;
    switch (n.op) {
      case Op::Const: {
        const double c = n.aux;
        for (int l = 0; l < lanes; ++l) v[l] = c;
        break;
      }
      case Op::Input: {
        const int slot = static_cast<int>(n.aux);
        const double* p = points.data() + first * nin + slot;
        for (int l = 0; l < lanes; ++l) v[l] = p[l * nin];
        break;
      }
      case Op::Param: {
        const double c = params[static_cast<std::size_t>(n.aux)];
        for (int l = 0; l < lanes; ++l) v[l] = c;
        break;
      }
      case Op::Add:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] + b[l];
        break;
      case Op::Sub:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] - b[l];
        break;
      case Op::Mul:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] * b[l];
        break;
      case Op::Div:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] / b[l];
        break;
      case Op::Neg:
        for (int l = 0; l < lanes; ++l) v[l] = -a[l];
        break;
      case Op::Relu:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] > 0.0 ? a[l] : 0.0;
        break;
      case Op::Step:
        for (int l = 0; l < lanes; ++l) v[l] = a[l] > 0.0 ? 1.0 : 0.0;
        break;
      case Op::Abs:
        for (int l = 0; l < lanes; ++l) v[l] = std::fabs(a[l]);
        break;
      case Op::Sign:
        for (int l = 0; l < lanes; ++l) v[l] = signum(a[l]);
        break;
      case Op::Exp:
        for (int l = 0; l < lanes; ++l) v[l] = std::exp(a[l]);
        break;
      case Op::Log:
        for (int l = 0; l < lanes; ++l) v[l] = std::log(a[l]);
        break;
      case Op::Sqrt:
        for (int l = 0; l < lanes; ++l) v[l] = std::sqrt(a[l]);
        break;
      case Op::PowC:
        for (int l = 0; l < lanes; ++l) v[l] = std::pow(a[l], n.aux);
        break;
      case Op::Sin:
        for (int l = 0; l < lanes; ++l) v[l] = std::sin(a[l]);
        break;
      case Op::Cos:
        for (int l = 0; l < lanes; ++l) v[l] = std::cos(a[l]);
        break;
      case Op::Softplus:
        for (int l = 0; l < lanes; ++l) v[l] = stable_softplus(a[l], n.aux);
        break;
      case Op::Logistic:
        for (int l = 0; l < lanes; ++l) v[l] = stable_logistic(n.aux * a[l]);
        break;
    }
  }
}

BatchEvaluator::Result BatchEvaluator::accumulate(
    std::span<const double> params, std::span<const double> points,
    std::span<const double> weights, bool with_grad) const {
  const int nin = g_.n_inputs();
  const std::size_t n = weights.size();
  if (points.size() != n * static_cast<std::size_t>(nin))
    throw ConfigError("batch accumulate: points/weights size mismatch");
  if (static_cast<int>(params.size()) != g_.n_params())
    throw ConfigError("batch accumulate: params size mismatch");

  const auto& nodes = g_.nodes();
  Result res;
  res.tracked_sums.assign(tracked_.size(), 0.0);
  if (with_grad) res.dparams.assign(params.size(), 0.0);

  for (std::size_t first = 0; first < n; first += kChunk) {
    const int lanes = static_cast<int>(std::min<std::size_t>(kChunk, n - first));
    forward_chunk(params, points, first, lanes);

    const double* rv = &vals_[static_cast<std::size_t>(root_) * kChunk];
    const double* w = weights.data() + first;
    double csum = 0.0;
    for (int l = 0; l < lanes; ++l) csum += w[l] * rv[l];
    if (!std::isfinite(csum)) {
      // Locate the offending node with the scalar path for a precise message.
      for (int l = 0; l < lanes; ++l) {
        std::span<const double> x(points.data() + (first + l) * nin,
                                  static_cast<std::size_t>(nin));
        eval(g_, root_, params, x);  // throws NumericsError naming the node
      }
      throw NumericsError("non-finite weighted sum in batch evaluation");
    }
    res.weighted_sum += csum;

    for (std::size_t t = 0; t < tracked_.size(); ++t) {
      const double* tv = &vals_[static_cast<std::size_t>(tracked_[t]) * kChunk];
      double s = 0.0;
      for (int l = 0; l < lanes; ++l) s += w[l] * tv[l];
      res.tracked_sums[t] += s;
    }
    if (!with_grad) continue;

    std::memset(adj_.data(), 0, adj_.size() * sizeof(double));
    double* ra = &adj_[static_cast<std::size_t>(root_) * kChunk];
    for (int l = 0; l < lanes; ++l) ra[l] = w[l];

    for (std::size_t ri = nodes.size(); ri-- > 0;) {
      const Node& nd = nodes[ri];
      const double* wadj = &adj_[ri * kChunk];
      const double* v = &vals_[ri * kChunk];
      double* aa = nd.a >= 0 ? &adj_[static_cast<std::size_t>(nd.a) * kChunk]
                             : nullptr;
      double* ba = nd.b >= 0 ? &adj_[static_cast<std::size_t>(nd.b) * kChunk]
                             : nullptr;
      const double* av = nd.a >= 0
                             ? &vals_[static_cast<std::size_t>(nd.a) * kChunk]
                             : nullptr;
      const double* bv = nd.b >= 0
                             ? &vals_[static_cast<std::size_t>(nd.b) * kChunk]
                             : nullptr;
      switch (nd.op) {
        case Op::Const:
          break;
        case Op::Input:
          break;  // input adjoints are not needed in batch mode
        case Op::Param: {
          double s = 0.0;
          for (int l = 0; l < lanes; ++l) s += wadj[l];
          res.dparams[static_cast<std::size_t>(nd.aux)] += s;
          break;
        }
        case Op::Add:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l];
          for (int l = 0; l < lanes; ++l) ba[l] += wadj[l];
          break;
        case Op::Sub:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l];
          for (int l = 0; l < lanes; ++l) ba[l] -= wadj[l];
          break;
        case Op::Mul:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] * bv[l];
          for (int l = 0; l < lanes; ++l) ba[l] += wadj[l] * av[l];
          break;
        case Op::Div:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] / bv[l];
          for (int l = 0; l < lanes; ++l) ba[l] -= wadj[l] * v[l] / bv[l];
          break;
        case Op::Neg:
          for (int l = 0; l < lanes; ++l) aa[l] -= wadj[l];
          break;
        case Op::Relu:
          for (int l = 0; l < lanes; ++l)
            if (av[l] > 0.0) aa[l] += wadj[l];
          break;
        case Op::Step:
        case Op::Sign:
          break;
        case Op::Abs:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] * signum(av[l]);
          break;
        case Op::Exp:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] * v[l];
          break;
        case Op::Log:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] / av[l];
          break;
        case Op::Sqrt:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] * 0.5 / v[l];
          break;
        case Op::PowC:
          for (int l = 0; l < lanes; ++l)
            aa[l] += wadj[l] * nd.aux * std::pow(av[l], nd.aux - 1.0);
          break;
        case Op::Sin:
          for (int l = 0; l < lanes; ++l) aa[l] += wadj[l] * std::cos(av[l]);
          break;
        case Op::Cos:
          for (int l = 0; l < lanes; ++l) aa[l] -= wadj[l] * std::sin(av[l]);
          break;
        case Op::Softplus:
          for (int l = 0; l < lanes; ++l)
            aa[l] += wadj[l] * stable_logistic(nd.aux * av[l]);
          break;
        case Op::Logistic:
          for (int l = 0; l < lanes; ++l)
            aa[l] += wadj[l] * nd.aux * v[l] * (1.0 - v[l]);
          break;
      }
    }
  }
  return res;
}

void BatchEvaluator::sample(std::span<const double> params,
                            std::span<const double> points,
                            std::span<const NodeId> outputs,
                            double* out) const {
  const int nin = g_.n_inputs();
  const std::size_t n = points.size() / static_cast<std::size_t>(nin);
  for (std::size_t first = 0; first < n; first += kChunk) {
    const int lanes = static_cast<int>(std::min<std::size_t>(kChunk, n - first));
    forward_chunk(params, points, first, lanes);
    for (int l = 0; l < lanes; ++l) {
      for (std::size_t o = 0; o < outputs.size(); ++o) {
        out[(first + l) * outputs.size() + o] =
            vals_[static_cast<std::size_t>(outputs[o]) * kChunk + l];
      }
    }
  }
}

}  // namespace locband::ad
