#include "locband/graph.hpp"

#include <cmath>
#include <tuple>

namespace locband::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Input: return "input";
    case Op::Param: return "param";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Relu: return "relu";
    case Op::Step: return "step";
    case Op::Abs: return "abs";
    case Op::Sign: return "sign";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::PowC: return "pow_c";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Softplus: return "softplus";
    case Op::Logistic: return "logistic";
  }
  return "?";
}

namespace {

inline double stable_logistic(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double stable_softplus(double x, double beta) {
  // S(x; beta) = max(x,0) + log1p(exp(-beta*|x|)) / beta
  return std::max(x, 0.0) + std::log1p(std::exp(-beta * std::fabs(x))) / beta;
}

inline double signum(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Graph::Graph(int n_inputs, int n_params)
    : n_inputs_(n_inputs), n_params_(n_params) {
  input_nodes_.assign(static_cast<std::size_t>(n_inputs), -1);
  param_nodes_.assign(static_cast<std::size_t>(n_params), -1);
}

NodeId Graph::push(Op op, NodeId a, NodeId b, double aux) {
  nodes_.push_back(Node{op, a, b, aux});
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::constant(double v) {
  auto it = const_cache_.find(v);
  if (it != const_cache_.end()) return it->second;
  NodeId id = push(Op::Const, -1, -1, v);
  const_cache_.emplace(v, id);
  return id;
}

NodeId Graph::input(int slot) {
  if (slot < 0 || slot >= n_inputs_)
    throw ConfigError("graph: input slot " + std::to_string(slot) +
                      " out of range");
  NodeId& n = input_nodes_[static_cast<std::size_t>(slot)];
  if (n < 0) n = push(Op::Input, -1, -1, static_cast<double>(slot));
  return n;
}

NodeId Graph::param(int slot) {
  if (slot < 0 || slot >= n_params_)
    throw ConfigError("graph: param slot " + std::to_string(slot) +
                      " out of range");
  NodeId& n = param_nodes_[static_cast<std::size_t>(slot)];
  if (n < 0) n = push(Op::Param, -1, -1, static_cast<double>(slot));
  return n;
}

bool Graph::is_zero(NodeId n) const {
  const Node& nd = nodes_[static_cast<std::size_t>(n)];
  return nd.op == Op::Const && nd.aux == 0.0;
}

NodeId Graph::add(NodeId a, NodeId b) {
  if (is_zero(a)) return b;
  if (is_zero(b)) return a;
  return push(Op::Add, a, b, 0.0);
}

NodeId Graph::sub(NodeId a, NodeId b) {
  if (is_zero(b)) return a;
  if (is_zero(a)) return neg(b);
  return push(Op::Sub, a, b, 0.0);
}

NodeId Graph::mul(NodeId a, NodeId b) {
  if (is_zero(a) || is_zero(b)) return constant(0.0);
  const Node& na = nodes_[static_cast<std::size_t>(a)];
  const Node& nb = nodes_[static_cast<std::size_t>(b)];
  if (na.op == Op::Const && na.aux == 1.0) return b;
  if (nb.op == Op::Const && nb.aux == 1.0) return a;
  return push(Op::Mul, a, b, 0.0);
}

NodeId Graph::div(NodeId a, NodeId b) {
  if (is_zero(a)) return constant(0.0);
  return push(Op::Div, a, b, 0.0);
}

NodeId Graph::neg(NodeId a) {
  if (is_zero(a)) return a;
  return push(Op::Neg, a, -1, 0.0);
}

NodeId Graph::relu(NodeId a) { return push(Op::Relu, a, -1, 0.0); }
NodeId Graph::step(NodeId a) { return push(Op::Step, a, -1, 0.0); }
NodeId Graph::abs(NodeId a) { return push(Op::Abs, a, -1, 0.0); }
NodeId Graph::sign(NodeId a) { return push(Op::Sign, a, -1, 0.0); }
NodeId Graph::exp(NodeId a) { return push(Op::Exp, a, -1, 0.0); }
NodeId Graph::log(NodeId a) { return push(Op::Log, a, -1, 0.0); }
NodeId Graph::sqrt(NodeId a) { return push(Op::Sqrt, a, -1, 0.0); }
NodeId Graph::pow_c(NodeId a, double q) { return push(Op::PowC, a, -1, q); }
NodeId Graph::sin(NodeId a) { return push(Op::Sin, a, -1, 0.0); }
NodeId Graph::cos(NodeId a) { return push(Op::Cos, a, -1, 0.0); }

NodeId Graph::softplus(NodeId a, double beta) {
  return push(Op::Softplus, a, -1, beta);
}

NodeId Graph::logistic(NodeId a, double beta) {
  return push(Op::Logistic, a, -1, beta);
}

NodeId Graph::dot(std::span<const NodeId> u, std::span<const NodeId> v) {
  if (u.size() != v.size() || u.empty())
    throw ConfigError("graph: dot over mismatched or empty node lists");
  NodeId acc = mul(u[0], v[0]);
  for (std::size_t i = 1; i < u.size(); ++i) acc = add(acc, mul(u[i], v[i]));
  return acc;
}

NodeId Graph::norm(std::span<const NodeId> u) { return sqrt(dot(u, u)); }

NodeId Graph::d_input(NodeId f, int slot) { return derive(f, false, slot); }
NodeId Graph::d_param(NodeId f, int slot) { return derive(f, true, slot); }

NodeId Graph::derive(NodeId f, bool wrt_param, int slot) {
  auto key = std::make_tuple(f, wrt_param, slot);
  auto it = deriv_cache_.find(key);
  if (it != deriv_cache_.end()) return it->second;

  const Node nd = nodes_[static_cast<std::size_t>(f)];
  NodeId out = -1;
  auto d = [&](NodeId n) { return derive(n, wrt_param, slot); };
  switch (nd.op) {
    case Op::Const:
      out = constant(0.0);
      break;
    case Op::Input:
      out = constant(!wrt_param && static_cast<int>(nd.aux) == slot ? 1.0 : 0.0);
      break;
    case Op::Param:
      out = constant(wrt_param && static_cast<int>(nd.aux) == slot ? 1.0 : 0.0);
      break;
    case Op::Add:
      out = add(d(nd.a), d(nd.b));
      break;
    case Op::Sub:
      out = sub(d(nd.a), d(nd.b));
      break;
    case Op::Mul:
      out = add(mul(d(nd.a), nd.b), mul(nd.a, d(nd.b)));
      break;
    case Op::Div:
      // (a/b)' = a'/b - (a/b) * b'/b
      out = sub(div(d(nd.a), nd.b), div(mul(f, d(nd.b)), nd.b));
      break;
    case Op::Neg:
      out = neg(d(nd.a));
      break;
    case Op::Relu:
      out = mul(step(nd.a), d(nd.a));
      break;
    case Op::Step:
    case Op::Sign:
      out = constant(0.0);
      break;
    case Op::Abs:
      out = mul(sign(nd.a), d(nd.a));
      break;
    case Op::Exp:
      out = mul(f, d(nd.a));
      break;
    case Op::Log:
      out = div(d(nd.a), nd.a);
      break;
    case Op::Sqrt:
      out = div(d(nd.a), scale(f, 2.0));
      break;
    case Op::PowC:
      out = mul(constant(nd.aux), mul(pow_c(nd.a, nd.aux - 1.0), d(nd.a)));
      break;
    case Op::Sin:
      out = mul(cos(nd.a), d(nd.a));
      break;
    case Op::Cos:
      out = neg(mul(sin(nd.a), d(nd.a)));
      break;
    case Op::Softplus:
      out = mul(logistic(nd.a, nd.aux), d(nd.a));
      break;
    case Op::Logistic: {
      // sigma' = beta * sigma * (1 - sigma)
      NodeId s = f;
      NodeId ds = mul(constant(nd.aux), mul(s, sub(constant(1.0), s)));
      out = mul(ds, d(nd.a));
      break;
    }
  }
  deriv_cache_.emplace(key, out);
  return out;
}

namespace {

// Shared forward sweep writing node values into `vals`.
void forward_sweep(const Graph& g, std::span<const double> params,
                   std::span<const double> x, std::vector<double>& vals) {
  const auto& nodes = g.nodes();
  vals.resize(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Node& n = nodes[i];
    double v = 0.0;
    const double a = n.a >= 0 ? vals[static_cast<std::size_t>(n.a)] : 0.0;
    const double b = n.b >= 0 ? vals[static_cast<std::size_t>(n.b)] : 0.0;
    switch (n.op) {
      case Op::Const: v = n.aux; break;
      case Op::Input: v = x[static_cast<std::size_t>(n.aux)]; break;
      case Op::Param: v = params[static_cast<std::size_t>(n.aux)]; break;
      case Op::Add: v = a + b; break;
      case Op::Sub: v = a - b; break;
      case Op::Mul: v = a * b; break;
      case Op::Div: v = a / b; break;
      case Op::Neg: v = -a; break;
      case Op::Relu: v = a > 0.0 ? a : 0.0; break;
      case Op::Step: v = a > 0.0 ? 1.0 : 0.0; break;
      case Op::Abs: v = std::fabs(a); break;
      case Op::Sign: v = signum(a); break;
      case Op::Exp: v = std::exp(a); break;
      case Op::Log: v = std::log(a); break;
      case Op::Sqrt: v = std::sqrt(a); break;
      case Op::PowC: v = std::pow(a, n.aux); break;
      case Op::Sin: v = std::sin(a); break;
      case Op::Cos: v = std::cos(a); break;
      case Op::Softplus: v = stable_softplus(a, n.aux); break;
      case Op::Logistic: v = stable_logistic(n.aux * a); break;
    }
    if (!std::isfinite(v)) {
      throw NumericsError("non-finite value at node " + std::to_string(i) +
                          " (" + op_name(n.op) + ")");
    }
    vals[i] = v;
  }
}

}  // namespace

double eval(const Graph& g, NodeId root, std::span<const double> params,
            std::span<const double> x) {
  if (static_cast<int>(params.size()) != g.n_params() ||
      static_cast<int>(x.size()) != g.n_inputs())
    throw ConfigError("graph eval: params/inputs size mismatch");
  std::vector<double> vals;
  forward_sweep(g, params, x, vals);
  return vals[static_cast<std::size_t>(root)];
}

GradientBundle eval_with_gradients(const Graph& g, NodeId root,
                                   std::span<const double> params,
                                   std::span<const double> x) {
  if (static_cast<int>(params.size()) != g.n_params() ||
      static_cast<int>(x.size()) != g.n_inputs())
    throw ConfigError("graph eval: params/inputs size mismatch");
  std::vector<double> vals;
  forward_sweep(g, params, x, vals);

  const auto& nodes = g.nodes();
  std::vector<double> adj(nodes.size(), 0.0);
  adj[static_cast<std::size_t>(root)] = 1.0;

  GradientBundle out;
  out.value = vals[static_cast<std::size_t>(root)];
  out.dparams.assign(static_cast<std::size_t>(g.n_params()), 0.0);
  out.dinputs.assign(static_cast<std::size_t>(g.n_inputs()), 0.0);

  for (std::size_t ri = nodes.size(); ri-- > 0;) {
    const double w = adj[ri];
    if (w == 0.0) continue;
    const Node& n = nodes[ri];
    const double a = n.a >= 0 ? vals[static_cast<std::size_t>(n.a)] : 0.0;
    const double v = vals[ri];
    auto acc = [&](NodeId id, double g_) {
      if (id >= 0) adj[static_cast<std::size_t>(id)] += w * g_;
    };
    switch (n.op) {
      case Op::Const: break;
      case Op::Input:
        out.dinputs[static_cast<std::size_t>(n.aux)] += w;
        break;
      case Op::Param:
        out.dparams[static_cast<std::size_t>(n.aux)] += w;
        break;
      case Op::Add: acc(n.a, 1.0); acc(n.b, 1.0); break;
      case Op::Sub: acc(n.a, 1.0); acc(n.b, -1.0); break;
      case Op::Mul:
        acc(n.a, vals[static_cast<std::size_t>(n.b)]);
        acc(n.b, a);
        break;
      case Op::Div: {
        const double bv = vals[static_cast<std::size_t>(n.b)];
        acc(n.a, 1.0 / bv);
        acc(n.b, -v / bv);
        break;
      }
      case Op::Neg: acc(n.a, -1.0); break;
      case Op::Relu: acc(n.a, a > 0.0 ? 1.0 : 0.0); break;
      case Op::Step:
      case Op::Sign: break;
      case Op::Abs: acc(n.a, signum(a)); break;
      case Op::Exp: acc(n.a, v); break;
      case Op::Log: acc(n.a, 1.0 / a); break;
      case Op::Sqrt: acc(n.a, 0.5 / v); break;
      case Op::PowC: acc(n.a, n.aux * std::pow(a, n.aux - 1.0)); break;
      case Op::Sin: acc(n.a, std::cos(a)); break;
      case Op::Cos: acc(n.a, -std::sin(a)); break;
      case Op::Softplus: acc(n.a, stable_logistic(n.aux * a)); break;
      case Op::Logistic: acc(n.a, n.aux * v * (1.0 - v)); break;
    }
  }
  return out;
}

double gradcheck(const Graph& g, NodeId root, std::span<const double> params,
                 std::span<const double> x, double eps) {
  if (!(eps > 0.0) || eps > 1e-3)
    throw ConfigError("gradcheck: eps must lie in (0, 1e-3]");
  const GradientBundle ad = eval_with_gradients(g, root, params, x);

  Vector p(params.begin(), params.end());
  Vector xi(x.begin(), x.end());
  double worst = 0.0;
  auto probe = [&](Vector& v, std::size_t i, double ad_deriv) {
    const double save = v[i];
    v[i] = save + eps;
    const double fp = eval(g, root, p, xi);
    v[i] = save - eps;
    const double fm = eval(g, root, p, xi);
    v[i] = save;
    const double fd = (fp - fm) / (2.0 * eps);
    const double err =
        std::fabs(ad_deriv - fd) / std::max(std::fabs(ad_deriv), 1e-12);
    worst = std::max(worst, err);
  };
  for (std::size_t i = 0; i < p.size(); ++i) probe(p, i, ad.dparams[i]);
  for (std::size_t i = 0; i < xi.size(); ++i) probe(xi, i, ad.dinputs[i]);
  return worst;
}

}  // namespace locband::ad
