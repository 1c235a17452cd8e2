#ifndef LOCBAND_GRAPH_HPP
#define LOCBAND_GRAPH_HPP

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "locband/common.hpp"

namespace locband::ad {

// Scalar expression graph for reverse-mode differentiation.
//
// Outputs can be differentiated with respect to both trainable parameters
// and spatial inputs. Spatial derivatives are materialized as graph nodes
// (see Graph::d_input), so a loss that contains input-gradients remains an
// ordinary graph and its parameter gradient is obtained by a single reverse
// sweep.

enum class Op : std::uint8_t {
  Const,
  Input,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Relu,
  Step,   // 1 for x > 0, else 0; derivative defined as 0 everywhere
  Abs,
  Sign,   // -1/0/+1; derivative defined as 0 everywhere
  Exp,
  Log,
  Sqrt,
  PowC,   // x^q with constant exponent q in aux
  Sin,
  Cos,
  Softplus,  // S(x; beta) = max(x,0) + log1p(exp(-beta*|x|))/beta, beta in aux
  Logistic,  // 1 / (1 + exp(-beta*x)), beta in aux
};

const char* op_name(Op op);

using NodeId = std::int32_t;

struct Node {
  Op op;
  NodeId a = -1;
  NodeId b = -1;
  double aux = 0.0;  // constant value, input/param slot, exponent, or beta
};

struct GradientBundle {
  double value = 0.0;
  Vector dparams;  // length n_params
  Vector dinputs;  // length n_inputs
};

class Graph {
 public:
  Graph(int n_inputs, int n_params);

  int n_inputs() const { return n_inputs_; }
  int n_params() const { return n_params_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  NodeId constant(double v);
  NodeId input(int slot);
  NodeId param(int slot);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId neg(NodeId a);
  NodeId relu(NodeId a);
  NodeId step(NodeId a);
  NodeId abs(NodeId a);
  NodeId sign(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId sqrt(NodeId a);
  NodeId pow_c(NodeId a, double q);
  NodeId sin(NodeId a);
  NodeId cos(NodeId a);
  NodeId softplus(NodeId a, double beta);
  NodeId logistic(NodeId a, double beta);

  NodeId square(NodeId a) { return mul(a, a); }
  NodeId scale(NodeId a, double c) { return mul(constant(c), a); }
  // dot(u, v) and |u| over equal-length node lists, fixed summation order
  NodeId dot(std::span<const NodeId> u, std::span<const NodeId> v);
  NodeId norm(std::span<const NodeId> u);

  // Symbolic derivative node of f with respect to input slot / param slot.
  // Memoized; repeated calls return the same node.
  NodeId d_input(NodeId f, int slot);
  NodeId d_param(NodeId f, int slot);

  bool is_zero(NodeId n) const;

 private:
  NodeId push(Op op, NodeId a, NodeId b, double aux);
  NodeId derive(NodeId f, bool wrt_param, int slot);

  int n_inputs_;
  int n_params_;
  std::vector<Node> nodes_;
  std::vector<NodeId> input_nodes_;
  std::vector<NodeId> param_nodes_;
  std::map<double, NodeId> const_cache_;
  // (node, wrt_param, slot) -> derivative node
  std::map<std::tuple<NodeId, bool, int>, NodeId> deriv_cache_;
};

// Forward evaluation of a single root. Throws NumericsError naming the node
// if any intermediate is non-finite.
double eval(const Graph& g, NodeId root, std::span<const double> params,
            std::span<const double> x);

// Forward + reverse sweep: value, d/dparams and d/dinputs of `root`.
GradientBundle eval_with_gradients(const Graph& g, NodeId root,
                                   std::span<const double> params,
                                   std::span<const double> x);

// Max relative error between reverse-mode derivatives and central finite
// differences over all parameter and input directions.
double gradcheck(const Graph& g, NodeId root, std::span<const double> params,
                 std::span<const double> x, double eps);

}  // namespace locband::ad

#endif
