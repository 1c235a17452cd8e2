#ifndef LOCBAND_OPTIM_HPP
#define LOCBAND_OPTIM_HPP

#include <functional>
#include <span>

#include "locband/common.hpp"

namespace locband::opt {

// lr0 * 0.5 * (1 + cos(pi t / T))
double cosine_lr(long t, long total, double lr0);

struct AdamWConfig {
  double lr0 = 1e-2;
  double b1 = 0.9;
  double b2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  long total_steps = 1;  // cosine-decay horizon
  bool use_schedule = true;
};

class AdamW {
 public:
  AdamW(std::size_t n, const AdamWConfig& cfg);

  // One decoupled-weight-decay update; throws NumericsError on non-finite
  // gradients.
  void step(Vector& params, std::span<const double> grads);

  long steps_taken() const { return t_; }
  double current_lr() const;  // rate the next step will use

 private:
  AdamWConfig cfg_;
  long t_ = 0;
  Vector m_, v_;
};

struct LbfgsConfig {
  int memory = 20;
  double c1 = 1e-4;  // strong Wolfe sufficient decrease
  double c2 = 0.9;   // strong Wolfe curvature
  int max_iters = 500;
  double grad_tol = 1e-9;  // on the 2-norm
  int max_line_search = 50;
};

struct LbfgsResult {
  Vector params;
  double loss = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;          // gradient norm at tolerance
  bool line_search_failed = false; // returned best-so-far
};

// Loss callable: fills `grad` (resized by the caller) and returns the loss.
using LossFn = std::function<double(std::span<const double>, Vector&)>;

// Two-loop-recursion L-BFGS with a strong-Wolfe line search (bracket + zoom).
LbfgsResult lbfgs_minimize(const LossFn& f, Vector params0,
                           const LbfgsConfig& cfg);

}  // namespace locband::opt

#endif
