#ifndef LOCBAND_SHEAR_FAST_HPP
#define LOCBAND_SHEAR_FAST_HPP

#include "locband/batcheval.hpp"
#include "locband/fields.hpp"
#include "locband/material.hpp"

namespace locband {

struct CollocationSet;

// Hand-tuned replacement for the graph interpreter on the 2D energy density.
// Runs the perceptron forward with two spatial tangent channels per neuron
// (d/dx, d/dy) and a matching reverse sweep for the parameter gradient, so a
// chunk of points costs a few fused loops instead of thousands of interpreted
// node visits. The math mirrors the graph construction exactly (ReLU' = 0 at
// the kink, |grad Phi| via the projection onto the band normal) and the two
// routes are cross-checked in the tests.
class ShearFastKernel {
 public:
  ShearFastKernel(const FieldModel& model, const MaterialSpec& m,
                  const CollocationSet& q, double p_scale);

  // Same contract as BatchEvaluator::accumulate on the density graph:
  // weighted energy sum, its parameter gradient, and the per-term sums
  // (elastic, quadratic plastic, linear plastic).
  ad::BatchEvaluator::Result accumulate(std::span<const double> params,
                                        bool with_grad) const;

  static constexpr int kChunk = 128;

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> layer_offset_;  // weight offset per layer
  int idx_alpha_, idx_yp_, idx_jump_;
  double lam_, mu_, H_, c_, beta_, p_scale_;
  SigmaPProfile profile_;
  double sigma_p_uniform_;
  Vector points_, weights_;
  // [layer][neuron][channel: value, d/dx, d/dy][lane]
  mutable std::vector<Vector> act_, adj_;
};

}  // namespace locband

#endif
