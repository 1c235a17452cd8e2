#ifndef LOCBAND_BATCHEVAL_HPP
#define LOCBAND_BATCHEVAL_HPP

#include <span>
#include <vector>

#include "locband/graph.hpp"

namespace locband::ad {

// Evaluates one graph over many points in fixed-size chunks (struct-of-arrays
// per node), accumulating a weighted sum of the root and its parameter
// gradient. Chunks and lanes are processed in a fixed order so the reduction
// is run-to-run deterministic.
class BatchEvaluator {
 public:
  struct Result {
    double weighted_sum = 0.0;
    Vector dparams;        // d(weighted_sum)/dparams, empty if !with_grad
    Vector tracked_sums;   // weighted sums of the tracked nodes
  };

  BatchEvaluator(const Graph& g, NodeId root, std::vector<NodeId> tracked = {});

  // points: row-major [n_points][n_inputs]; weights: length n_points.
  Result accumulate(std::span<const double> params,
                    std::span<const double> points,
                    std::span<const double> weights, bool with_grad) const;

  // Forward-only per-point values of `outputs`, row-major [n_points][n_out].
  void sample(std::span<const double> params, std::span<const double> points,
              std::span<const NodeId> outputs, double* out) const;

  static constexpr int kChunk = 128;

 private:
  void forward_chunk(std::span<const double> params,
                     std::span<const double> points, std::size_t first,
                     int lanes) const;

  const Graph& g_;
  NodeId root_;
  std::vector<NodeId> tracked_;
  mutable std::vector<double> vals_;  // [n_nodes][kChunk]
  mutable std::vector<double> adj_;
};

}  // namespace locband::ad

#endif
