#ifndef LOCBAND_FIELDS_HPP
#define LOCBAND_FIELDS_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "locband/graph.hpp"

namespace locband {

// Geometry of the localization band. The normal is n = (cos alpha, sin alpha)
// in 2D and the +x direction in 1D; the jump acts along the tangent
// t = (-sin alpha, cos alpha), which keeps it orthogonal to n by construction
// (isochoric plastic flow). `jump` is a signed magnitude; the physical jump
// norm is |jump|.
struct BandGeometry {
  int dim = 1;
  double alpha = 0.0;  // band normal angle, 2D only
  double y_p = 0.0;    // midpoint offset along the normal
  double c = 0.1;      // band width (fixed per run)
  double beta = 100.0; // sharpness (fixed per run)
  double jump = 0.0;

  std::array<double, 2> normal() const;
  std::array<double, 2> tangent() const;
  void validate() const;
};

// Ramp activation across the band: Phi = S(z+1/2; beta) - S(z-1/2; beta)
// with z = (x.n - y_p)/c. Values lie strictly in (0, 1) and increase with z.
double band_activation(std::span<const double> x, const BandGeometry& g);

// Analytic spatial gradient of the activation:
// [sigma(beta(z+1/2)) - sigma(beta(z-1/2))] * n / c.
std::array<double, 2> band_activation_spatial_gradient(std::span<const double> x,
                                                       const BandGeometry& g);

// Continuous piecewise-linear field on [0, L] with fixed, equally spaced
// knots and trainable nodal values.
struct RegularField1D {
  Vector knots;
  Vector nodal_values;

  double eval(double x) const;  // exact at knots; throws outside [0, L]
};

// Small ReLU perceptron, 2 inputs -> hidden layers -> 2 outputs.
struct RegularField2D {
  std::vector<int> widths;  // {2, h1, ..., hk, 2}
  Vector weights;           // per layer: W (out x in, row-major) then bias

  std::array<double, 2> eval(std::span<const double> x) const;
  static std::size_t weight_count(const std::vector<int>& widths);
  // Uniform Glorot weights, zero biases.
  static Vector init_weights(const std::vector<int>& widths, std::uint64_t seed);
};

// Trainable displacement ansatz u* = u_R + jump * t * Phi with a single flat
// parameter vector theta = [regular params..., (alpha,) y_p, jump].
class FieldModel {
 public:
  static FieldModel bar(int n_nodes, double length, double c, double beta);
  static FieldModel shear(const std::vector<int>& hidden_widths, double c,
                          double beta, std::uint64_t seed);

  int dim() const { return dim_; }
  int n_params() const { return static_cast<int>(params_.size()); }
  int n_regular_params() const { return n_regular_; }
  int idx_alpha() const { return idx_alpha_; }  // -1 in 1D
  int idx_yp() const { return idx_yp_; }
  int idx_jump() const { return idx_jump_; }
  double length() const { return length_; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  BandGeometry band() const;
  void set_band(const BandGeometry& g);

  std::array<double, 2> eval_regular(std::span<const double> x) const;
  std::array<double, 2> eval_total(std::span<const double> x) const;

  // Builds the ansatz into `g` (inputs 0..dim-1 are coordinates; parameter
  // slots follow this model's layout). All ids refer to nodes of `g`.
  struct GraphNodes {
    std::array<ad::NodeId, 2> u_regular{-1, -1};
    std::array<ad::NodeId, 2> u_total{-1, -1};
    ad::NodeId phi = -1;
  };
  GraphNodes build_into(ad::Graph& g) const;

  const Vector& knots() const { return knots_; }
  const std::vector<int>& widths() const { return widths_; }

 private:
  int dim_ = 1;
  double length_ = 1.0;
  double c_ = 0.1;
  double beta_ = 100.0;
  int n_regular_ = 0;
  int idx_alpha_ = -1;
  int idx_yp_ = -1;
  int idx_jump_ = -1;
  Vector params_;
  Vector knots_;              // 1D
  std::vector<int> widths_;   // 2D
};

}  // namespace locband

#endif
