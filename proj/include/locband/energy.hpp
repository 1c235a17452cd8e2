#ifndef LOCBAND_ENERGY_HPP
#define LOCBAND_ENERGY_HPP

#include <memory>
#include <optional>

#include "locband/batcheval.hpp"
#include "locband/fields.hpp"
#include "locband/material.hpp"

namespace locband {

enum class Quadrature { kRiemann, kTrapezoid };

// Equivalent plastic strain measure: the jump-norm form p = |w|*|dPhi/dn|
// or the tensor-norm alternative p = ||eps_p|| (differs by 1/sqrt(2) in 2D).
enum class PForm { kJumpNorm, kTensorNorm };

// Gradient backend: the expression-graph engine, or the hand-tuned batched
// kernel for the 2D shear problem (identical math, cross-checked in tests).
enum class Backend { kGraph, kFastShear };

struct BarGeometry {
  double length = 10.0;
  bool parabolic_area = true;  // A with minimum a_min at midspan, a_max at ends
  double a_min = 1.0;
  double a_max = 2.0;

  double area(double x) const {
    if (!parabolic_area) return a_min;
    const double half = 0.5 * length;
    const double t = (x - half) / half;
    return a_min + (a_max - a_min) * t * t;
  }
};

struct CollocationSet {
  int dim = 1;
  Vector points;      // row-major [n][dim]
  Vector weights;     // cell measure, times A(x) in 1D
  // Dirichlet rows folded as (x..., u_bc...): dim + dim entries per row
  // (1 displacement component in 1D).
  Vector bc_rows;
  std::size_t n_bc = 0;
  BarGeometry bar_geo;  // meaningful when dim == 1

  std::size_t n_points() const {
    return points.size() / static_cast<std::size_t>(dim);
  }

  static CollocationSet bar(int n, const BarGeometry& geo, Quadrature quad);
  static CollocationSet shear(int nx, int ny, Quadrature quad);

  // Prescribed end/top displacement for the current load step.
  void set_bar_targets(double delta);
  void set_shear_targets(double delta);
};

struct EnergyBreakdown {
  double elastic = 0.0;
  double plastic_quadratic = 0.0;  // H p^2 / 2 term
  double plastic_linear = 0.0;     // sigma_p p term
  double total = 0.0;
  double bc_loss = 0.0;
};

struct FieldSamples {
  // Per collocation point. 2D tensors carry xx, yy, xy; 1D uses xx only.
  Vector x, y;
  Vector u, v;
  Vector eps_xx, eps_yy, eps_xy;
  Vector eps_p_xx, eps_p_yy, eps_p_xy;
  Vector p;
  Vector sig_xx, sig_yy, sig_xy;
  Vector force;  // 1D: sigma(x)*A(x)
  // 1D element-midpoint force samples (superconvergent equilibrium check).
  Vector mid_x, mid_force;
};

struct LossGrad {
  double loss = 0.0;
  Vector grad;          // empty when gradients were not requested
  double bc_loss = 0.0;
  double energy = 0.0;  // signed total energy (before any abs guard)
  bool gate_open = false;  // true once bc_loss <= lambda (energy included)
  EnergyBreakdown breakdown;
};

class EnergyModel {
 public:
  EnergyModel(const FieldModel& model, const MaterialSpec& m,
              CollocationSet q, PForm p_form = PForm::kJumpNorm,
              Backend backend = Backend::kGraph);
  ~EnergyModel();
  EnergyModel(EnergyModel&&) noexcept;

  const CollocationSet& collocation() const { return q_; }
  CollocationSet& collocation() { return q_; }
  const MaterialSpec& material() const { return m_; }

  EnergyBreakdown assemble(std::span<const double> params) const;
  double boundary_loss(std::span<const double> params) const;

  // Algorithm gate: L_BC alone while it exceeds lambda, else L_VF + L_BC.
  LossGrad gated_loss(std::span<const double> params, double lambda,
                      bool abs_guard, bool with_grad) const;

  // Ungated L_VF + bc_weight * L_BC (refinement phase objective).
  LossGrad weighted_loss(std::span<const double> params, double bc_weight,
                         bool abs_guard, bool with_grad) const;

  struct PlasticMeasures {
    Sym2 eps_p;
    double p = 0.0;
  };
  PlasticMeasures plastic_measures(std::span<const double> params,
                                   std::span<const double> x) const;

  FieldSamples postprocess(std::span<const double> params) const;

 private:
  struct GraphPack;
  LossGrad energy_with_grad(std::span<const double> params,
                            bool with_grad) const;
  LossGrad bc_with_grad(std::span<const double> params, bool with_grad) const;

  const FieldModel& model_;
  MaterialSpec m_;
  CollocationSet q_;
  PForm p_form_;
  Backend backend_;
  std::unique_ptr<GraphPack> gp_;
};

}  // namespace locband

#endif
