#ifndef LOCBAND_DRIVER_HPP
#define LOCBAND_DRIVER_HPP

#include <vector>

#include "locband/energy.hpp"
#include "locband/optim.hpp"

namespace locband {

// Per-step training protocol. The AdamW phase minimizes the gated loss of
// Algorithm 1; the optional L-BFGS rounds refine the ungated objective
// L_VF + lbfgs_bc_weight * L_BC. The plain unweighted sum stalls at a large
// BC deficit (the energy gradient can pay for boundary error), so the
// refinement weight is exposed as a protocol knob.
struct Protocol {
  long adamw_epochs = 3000;
  int lbfgs_rounds = 1;  // 0 = AdamW-only (the 2D default)
  bool abs_energy_guard = false;
  double lambda = 1e-4;
  double lbfgs_bc_weight = 1e4;
  opt::AdamWConfig adamw;   // total_steps is set per phase
  opt::LbfgsConfig lbfgs;
};

struct LoadProgram {
  Vector deltas;  // nondecreasing prescribed displacements
  Protocol protocol;
};

struct StepReport {
  double delta = 0.0;
  BandGeometry band;
  EnergyBreakdown energy;
  double bc_loss = 0.0;
  Vector loss_history;  // AdamW phase, one entry per epoch
  long gate_epoch = -1; // first epoch with the energy term active
  double grad_norm = 0.0;
  int lbfgs_iterations = 0;
  double wall_seconds = 0.0;
  bool flagged = false;       // non-convergence or post-retry divergence
  bool guard_retried = false; // §-style divergence retry with |W| was used
  FieldSamples samples;
};

// Owns the trainable model and the energy assembly; runs the quasi-static
// protocol with warm starts threaded through consecutive steps.
class Driver {
 public:
  Driver(FieldModel model, const MaterialSpec& m, CollocationSet q,
         PForm p_form = PForm::kJumpNorm, Backend backend = Backend::kGraph);
  // the energy model holds a reference to the owned field model
  Driver(const Driver&) = delete;
  Driver& operator=(const Driver&) = delete;

  FieldModel& model() { return model_; }
  const FieldModel& model() const { return model_; }
  EnergyModel& energy() { return *energy_; }

  // Trains the regular field at the last elastic displacement with the band
  // parameters frozen (exact-zero updates). Throws NumericsError if the BC
  // loss cannot be brought below lambda.
  void elastic_presolve(double delta, const Protocol& p);

  StepReport solve_load_step(double delta, const Protocol& p);

  std::vector<StepReport> run_load_program(const LoadProgram& program);

 private:
  void set_targets(double delta);
  // AdamW phase; returns false when it diverged (non-finite) under this guard
  bool adamw_phase(const Protocol& p, bool guard, bool freeze_band,
                   StepReport* report);
  bool lbfgs_phase(const Protocol& p, bool guard, bool freeze_band,
                   StepReport* report);

  FieldModel model_;
  std::unique_ptr<EnergyModel> energy_;
};

}  // namespace locband

#endif
