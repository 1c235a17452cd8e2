#include "locband/driver.hpp"

#include <chrono>
#include <cmath>

namespace locband {

namespace {

struct BandSlots {
  int alpha = -1, yp = -1, jump = -1;
};

BandSlots band_slots(const FieldModel& m) {
  return {m.idx_alpha(), m.idx_yp(), m.idx_jump()};
}

void zero_band(Vector& v, const BandSlots& s) {
  if (s.alpha >= 0) v[static_cast<std::size_t>(s.alpha)] = 0.0;
  v[static_cast<std::size_t>(s.yp)] = 0.0;
  v[static_cast<std::size_t>(s.jump)] = 0.0;
}

}  // namespace

Driver::Driver(FieldModel model, const MaterialSpec& m, CollocationSet q,
               PForm p_form, Backend backend)
    : model_(std::move(model)) {
  energy_ = std::make_unique<EnergyModel>(model_, m, std::move(q), p_form,
                                          backend);
}

void Driver::set_targets(double delta) {
  if (model_.dim() == 1)
    energy_->collocation().set_bar_targets(delta);
  else
    energy_->collocation().set_shear_targets(delta);
}

bool Driver::adamw_phase(const Protocol& p, bool guard, bool freeze_band,
                         StepReport* report) {
  if (p.adamw_epochs <= 0) return true;
  Vector& th = model_.params();
  opt::AdamWConfig cfg = p.adamw;
  cfg.total_steps = p.adamw_epochs;
  opt::AdamW optimizer(th.size(), cfg);
  const BandSlots slots = band_slots(model_);
  const BandGeometry frozen = model_.band();

  for (long epoch = 0; epoch < p.adamw_epochs; ++epoch) {
    LossGrad lg;
    try {
      lg = energy_->gated_loss(th, p.lambda, guard, true);
      if (freeze_band) zero_band(lg.grad, slots);
      optimizer.step(th, lg.grad);
    } catch (const NumericsError&) {
      return false;
    }
    if (freeze_band) model_.set_band(frozen);
    if (report != nullptr) {
      report->loss_history.push_back(lg.loss);
      if (lg.gate_open && report->gate_epoch < 0) report->gate_epoch = epoch;
    }
  }
  return true;
}

bool Driver::lbfgs_phase(const Protocol& p, bool guard, bool freeze_band,
                         StepReport* report) {
  if (p.lbfgs_rounds <= 0) return true;
  const BandSlots slots = band_slots(model_);
  const BandGeometry frozen = model_.band();

  Vector th_eval;
  opt::LossFn fn = [&](std::span<const double> params, Vector& grad) {
    th_eval.assign(params.begin(), params.end());
    if (freeze_band) {
      if (slots.alpha >= 0)
        th_eval[static_cast<std::size_t>(slots.alpha)] = frozen.alpha;
      th_eval[static_cast<std::size_t>(slots.yp)] = frozen.y_p;
      th_eval[static_cast<std::size_t>(slots.jump)] = frozen.jump;
    }
    LossGrad lg =
        energy_->weighted_loss(th_eval, p.lbfgs_bc_weight, guard, true);
    grad = std::move(lg.grad);
    if (freeze_band) zero_band(grad, slots);
    return lg.loss;
  };

  try {
    for (int round = 0; round < p.lbfgs_rounds; ++round) {
      auto res = opt::lbfgs_minimize(fn, model_.params(), p.lbfgs);
      model_.params() = std::move(res.params);
      if (freeze_band) model_.set_band(frozen);
      if (report != nullptr) {
        report->grad_norm = res.grad_norm;
        report->lbfgs_iterations += res.iterations;
      }
    }
  } catch (const NumericsError&) {
    return false;
  }
  return true;
}

void Driver::elastic_presolve(double delta, const Protocol& p) {
  set_targets(delta);
  bool ok = adamw_phase(p, p.abs_energy_guard, true, nullptr) &&
            lbfgs_phase(p, p.abs_energy_guard, true, nullptr);
  const double bc = energy_->boundary_loss(model_.params());
  if (!ok || bc > p.lambda)
    throw NumericsError("elastic presolve did not reach the BC threshold: "
                        "final BC loss " +
                        std::to_string(bc));
}

StepReport Driver::solve_load_step(double delta, const Protocol& p) {
  const auto t0 = std::chrono::steady_clock::now();
  set_targets(delta);
  const Vector warm_start = model_.params();

  StepReport r;
  r.delta = delta;
  bool ok = adamw_phase(p, p.abs_energy_guard, false, &r) &&
            lbfgs_phase(p, p.abs_energy_guard, false, &r);
  if (!ok && !p.abs_energy_guard) {
    // single documented retry: restart the step with the |W| guard
    model_.params() = warm_start;
    r = StepReport{};
    r.delta = delta;
    r.guard_retried = true;
    ok = adamw_phase(p, true, false, &r) && lbfgs_phase(p, true, false, &r);
  }
  if (!ok) {
    r.flagged = true;
    model_.params() = warm_start;  // keep the program viable past this step
  }

  r.band = model_.band();
  r.energy = energy_->assemble(model_.params());
  r.bc_loss = r.energy.bc_loss;
  if (r.bc_loss > 10.0 * p.lambda) r.flagged = true;
  r.samples = energy_->postprocess(model_.params());
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return r;
}

std::vector<StepReport> Driver::run_load_program(const LoadProgram& program) {
  for (std::size_t i = 1; i < program.deltas.size(); ++i)
    if (program.deltas[i] < program.deltas[i - 1])
      throw ConfigError("load program: deltas must be nondecreasing");
  std::vector<StepReport> reports;
  reports.reserve(program.deltas.size());
  for (double delta : program.deltas)
    reports.push_back(solve_load_step(delta, program.protocol));
  return reports;
}

}  // namespace locband
