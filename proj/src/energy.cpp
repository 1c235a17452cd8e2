#include "locband/energy.hpp"

#include <cmath>

#include "locband/shear_fast.hpp"

namespace locband {

using ad::Graph;
using ad::NodeId;

CollocationSet CollocationSet::bar(int n, const BarGeometry& geo,
                                   Quadrature quad) {
  if (n < 2) throw ConfigError("collocation: need at least 2 points");
  CollocationSet q;
  q.dim = 1;
  q.bar_geo = geo;
  const double dx = geo.length / (n - 1);
  q.points.resize(static_cast<std::size_t>(n));
  q.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = geo.length * i / (n - 1);
    double m = dx;
    if (quad == Quadrature::kTrapezoid && (i == 0 || i == n - 1)) m *= 0.5;
    q.points[static_cast<std::size_t>(i)] = x;
    q.weights[static_cast<std::size_t>(i)] = m * geo.area(x);
  }
  // Dirichlet ends; targets filled by set_bar_targets.
  q.bc_rows = {0.0, 0.0, geo.length, 0.0};
  q.n_bc = 2;
  return q;
}

CollocationSet CollocationSet::shear(int nx, int ny, Quadrature quad) {
  if (nx < 2 || ny < 2) throw ConfigError("collocation: grid must be >= 2x2");
  CollocationSet q;
  q.dim = 2;
  const double dx = 1.0 / (nx - 1);
  const double dy = 1.0 / (ny - 1);
  q.points.reserve(2u * static_cast<std::size_t>(nx) *
                   static_cast<std::size_t>(ny));
  q.weights.reserve(static_cast<std::size_t>(nx) *
                    static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) {
    const double y = static_cast<double>(j) / (ny - 1);
    double wy = dy;
    if (quad == Quadrature::kTrapezoid && (j == 0 || j == ny - 1)) wy *= 0.5;
    for (int i = 0; i < nx; ++i) {
      const double x = static_cast<double>(i) / (nx - 1);
      double wx = dx;
      if (quad == Quadrature::kTrapezoid && (i == 0 || i == nx - 1)) wx *= 0.5;
      q.points.push_back(x);
      q.points.push_back(y);
      q.weights.push_back(wx * wy);
    }
  }
  // Fixed bottom, sheared top; targets filled by set_shear_targets.
  q.bc_rows.assign(2u * static_cast<std::size_t>(nx) * 4u, 0.0);
  q.n_bc = 2u * static_cast<std::size_t>(nx);
  for (int i = 0; i < nx; ++i) {
    const double x = static_cast<double>(i) / (nx - 1);
    q.bc_rows[static_cast<std::size_t>(i) * 4] = x;          // bottom, y = 0
    q.bc_rows[static_cast<std::size_t>(nx + i) * 4] = x;     // top, y = 1
    q.bc_rows[static_cast<std::size_t>(nx + i) * 4 + 1] = 1.0;
  }
  return q;
}

void CollocationSet::set_bar_targets(double delta) {
  if (dim != 1) throw ConfigError("set_bar_targets on a non-bar set");
  bc_rows[1] = 0.0;
  bc_rows[3] = delta;
}

void CollocationSet::set_shear_targets(double delta) {
  if (dim != 2) throw ConfigError("set_shear_targets on a non-shear set");
  const std::size_t nx = n_bc / 2;
  for (std::size_t i = 0; i < nx; ++i) {
    bc_rows[(nx + i) * 4 + 2] = delta;  // top u_x
    bc_rows[(nx + i) * 4 + 3] = 0.0;
  }
}

struct EnergyModel::GraphPack {
  Graph density;
  Graph bc;
  Graph fields;
  NodeId density_root = -1;
  NodeId bc_root = -1;
  std::vector<NodeId> field_outputs;  // see postprocess() for the order
  std::unique_ptr<ad::BatchEvaluator> be_density;
  std::unique_ptr<ad::BatchEvaluator> be_bc;
  std::unique_ptr<ad::BatchEvaluator> be_fields;
  std::unique_ptr<ShearFastKernel> fast;
  Vector bc_weights;

  GraphPack(int dim, int n_params)
      : density(dim, n_params), bc(2 * dim, n_params), fields(dim, n_params) {}
};

namespace {

// sigma_p(x) as a graph expression; y is the vertical coordinate node.
NodeId sigma_p_node(Graph& g, const MaterialSpec& m, NodeId y) {
  if (m.sigma_p_profile == SigmaPProfile::kUniform)
    return g.constant(m.sigma_p);
  const NodeId t = g.sub(g.scale(y, 2.0), g.constant(1.0));
  return g.add(g.constant(0.75), g.scale(g.square(t), 0.25));
}

struct DensityNodes {
  NodeId elastic, pq, pl, total;
};

DensityNodes build_density(Graph& g, const FieldModel& model,
                           const MaterialSpec& m, PForm p_form) {
  const auto f = model.build_into(g);
  DensityNodes out{};
  const NodeId jump = g.param(model.idx_jump());
  const NodeId H = g.constant(m.softening_H());

  if (model.dim() == 1) {
    const NodeId eps_e = g.d_input(f.u_regular[0], 0);
    const NodeId dphi = g.d_input(f.phi, 0);
    // p = |w| |dPhi/dn|; identical to ||eps_p|| in 1D
    const NodeId p = g.mul(g.abs(jump), g.abs(dphi));
    out.elastic = g.scale(g.square(eps_e), 0.5 * m.E);
    out.pq = g.scale(g.mul(H, g.square(p)), 0.5);
    out.pl = g.scale(p, m.sigma_p);
    out.total = g.add(g.add(out.elastic, out.pq), out.pl);
    return out;
  }

  const NodeId exx = g.d_input(f.u_regular[0], 0);
  const NodeId eyy = g.d_input(f.u_regular[1], 1);
  const NodeId exy = g.scale(
      g.add(g.d_input(f.u_regular[0], 1), g.d_input(f.u_regular[1], 0)), 0.5);
  const NodeId tr = g.add(exx, eyy);
  const NodeId contract =
      g.add(g.add(g.square(exx), g.square(eyy)), g.scale(g.square(exy), 2.0));
  out.elastic = g.add(g.scale(g.square(tr), 0.5 * m.lame_lambda()),
                      g.scale(contract, m.lame_mu()));

  const NodeId dphi0 = g.d_input(f.phi, 0);
  const NodeId dphi1 = g.d_input(f.phi, 1);
  // grad Phi is parallel to n, so |grad Phi| = |grad Phi . n|; the projected
  // form avoids the sqrt, whose derivative is NaN where the gradient
  // underflows to zero far from the band. The tensor norm differs only by
  // ||sym(t x n)|| = 1/sqrt(2) since t is a unit vector orthogonal to n.
  const NodeId sa = g.sin(g.param(model.idx_alpha()));
  const NodeId ca = g.cos(g.param(model.idx_alpha()));
  const NodeId dn = g.add(g.mul(dphi0, ca), g.mul(dphi1, sa));
  NodeId p = g.mul(g.abs(jump), g.abs(dn));
  if (p_form == PForm::kTensorNorm) p = g.scale(p, 1.0 / std::sqrt(2.0));
  out.pq = g.scale(g.mul(H, g.square(p)), 0.5);
  out.pl = g.mul(sigma_p_node(g, m, g.input(1)), p);
  out.total = g.add(g.add(out.elastic, out.pq), out.pl);
  return out;
}

}  // namespace

EnergyModel::EnergyModel(const FieldModel& model, const MaterialSpec& m,
                         CollocationSet q, PForm p_form, Backend backend)
    : model_(model), m_(m), q_(std::move(q)), p_form_(p_form),
      backend_(backend) {
  if (q_.dim != model_.dim())
    throw ConfigError("energy: collocation/model dimension mismatch");
  if (backend_ == Backend::kFastShear && model_.dim() != 2)
    throw ConfigError("fast backend supports only the 2D problem");
  m_.validate();

  gp_ = std::make_unique<GraphPack>(model_.dim(), model_.n_params());

  const auto dn = build_density(gp_->density, model_, m_, p_form_);
  gp_->density_root = dn.total;
  gp_->be_density = std::make_unique<ad::BatchEvaluator>(
      gp_->density, dn.total,
      std::vector<NodeId>{dn.elastic, dn.pq, dn.pl});

  // Boundary-condition residual ||u*(x) - u_bc||^2; targets ride along as
  // extra input slots so one graph serves every load step.
  {
    Graph& g = gp_->bc;
    const auto f = model_.build_into(g);
    NodeId res;
    if (model_.dim() == 1) {
      res = g.square(g.sub(f.u_total[0], g.input(1)));
    } else {
      res = g.add(g.square(g.sub(f.u_total[0], g.input(2))),
                  g.square(g.sub(f.u_total[1], g.input(3))));
    }
    gp_->bc_root = res;
    gp_->be_bc = std::make_unique<ad::BatchEvaluator>(g, res);
    gp_->bc_weights.assign(q_.n_bc, 1.0 / static_cast<double>(q_.n_bc));
  }

  // Sampling graph for postprocessing.
  {
    Graph& g = gp_->fields;
    const auto f = model_.build_into(g);
    const NodeId jump = g.param(model_.idx_jump());
    auto& outs = gp_->field_outputs;
    if (model_.dim() == 1) {
      const NodeId eps_e = g.d_input(f.u_regular[0], 0);
      const NodeId eps_tot = g.d_input(f.u_total[0], 0);
      const NodeId dphi = g.d_input(f.phi, 0);
      const NodeId eps_p = g.mul(jump, dphi);
      const NodeId p = g.mul(g.abs(jump), g.abs(dphi));
      const NodeId sig = g.scale(eps_e, m_.E);
      outs = {f.u_total[0], eps_tot, eps_p, p, sig};
    } else {
      const NodeId exx = g.d_input(f.u_regular[0], 0);
      const NodeId eyy = g.d_input(f.u_regular[1], 1);
      const NodeId exy = g.scale(g.add(g.d_input(f.u_regular[0], 1),
                                       g.d_input(f.u_regular[1], 0)),
                                 0.5);
      const NodeId dphi0 = g.d_input(f.phi, 0);
      const NodeId dphi1 = g.d_input(f.phi, 1);
      const NodeId sa = g.sin(g.param(model_.idx_alpha()));
      const NodeId ca = g.cos(g.param(model_.idx_alpha()));
      const NodeId t0 = g.neg(sa);
      const NodeId t1 = ca;
      const NodeId pxx = g.mul(jump, g.mul(t0, dphi0));
      const NodeId pyy = g.mul(jump, g.mul(t1, dphi1));
      const NodeId pxy = g.scale(
          g.mul(jump, g.add(g.mul(t0, dphi1), g.mul(t1, dphi0))), 0.5);
      const NodeId dn = g.add(g.mul(dphi0, ca), g.mul(dphi1, sa));
      NodeId p = g.mul(g.abs(jump), g.abs(dn));
      if (p_form_ == PForm::kTensorNorm) p = g.scale(p, 1.0 / std::sqrt(2.0));
      const double lam = m_.lame_lambda();
      const double mu = m_.lame_mu();
      const NodeId tr = g.add(exx, eyy);
      const NodeId sxx = g.add(g.scale(tr, lam), g.scale(exx, 2.0 * mu));
      const NodeId syy = g.add(g.scale(tr, lam), g.scale(eyy, 2.0 * mu));
      const NodeId sxy = g.scale(exy, 2.0 * mu);
      const NodeId etot_xx = g.add(exx, pxx);
      const NodeId etot_yy = g.add(eyy, pyy);
      const NodeId etot_xy = g.add(exy, pxy);
      outs = {f.u_total[0], f.u_total[1], etot_xx, etot_yy, etot_xy,
              pxx, pyy, pxy, p, sxx, syy, sxy};
    }
    gp_->be_fields = std::make_unique<ad::BatchEvaluator>(
        g, outs.front(), std::vector<NodeId>{});
  }

  if (backend_ == Backend::kFastShear)
    gp_->fast = std::make_unique<ShearFastKernel>(
        model_, m_, q_,
        p_form_ == PForm::kTensorNorm ? 1.0 / std::sqrt(2.0) : 1.0);
}

EnergyModel::~EnergyModel() = default;
EnergyModel::EnergyModel(EnergyModel&&) noexcept = default;

LossGrad EnergyModel::energy_with_grad(std::span<const double> params,
                                       bool with_grad) const {
  ad::BatchEvaluator::Result r;
  if (backend_ == Backend::kFastShear) {
    r = gp_->fast->accumulate(params, with_grad);
  } else {
    r = gp_->be_density->accumulate(params, q_.points, q_.weights, with_grad);
  }
  LossGrad out;
  out.energy = r.weighted_sum;
  out.loss = r.weighted_sum;
  out.grad = std::move(r.dparams);
  out.breakdown.elastic = r.tracked_sums[0];
  out.breakdown.plastic_quadratic = r.tracked_sums[1];
  out.breakdown.plastic_linear = r.tracked_sums[2];
  out.breakdown.total = r.weighted_sum;
  if (!std::isfinite(out.energy))
    throw NumericsError("energy assembly produced a non-finite total");
  return out;
}

LossGrad EnergyModel::bc_with_grad(std::span<const double> params,
                                   bool with_grad) const {
  auto r = gp_->be_bc->accumulate(params, q_.bc_rows, gp_->bc_weights,
                                  with_grad);
  LossGrad out;
  out.bc_loss = r.weighted_sum;
  out.loss = r.weighted_sum;
  out.grad = std::move(r.dparams);
  return out;
}

EnergyBreakdown EnergyModel::assemble(std::span<const double> params) const {
  auto e = energy_with_grad(params, false);
  e.breakdown.bc_loss = boundary_loss(params);
  return e.breakdown;
}

double EnergyModel::boundary_loss(std::span<const double> params) const {
  return bc_with_grad(params, false).bc_loss;
}

LossGrad EnergyModel::gated_loss(std::span<const double> params, double lambda,
                                 bool abs_guard, bool with_grad) const {
  if (!(lambda > 0.0)) throw ConfigError("gated_loss: lambda must be positive");
  LossGrad bc = bc_with_grad(params, with_grad);
  if (bc.bc_loss > lambda) {
    bc.gate_open = false;
    return bc;
  }
  LossGrad en = energy_with_grad(params, with_grad);
  LossGrad out;
  out.gate_open = true;
  out.bc_loss = bc.bc_loss;
  out.energy = en.energy;
  out.breakdown = en.breakdown;
  out.breakdown.bc_loss = bc.bc_loss;
  const double s = (abs_guard && en.energy < 0.0) ? -1.0 : 1.0;
  out.loss = s * en.energy + bc.bc_loss;
  if (with_grad) {
    out.grad = std::move(en.grad);
    for (std::size_t i = 0; i < out.grad.size(); ++i)
      out.grad[i] = s * out.grad[i] + bc.grad[i];
  }
  return out;
}

LossGrad EnergyModel::weighted_loss(std::span<const double> params,
                                    double bc_weight, bool abs_guard,
                                    bool with_grad) const {
  LossGrad bc = bc_with_grad(params, with_grad);
  LossGrad en = energy_with_grad(params, with_grad);
  LossGrad out;
  out.gate_open = true;
  out.bc_loss = bc.bc_loss;
  out.energy = en.energy;
  out.breakdown = en.breakdown;
  out.breakdown.bc_loss = bc.bc_loss;
  const double s = (abs_guard && en.energy < 0.0) ? -1.0 : 1.0;
  out.loss = s * en.energy + bc_weight * bc.bc_loss;
  if (with_grad) {
    out.grad = std::move(en.grad);
    for (std::size_t i = 0; i < out.grad.size(); ++i)
      out.grad[i] = s * out.grad[i] + bc_weight * bc.grad[i];
  }
  return out;
}

EnergyModel::PlasticMeasures EnergyModel::plastic_measures(
    std::span<const double> params, std::span<const double> x) const {
  BandGeometry g = model_.band();  // carries dim/c/beta
  if (model_.idx_alpha() >= 0)
    g.alpha = params[static_cast<std::size_t>(model_.idx_alpha())];
  g.y_p = params[static_cast<std::size_t>(model_.idx_yp())];
  g.jump = params[static_cast<std::size_t>(model_.idx_jump())];

  const auto grad_phi = band_activation_spatial_gradient(x, g);
  const auto t = g.tangent();
  PlasticMeasures pm;
  pm.eps_p.xx = g.jump * t[0] * grad_phi[0];
  pm.eps_p.yy = g.jump * t[1] * grad_phi[1];
  pm.eps_p.xy = 0.5 * g.jump * (t[0] * grad_phi[1] + t[1] * grad_phi[0]);
  const auto nrm = g.normal();
  const double gn =
      std::fabs(grad_phi[0] * nrm[0] + grad_phi[1] * nrm[1]);
  pm.p = std::fabs(g.jump) * gn;
  if (p_form_ == PForm::kTensorNorm && model_.dim() == 2)
    pm.p /= std::sqrt(2.0);
  return pm;
}

FieldSamples EnergyModel::postprocess(std::span<const double> params) const {
  FieldSamples s;
  const std::size_t n = q_.n_points();
  const auto& outs = gp_->field_outputs;
  Vector buf(n * outs.size());
  gp_->be_fields->sample(params, q_.points, outs, buf.data());

  auto col = [&](std::size_t c) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = buf[i * outs.size() + c];
    return v;
  };

  if (model_.dim() == 1) {
    s.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) s.x[i] = q_.points[i];
    s.u = col(0);
    s.eps_xx = col(1);
    s.eps_p_xx = col(2);
    s.p = col(3);
    s.sig_xx = col(4);
    s.force.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      s.force[i] = s.sig_xx[i] * q_.bar_geo.area(s.x[i]);

    // Element-midpoint force: stress of a piecewise-linear field is
    // elementwise constant and superconvergent at midpoints.
    const auto& knots = model_.knots();
    Vector mids;
    for (std::size_t e = 0; e + 1 < knots.size(); ++e)
      mids.push_back(0.5 * (knots[e] + knots[e + 1]));
    Vector mbuf(mids.size() * outs.size());
    gp_->be_fields->sample(params, mids, outs, mbuf.data());
    s.mid_x = mids;
    s.mid_force.resize(mids.size());
    for (std::size_t i = 0; i < mids.size(); ++i)
      s.mid_force[i] = mbuf[i * outs.size() + 4] * q_.bar_geo.area(mids[i]);
    return s;
  }

  s.x.resize(n);
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.x[i] = q_.points[2 * i];
    s.y[i] = q_.points[2 * i + 1];
  }
  s.u = col(0);
  s.v = col(1);
  s.eps_xx = col(2);
  s.eps_yy = col(3);
  s.eps_xy = col(4);
  s.eps_p_xx = col(5);
  s.eps_p_yy = col(6);
  s.eps_p_xy = col(7);
  s.p = col(8);
  s.sig_xx = col(9);
  s.sig_yy = col(10);
  s.sig_xy = col(11);
  return s;
}

}  // namespace locband
