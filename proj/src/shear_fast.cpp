#include "locband/shear_fast.hpp"

#include <cmath>
#include <cstring>

#include "locband/energy.hpp"

namespace locband {

namespace {

inline double stable_logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double signum(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

ShearFastKernel::ShearFastKernel(const FieldModel& model,
                                 const MaterialSpec& m,
                                 const CollocationSet& q, double p_scale)
    : widths_(model.widths()),
      idx_alpha_(model.idx_alpha()),
      idx_yp_(model.idx_yp()),
      idx_jump_(model.idx_jump()),
      lam_(m.lame_lambda()),
      mu_(m.lame_mu()),
      H_(m.softening_H()),
      c_(model.band().c),
      beta_(model.band().beta),
      p_scale_(p_scale),
      profile_(m.sigma_p_profile),
      sigma_p_uniform_(m.sigma_p),
      points_(q.points),
      weights_(q.weights) {
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    layer_offset_.push_back(off);
    off += static_cast<std::size_t>(widths_[l + 1]) *
               static_cast<std::size_t>(widths_[l]) +
           static_cast<std::size_t>(widths_[l + 1]);
  }
  for (std::size_t l = 0; l < widths_.size(); ++l) {
    act_.emplace_back(static_cast<std::size_t>(widths_[l]) * 3 * kChunk);
    adj_.emplace_back(static_cast<std::size_t>(widths_[l]) * 3 * kChunk);
  }
}

ad::BatchEvaluator::Result ShearFastKernel::accumulate(
    std::span<const double> params, bool with_grad) const {
  const std::size_t n = weights_.size();
  const int n_params = static_cast<int>(params.size());
  ad::BatchEvaluator::Result r;
  r.tracked_sums.assign(3, 0.0);
  if (with_grad) r.dparams.assign(static_cast<std::size_t>(n_params), 0.0);

  const double alpha = params[static_cast<std::size_t>(idx_alpha_)];
  const double yp = params[static_cast<std::size_t>(idx_yp_)];
  const double gam = params[static_cast<std::size_t>(idx_jump_)];
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const std::size_t n_layers = widths_.size() - 1;  // linear layers
  const int K = kChunk;

  double j_adj[4][kChunk];  // seeds for j00, j01, j10, j11

  for (std::size_t start = 0; start < n; start += kChunk) {
    const int lanes = static_cast<int>(std::min<std::size_t>(kChunk, n - start));

    // input layer: (x, 1, 0) and (y, 0, 1)
    {
      double* a = act_[0].data();
      for (int ln = 0; ln < lanes; ++ln) {
        a[0 * K + ln] = points_[2 * (start + ln)];
        a[1 * K + ln] = 1.0;
        a[2 * K + ln] = 0.0;
        a[3 * K + ln] = points_[2 * (start + ln) + 1];
        a[4 * K + ln] = 0.0;
        a[5 * K + ln] = 1.0;
      }
    }

    for (std::size_t l = 0; l < n_layers; ++l) {
      const int fi = widths_[l], fo = widths_[l + 1];
      const bool hidden = l + 1 < n_layers;
      const double* a = act_[l].data();
      double* o = act_[l + 1].data();
      const double* w = params.data() + layer_offset_[l];
      for (int no = 0; no < fo; ++no) {
        double* s0 = o + (no * 3 + 0) * K;
        double* s1 = o + (no * 3 + 1) * K;
        double* s2 = o + (no * 3 + 2) * K;
        const double b = w[fo * fi + no];
        for (int ln = 0; ln < lanes; ++ln) {
          s0[ln] = b;
          s1[ln] = 0.0;
          s2[ln] = 0.0;
        }
        for (int ni = 0; ni < fi; ++ni) {
          const double wv = w[no * fi + ni];
          const double* a0 = a + (ni * 3 + 0) * K;
          const double* a1 = a + (ni * 3 + 1) * K;
          const double* a2 = a + (ni * 3 + 2) * K;
          for (int ln = 0; ln < lanes; ++ln) {
            s0[ln] += wv * a0[ln];
            s1[ln] += wv * a1[ln];
            s2[ln] += wv * a2[ln];
          }
        }
        if (hidden) {
          for (int ln = 0; ln < lanes; ++ln) {
            const double g = s0[ln] > 0.0 ? 1.0 : 0.0;
            s0[ln] *= g;
            s1[ln] *= g;
            s2[ln] *= g;
          }
        }
      }
    }

    // per-lane density and adjoint seeds
    double el_sum = 0.0, pq_sum = 0.0, pl_sum = 0.0;
    double d_alpha = 0.0, d_yp = 0.0, d_gam = 0.0;
    const double* out = act_[n_layers].data();
    for (int ln = 0; ln < lanes; ++ln) {
      const double x = points_[2 * (start + ln)];
      const double y = points_[2 * (start + ln) + 1];
      const double w = weights_[start + ln];
      const double j00 = out[1 * K + ln], j01 = out[2 * K + ln];
      const double j10 = out[4 * K + ln], j11 = out[5 * K + ln];
      const double exx = j00, eyy = j11, exy = 0.5 * (j01 + j10);
      const double tr = exx + eyy;
      const double psi = 0.5 * lam_ * tr * tr +
                         mu_ * (exx * exx + eyy * eyy + 2.0 * exy * exy);
      const double z = (x * ca + y * sa - yp) / c_;
      const double sp1 = stable_logistic(beta_ * (z + 0.5));
      const double sp0 = stable_logistic(beta_ * (z - 0.5));
      const double dn = (sp1 - sp0) / c_;
      const double p = p_scale_ * std::fabs(gam) * std::fabs(dn);
      const double sp_y = profile_ == SigmaPProfile::kParabolicY
                              ? 0.75 + 0.25 * (2.0 * y - 1.0) * (2.0 * y - 1.0)
                              : sigma_p_uniform_;
      const double pq = 0.5 * H_ * p * p;
      const double pl = sp_y * p;
      if (!std::isfinite(psi + pq + pl))
        throw NumericsError("fast kernel produced a non-finite density");
      el_sum += w * psi;
      pq_sum += w * pq;
      pl_sum += w * pl;

      if (!with_grad) continue;
      j_adj[0][ln] = w * (lam_ * tr + 2.0 * mu_ * exx);
      j_adj[3][ln] = w * (lam_ * tr + 2.0 * mu_ * eyy);
      j_adj[1][ln] = w * 2.0 * mu_ * exy;
      j_adj[2][ln] = j_adj[1][ln];
      const double p_hat = w * (H_ * p + sp_y);
      d_gam += p_hat * p_scale_ * signum(gam) * std::fabs(dn);
      const double dn_hat = p_hat * p_scale_ * std::fabs(gam) * signum(dn);
      const double z_hat = dn_hat * beta_ *
                           (sp1 * (1.0 - sp1) - sp0 * (1.0 - sp0)) / c_;
      d_yp += -z_hat / c_;
      d_alpha += z_hat * (-x * sa + y * ca) / c_;
    }
    r.tracked_sums[0] += el_sum;
    r.tracked_sums[1] += pq_sum;
    r.tracked_sums[2] += pl_sum;

    if (!with_grad) continue;
    r.dparams[static_cast<std::size_t>(idx_alpha_)] += d_alpha;
    r.dparams[static_cast<std::size_t>(idx_yp_)] += d_yp;
    r.dparams[static_cast<std::size_t>(idx_jump_)] += d_gam;

    // reverse sweep through the perceptron
    {
      double* aj = adj_[n_layers].data();
      std::memset(aj, 0, adj_[n_layers].size() * sizeof(double));
      for (int ln = 0; ln < lanes; ++ln) {
        aj[1 * K + ln] = j_adj[0][ln];
        aj[2 * K + ln] = j_adj[1][ln];
        aj[4 * K + ln] = j_adj[2][ln];
        aj[5 * K + ln] = j_adj[3][ln];
      }
    }
    for (std::size_t l = n_layers; l-- > 0;) {
      const int fi = widths_[l], fo = widths_[l + 1];
      const bool hidden = l + 1 < n_layers;
      const double* a = act_[l].data();
      const double* o = act_[l + 1].data();
      double* oj = adj_[l + 1].data();
      double* ajp = adj_[l].data();
      const double* w = params.data() + layer_offset_[l];
      double* dw = r.dparams.data() + layer_offset_[l];
      if (hidden) {
        // gate the post-activation adjoints back to pre-activations
        for (int no = 0; no < fo; ++no)
          for (int ch = 0; ch < 3; ++ch) {
            double* c = oj + (no * 3 + ch) * K;
            const double* v = o + (no * 3 + 0) * K;
            for (int ln = 0; ln < lanes; ++ln)
              if (!(v[ln] > 0.0)) c[ln] = 0.0;
          }
      }
      for (int no = 0; no < fo; ++no) {
        const double* s0 = oj + (no * 3 + 0) * K;
        const double* s1 = oj + (no * 3 + 1) * K;
        const double* s2 = oj + (no * 3 + 2) * K;
        double db = 0.0;
        for (int ln = 0; ln < lanes; ++ln) db += s0[ln];
        dw[fo * fi + no] += db;
        for (int ni = 0; ni < fi; ++ni) {
          const double* a0 = a + (ni * 3 + 0) * K;
          const double* a1 = a + (ni * 3 + 1) * K;
          const double* a2 = a + (ni * 3 + 2) * K;
          double dwv = 0.0;
          for (int ln = 0; ln < lanes; ++ln)
            dwv += s0[ln] * a0[ln] + s1[ln] * a1[ln] + s2[ln] * a2[ln];
          dw[no * fi + ni] += dwv;
        }
      }
      if (l == 0) continue;
      std::memset(ajp, 0, adj_[l].size() * sizeof(double));
      for (int no = 0; no < fo; ++no) {
        const double* s0 = oj + (no * 3 + 0) * K;
        const double* s1 = oj + (no * 3 + 1) * K;
        const double* s2 = oj + (no * 3 + 2) * K;
        for (int ni = 0; ni < fi; ++ni) {
          const double wv = w[no * fi + ni];
          double* p0 = ajp + (ni * 3 + 0) * K;
          double* p1 = ajp + (ni * 3 + 1) * K;
          double* p2 = ajp + (ni * 3 + 2) * K;
          for (int ln = 0; ln < lanes; ++ln) {
            p0[ln] += wv * s0[ln];
            p1[ln] += wv * s1[ln];
            p2[ln] += wv * s2[ln];
          }
        }
      }
    }
  }

  r.weighted_sum = r.tracked_sums[0] + r.tracked_sums[1] + r.tracked_sums[2];
  return r;
}

}  // namespace locband
