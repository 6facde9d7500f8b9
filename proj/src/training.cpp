#include "vgraph/training.hpp"

#include <cmath>

#include "vgraph/detail/engine.hpp"

namespace vgraph {

using detail::DecoderCache;
using detail::DenseSink;
using detail::LossAccum;
using detail::PairBuffers;

namespace {
const double kLogProbFloor = std::log(kProbFloor);
}

void TrainConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (lr0 <= 0.0) throw std::invalid_argument("config: lr0 must be > 0");
  if (decay <= 0.0 || decay > 1.0)
    throw std::invalid_argument("config: decay must be in (0, 1]");
  if (decay_every < 1)
    throw std::invalid_argument("config: decay_every must be >= 1");
  if (iters < 0) throw std::invalid_argument("config: iters must be >= 0");
  if (batch_pairs < 0)
    throw std::invalid_argument("config: batch_pairs must be >= 0");
  if (negatives < 0)
    throw std::invalid_argument("config: negatives must be >= 0");
  if (tau <= 0.0) throw std::invalid_argument("config: tau must be > 0");
  if (eval_every < 1)
    throw std::invalid_argument("config: eval_every must be >= 1");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (tree.empty()) {
    if (communities < 1)
      throw std::invalid_argument("config: communities must be >= 1");
  } else {
    for (int f : tree)
      if (f < 1) throw std::invalid_argument("config: tree factors must be >= 1");
    if (communities != 0 && communities != leaf_count())
      throw std::invalid_argument(
          "config: communities conflicts with tree leaf count");
    if (smoothness == SmoothnessSource::Membership)
      throw std::invalid_argument(
          "config: membership smoothness is not supported with a tree");
  }
}

bool TrainConfig::use_full_softmax(int node_count) const {
  switch (decoder) {
    case DecoderMode::FullSoftmax:
      return true;
    case DecoderMode::NegativeSampling:
      return false;
    default:
      return node_count <= full_softmax_limit;
  }
}

int TrainConfig::leaf_count() const {
  if (tree.empty()) return communities;
  int l = 1;
  for (int f : tree) l *= f;
  return l;
}

double lr_at(long iteration, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.decay, iteration / cfg.decay_every);
}

double kl_categorical(std::span<const double> q, std::span<const double> p) {
  double kl = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] <= 0.0) continue;  // 0 log 0 = 0
    kl += q[k] * (std::log(q[k]) - std::log(std::max(p[k], kProbFloor)));
  }
  return kl;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               double lr) {
  if (!params.phi.same_shape(grads.phi) ||
      !params.varphi.same_shape(grads.varphi) ||
      !params.psi.same_shape(grads.psi))
    throw std::invalid_argument("adam_step: shape mismatch");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.config.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.config.beta2, state.step);
  auto apply = [&](Matrix& p, const Matrix& g, Matrix& m, Matrix& v) {
    for (std::size_t r = 0; r < p.rows(); ++r)
      detail::adam_row(p.row(r), g.row(r), m.row(r), v.row(r), state.config,
                       lr, bc1, bc2);
  };
  apply(params.phi, grads.phi, state.m_phi, state.v_phi);
  apply(params.varphi, grads.varphi, state.m_varphi, state.v_varphi);
  apply(params.psi, grads.psi, state.m_psi, state.v_psi);
}

std::vector<OrderedPair> all_ordered_pairs(const Graph& g) {
  std::vector<OrderedPair> out;
  out.reserve(2 * g.edges.size());
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    const auto [u, v] = g.edges[e];
    out.push_back({u, v, e});
    out.push_back({v, u, e});
  }
  return out;
}

double smoothness_penalty(const ModelParams& p, const Graph& g,
                          std::span<const OrderedPair> batch, double lambda) {
  if (lambda == 0.0) return 0.0;
  double sum = 0.0;
  for (const OrderedPair& pr : batch) {
    const double alpha = jaccard_coefficient(g, pr.w, pr.c);
    if (alpha == 0.0) continue;
    const MembershipVector a = prior_distribution(p, pr.w);
    const MembershipVector b = prior_distribution(p, pr.c);
    double sq = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double diff = b[k] - a[k];
      sq += diff * diff;
    }
    sum += alpha * sq;
  }
  return lambda * sum;
}

ElboTerms elbo_terms(const ModelParams& p, int w, int c,
                     const GumbelSample& sample) {
  const int v = p.node_count();
  const auto psi_j = p.psi.row(sample.hard);
  std::vector<double> logits(v);
  for (int r = 0; r < v; ++r) logits[r] = dot(psi_j, p.varphi.row(r));
  const double recon = logits[c] - logsumexp(logits);
  const MembershipVector q = posterior_distribution(p, w, c);
  const MembershipVector prior = prior_distribution(p, w);
  return {recon, kl_categorical(q, prior)};
}

ElboTerms elbo_terms(const ModelParams& p, int w, int c,
                     const GumbelSample& sample,
                     std::span<const int> negatives) {
  const double recon =
      negative_sampling_objective(p, c, sample.hard, negatives);
  const MembershipVector q = posterior_distribution(p, w, c);
  const MembershipVector prior = prior_distribution(p, w);
  return {recon, kl_categorical(q, prior)};
}

namespace {

// Per-pair forward/backward for the flat model. The loss per ordered pair
// (w, c) is
//     -log p(c|z) + KL(q(.|w,c) || p(.|w)) + lambda * alpha * |p_c - p_w|^2
// with z sampled by straight-through Gumbel-Softmax from q. Gradients are
// hand-derived:
//   d KL / d b_j = q_j (u_j - KL),       u_j = log q_j - log clamp(p_j)
//   d KL / d a_j = p_j - q_j             (away from the clamp)
//   d R / d b    = eta / tau,            eta_j = y_j (v_j - sum_k y_k v_k),
//                                        v_j = psi_j . dR/ds
// where s is the decoder-side community embedding (hard row forward,
// relaxed mixture backward).
class FlatEngine {
 public:
  FlatEngine(const Graph& g, const TrainConfig& cfg, int communities, int dim)
      : g_(g),
        cfg_(cfg),
        k_(communities),
        d_(dim),
        full_(cfg.use_full_softmax(g.node_count)) {
    buf_.size_for(k_, d_);
  }

  int psi_rows() const { return k_; }
  int gumbels_per_pair() const { return k_; }
  bool full_softmax() const { return full_; }
  const DecoderCache* cache() const { return &cache_; }

  void begin_iteration(const ModelParams& p, bool need_grads) {
    if (full_) cache_.build(p, 0, k_, need_grads);
  }

  void begin_eval(const ModelParams& p) {
    if (full_) cache_.build(p, 0, k_, false);
  }

  template <typename Sink>
  void accumulate(const ModelParams& p, const OrderedPair& pr, double alpha,
                  std::span<const double> gnoise, std::span<const int> negs,
                  double wpair, ForwardMode mode, TermMask mask,
                  LossAccum& acc, Sink* sink) {
    const int k = k_, d = d_;
    const int w = pr.w, c = pr.c;
    auto& b = buf_;
    const auto phi_w = p.phi.row(w);
    const auto phi_c = p.phi.row(c);

    for (int i = 0; i < d; ++i) b.h[i] = phi_w[i] * phi_c[i];
    for (int j = 0; j < k; ++j) b.lq[j] = dot(b.h, p.psi.row(j));
    log_softmax_inplace(b.lq);
    for (int j = 0; j < k; ++j) b.q[j] = std::exp(b.lq[j]);

    for (int j = 0; j < k; ++j) b.lp[j] = dot(phi_w, p.psi.row(j));
    log_softmax_inplace(b.lp);
    for (int j = 0; j < k; ++j) b.pw[j] = std::exp(b.lp[j]);

    double kl = 0.0;
    if (mask.kl) {
      for (int j = 0; j < k; ++j) {
        b.u[j] = b.lq[j] - std::max(b.lp[j], kLogProbFloor);
        kl += b.q[j] * b.u[j];
      }
      acc.kl += wpair * kl;
    }

    if (sink) {
      std::fill(b.bgrad.begin(), b.bgrad.end(), 0.0);
      std::fill(b.agrad.begin(), b.agrad.end(), 0.0);
    }
    bool reg_grads = false;

    if (mask.recon) {
      const double tau = p.tau;
      const double w_r = -wpair;  // d(loss)/dR
      for (int j = 0; j < k; ++j)
        b.y[j] = (std::max(b.lq[j], kLogProbFloor) + gnoise[j]) / tau;
      softmax_inplace(b.y);
      const int hard = argmax(b.y);

      std::span<const double> s;
      if (mode == ForwardMode::StraightThrough) {
        s = p.psi.row(hard);
      } else {
        std::fill(b.mix.begin(), b.mix.end(), 0.0);
        for (int j = 0; j < k; ++j) axpy(b.y[j], p.psi.row(j), b.mix);
        s = b.mix;
      }

      double recon;
      if (full_) {
        if (mode == ForwardMode::StraightThrough) {
          recon = dot(s, p.varphi.row(c)) - cache_.logZ[hard];
          if (sink) {
            const auto mu = cache_.mu.row(hard);
            const auto vc = p.varphi.row(c);
            for (int i = 0; i < d; ++i) b.gs[i] = vc[i] - mu[i];
            sink->varphi_coeff(c, hard, w_r);
            sink->add_spread(hard, wpair);
          }
        } else {
          // slow exact path on the relaxed mixture (verification only)
          const int v = g_.node_count;
          vbuf_.resize(v);
          for (int r = 0; r < v; ++r) vbuf_[r] = dot(s, p.varphi.row(r));
          const double lse = logsumexp(vbuf_);
          recon = vbuf_[c] - lse;
          if (sink) {
            std::fill(b.gs.begin(), b.gs.end(), 0.0);
            for (int r = 0; r < v; ++r) {
              const double prob = std::exp(vbuf_[r] - lse);
              axpy(-prob, p.varphi.row(r), b.gs);
              axpy(-w_r * prob, s, sink->varphi_row(r));
            }
            axpy(1.0, p.varphi.row(c), b.gs);
            axpy(w_r, s, sink->varphi_row(c));
          }
        }
      } else {
        const double tpos = dot(s, p.varphi.row(c));
        recon = log_sigmoid(tpos);
        if (sink) {
          std::fill(b.gs.begin(), b.gs.end(), 0.0);
          const double spos = sigmoid(-tpos);
          axpy(spos, p.varphi.row(c), b.gs);
          if (mode == ForwardMode::StraightThrough)
            sink->varphi_coeff(c, hard, w_r * spos);
          else
            axpy(w_r * spos, s, sink->varphi_row(c));
        }
        for (int vneg : negs) {
          const double tneg = dot(s, p.varphi.row(vneg));
          recon += log_sigmoid(-tneg);
          if (sink) {
            const double sneg = sigmoid(tneg);
            axpy(-sneg, p.varphi.row(vneg), b.gs);
            if (mode == ForwardMode::StraightThrough)
              sink->varphi_coeff(vneg, hard, -w_r * sneg);
            else
              axpy(-w_r * sneg, s, sink->varphi_row(vneg));
          }
        }
      }
      acc.recon += wpair * recon;

      if (sink) {
        if (mode == ForwardMode::StraightThrough) {
          axpy(w_r, b.gs, sink->psi_row(hard));
        } else {
          for (int j = 0; j < k; ++j)
            axpy(w_r * b.y[j], b.gs, sink->psi_row(j));
        }
        for (int j = 0; j < k; ++j) b.vks[j] = dot(p.psi.row(j), b.gs);
        double ybar = 0.0;
        for (int j = 0; j < k; ++j) ybar += b.y[j] * b.vks[j];
        double etasum = 0.0;
        for (int j = 0; j < k; ++j) {
          const double eta = b.lq[j] > kLogProbFloor
                                 ? b.y[j] * (b.vks[j] - ybar) / tau
                                 : 0.0;
          b.vks[j] = eta;
          etasum += eta;
        }
        for (int j = 0; j < k; ++j)
          b.bgrad[j] += w_r * (b.vks[j] - b.q[j] * etasum);
      }
    }

    if (mask.kl && sink) {
      for (int j = 0; j < k; ++j)
        b.bgrad[j] += wpair * (b.q[j] * b.u[j] - b.q[j] * kl);
      double qmass = 0.0;
      for (int j = 0; j < k; ++j)
        if (b.lp[j] > kLogProbFloor) qmass += b.q[j];
      for (int j = 0; j < k; ++j) {
        const double direct = b.lp[j] > kLogProbFloor ? b.q[j] : 0.0;
        b.agrad[j] += wpair * (b.pw[j] * qmass - direct);
      }
    }

    if (mask.reg && cfg_.lambda > 0.0 && alpha != 0.0) {
      if (cfg_.smoothness == SmoothnessSource::Prior) {
        for (int j = 0; j < k; ++j) b.pc[j] = dot(phi_c, p.psi.row(j));
        log_softmax_inplace(b.pc);
        for (int j = 0; j < k; ++j) b.pc[j] = std::exp(b.pc[j]);
        double sq = 0.0;
        for (int j = 0; j < k; ++j) {
          const double diff = b.pc[j] - b.pw[j];
          sq += diff * diff;
        }
        acc.reg += wpair * cfg_.lambda * alpha * sq;
        if (sink) {
          reg_grads = true;
          const double w2 = wpair * cfg_.lambda * alpha * 2.0;
          double dot_c = 0.0, dot_w = 0.0;
          for (int j = 0; j < k; ++j) {
            const double gdiff = w2 * (b.pc[j] - b.pw[j]);
            b.apgrad[j] = gdiff;  // d reg / d pc_j; gpw_j = -gdiff
            dot_c += b.pc[j] * gdiff;
            dot_w += b.pw[j] * -gdiff;
          }
          for (int j = 0; j < k; ++j) {
            b.agrad[j] += b.pw[j] * -b.apgrad[j] - b.pw[j] * dot_w;
            b.apgrad[j] = b.pc[j] * b.apgrad[j] - b.pc[j] * dot_c;
          }
        }
      } else {
        membership_smoothness(p, w, c, alpha, wpair, acc, sink);
      }
    }

    if (sink) {
      std::fill(b.acc.begin(), b.acc.end(), 0.0);
      for (int j = 0; j < k; ++j)
        if (b.bgrad[j] != 0.0) axpy(b.bgrad[j], p.psi.row(j), b.acc);
      std::fill(b.acc2.begin(), b.acc2.end(), 0.0);
      for (int j = 0; j < k; ++j)
        if (b.agrad[j] != 0.0) axpy(b.agrad[j], p.psi.row(j), b.acc2);

      auto gw = sink->phi_row(w);
      for (int i = 0; i < d; ++i)
        gw[i] += phi_c[i] * b.acc[i] + b.acc2[i];
      auto gc = sink->phi_row(c);
      for (int i = 0; i < d; ++i) gc[i] += phi_w[i] * b.acc[i];
      if (reg_grads) {
        std::fill(b.acc2.begin(), b.acc2.end(), 0.0);
        for (int j = 0; j < k; ++j)
          if (b.apgrad[j] != 0.0) axpy(b.apgrad[j], p.psi.row(j), b.acc2);
        for (int i = 0; i < d; ++i) gc[i] += b.acc2[i];
      }

      for (int j = 0; j < k; ++j) {
        auto pj = sink->psi_row(j);
        const double bg = b.bgrad[j];
        const double ag = b.agrad[j];
        if (bg != 0.0 || ag != 0.0)
          for (int i = 0; i < d; ++i)
            pj[i] += bg * b.h[i] + ag * phi_w[i];
        if (reg_grads && b.apgrad[j] != 0.0)
          axpy(b.apgrad[j], phi_c, pj);
      }
    }
  }

  void eval_pair(const ModelParams& p, const OrderedPair& pr, double alpha,
                 std::span<const int> negs, double wpair, LossAccum& acc) {
    const int k = k_, d = d_;
    const int w = pr.w, c = pr.c;
    auto& b = buf_;
    const auto phi_w = p.phi.row(w);
    const auto phi_c = p.phi.row(c);

    for (int i = 0; i < d; ++i) b.h[i] = phi_w[i] * phi_c[i];
    for (int j = 0; j < k; ++j) b.lq[j] = dot(b.h, p.psi.row(j));
    log_softmax_inplace(b.lq);
    for (int j = 0; j < k; ++j) b.q[j] = std::exp(b.lq[j]);
    for (int j = 0; j < k; ++j) b.lp[j] = dot(phi_w, p.psi.row(j));
    log_softmax_inplace(b.lp);

    double kl = 0.0;
    for (int j = 0; j < k; ++j)
      kl += b.q[j] * (b.lq[j] - std::max(b.lp[j], kLogProbFloor));
    acc.kl += wpair * kl;

    // Exact expectation over z of the reconstruction term.
    double recon = 0.0;
    if (full_) {
      for (int j = 0; j < k; ++j)
        recon +=
            b.q[j] * (dot(p.psi.row(j), p.varphi.row(c)) - cache_.logZ[j]);
    } else {
      for (int j = 0; j < k; ++j) {
        const auto psi_j = p.psi.row(j);
        double nsj = log_sigmoid(dot(psi_j, p.varphi.row(c)));
        for (int vneg : negs)
          nsj += log_sigmoid(-dot(psi_j, p.varphi.row(vneg)));
        recon += b.q[j] * nsj;
      }
    }
    acc.recon += wpair * recon;

    if (cfg_.lambda > 0.0 && alpha != 0.0) {
      if (cfg_.smoothness == SmoothnessSource::Prior) {
        for (int j = 0; j < k; ++j) b.pw[j] = std::exp(b.lp[j]);
        for (int j = 0; j < k; ++j) b.pc[j] = dot(phi_c, p.psi.row(j));
        log_softmax_inplace(b.pc);
        for (int j = 0; j < k; ++j) b.pc[j] = std::exp(b.pc[j]);
        double sq = 0.0;
        for (int j = 0; j < k; ++j) {
          const double diff = b.pc[j] - b.pw[j];
          sq += diff * diff;
        }
        acc.reg += wpair * cfg_.lambda * alpha * sq;
      } else {
        membership_smoothness<DenseSink>(p, w, c, alpha, wpair, acc, nullptr);
      }
    }
  }

 private:
  // Regularizer variant comparing neighbor-aggregated memberships
  // (cfg.smoothness == Membership). Gradients reach the posteriors of
  // every incident edge of both endpoints.
  template <typename Sink>
  void membership_smoothness(const ModelParams& p, int w, int c, double alpha,
                             double wpair, LossAccum& acc, Sink* sink) {
    const int k = k_, d = d_;
    auto& b = buf_;
    auto membership = [&](int node, std::vector<double>& out) {
      std::fill(out.begin(), out.end(), 0.0);
      const auto nbrs = g_.neighbors(node);
      const auto phi_n = p.phi.row(node);
      for (int x : nbrs) {
        const auto phi_x = p.phi.row(x);
        for (int i = 0; i < d; ++i) b.hx[i] = phi_n[i] * phi_x[i];
        for (int j = 0; j < k; ++j) b.qx[j] = dot(b.hx, p.psi.row(j));
        softmax_inplace(b.qx);
        for (int j = 0; j < k; ++j) out[j] += b.qx[j];
      }
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (double& x : out) x *= inv;
    };
    if (g_.degree(w) == 0 || g_.degree(c) == 0) return;
    membership(w, b.mw);
    membership(c, b.mc);
    double sq = 0.0;
    for (int j = 0; j < k; ++j) {
      const double diff = b.mc[j] - b.mw[j];
      sq += diff * diff;
    }
    acc.reg += wpair * cfg_.lambda * alpha * sq;
    if (!sink) return;

    const double w2 = wpair * cfg_.lambda * alpha * 2.0;
    // side = +1 for c, -1 for w; pushes gradient through every posterior
    // q(.|node, x) that the membership average touches.
    auto side_grads = [&](int node, double sign) {
      const auto nbrs = g_.neighbors(node);
      const double inv = sign * w2 / static_cast<double>(nbrs.size());
      const auto phi_n = p.phi.row(node);
      for (int x : nbrs) {
        const auto phi_x = p.phi.row(x);
        for (int i = 0; i < d; ++i) b.hx[i] = phi_n[i] * phi_x[i];
        for (int j = 0; j < k; ++j) b.qx[j] = dot(b.hx, p.psi.row(j));
        softmax_inplace(b.qx);
        double dsum = 0.0;
        for (int j = 0; j < k; ++j)
          dsum += b.qx[j] * (b.mc[j] - b.mw[j]);
        for (int j = 0; j < k; ++j)
          b.lgx[j] = inv * b.qx[j] * ((b.mc[j] - b.mw[j]) - dsum);
        std::fill(b.acc2.begin(), b.acc2.end(), 0.0);
        for (int j = 0; j < k; ++j)
          if (b.lgx[j] != 0.0) axpy(b.lgx[j], p.psi.row(j), b.acc2);
        auto gn = sink->phi_row(node);
        for (int i = 0; i < d; ++i) gn[i] += phi_x[i] * b.acc2[i];
        auto gx = sink->phi_row(x);
        for (int i = 0; i < d; ++i) gx[i] += phi_n[i] * b.acc2[i];
        for (int j = 0; j < k; ++j)
          if (b.lgx[j] != 0.0) {
            auto pj = sink->psi_row(j);
            for (int i = 0; i < d; ++i) pj[i] += b.lgx[j] * b.hx[i];
          }
      }
    };
    side_grads(c, +1.0);
    side_grads(w, -1.0);
  }

  const Graph& g_;
  TrainConfig cfg_;
  int k_, d_;
  bool full_;
  DecoderCache cache_;
  PairBuffers buf_;
  std::vector<double> vbuf_;
};

FixedDraws draw_for_batch(const Graph& g, const TrainConfig& cfg,
                          std::size_t batch_size, int k, bool full,
                          Rng& rng) {
  FixedDraws draws;
  draws.gumbel.resize(batch_size * k);
  const int m = full ? 0 : cfg.negatives;
  draws.negatives.resize(batch_size * m);
  std::unique_ptr<NoiseDistribution> noise;
  if (m > 0) noise = std::make_unique<NoiseDistribution>(g);
  for (std::size_t i = 0; i < batch_size; ++i) {
    for (int j = 0; j < k; ++j) draws.gumbel[i * k + j] = rng.gumbel();
    for (int j = 0; j < m; ++j)
      draws.negatives[i * m + j] = noise->sample(rng);
  }
  return draws;
}

}  // namespace

LossBreakdown loss_with_draws(const ModelParams& p, const Graph& g,
                              std::span<const OrderedPair> batch,
                              const TrainConfig& cfg, const FixedDraws& draws,
                              ForwardMode mode, TermMask mask,
                              Gradients* grads) {
  if (batch.empty())
    throw std::invalid_argument("loss_with_draws: batch must be nonempty");
  const int k = p.community_count();
  const int d = p.dim();
  FlatEngine eng(g, cfg, k, d);
  const bool full = eng.full_softmax();
  if (draws.gumbel.size() != batch.size() * static_cast<std::size_t>(k))
    throw std::invalid_argument("loss_with_draws: gumbel draw size mismatch");
  const int m = full ? 0 : cfg.negatives;
  if (!full &&
      draws.negatives.size() != batch.size() * static_cast<std::size_t>(m))
    throw std::invalid_argument("loss_with_draws: negative draw size mismatch");

  const bool st = mode == ForwardMode::StraightThrough;
  if (full && st && mask.recon) eng.begin_iteration(p, grads != nullptr);
  DenseSink sink(grads, p.psi);
  DenseSink* sp = grads ? &sink : nullptr;
  LossAccum acc;
  const double wpair = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const OrderedPair& pr = batch[i];
    const double alpha = (mask.reg && cfg.lambda > 0.0)
                             ? jaccard_coefficient(g, pr.w, pr.c)
                             : 0.0;
    eng.accumulate(p, pr, alpha,
                   std::span<const double>(&draws.gumbel[i * k], k),
                   std::span<const int>(draws.negatives.data() + i * m, m),
                   wpair, mode, mask, acc, sp);
  }
  if (grads && full && st && mask.recon) sink.apply_spread(*eng.cache());
  return acc.breakdown();
}

LossBreakdown total_loss(const ModelParams& p, const Graph& g,
                         std::span<const OrderedPair> batch,
                         const TrainConfig& cfg, Rng& rng) {
  if (batch.empty())
    throw std::invalid_argument("total_loss: batch must be nonempty");
  const bool full = cfg.use_full_softmax(g.node_count);
  FixedDraws draws =
      draw_for_batch(g, cfg, batch.size(), p.community_count(), full, rng);
  return loss_with_draws(p, g, batch, cfg, draws,
                         ForwardMode::StraightThrough, TermMask{}, nullptr);
}

Gradients compute_gradients(const ModelParams& p, const Graph& g,
                            std::span<const OrderedPair> batch,
                            const TrainConfig& cfg, Rng& rng) {
  if (batch.empty())
    throw std::invalid_argument("compute_gradients: batch must be nonempty");
  const bool full = cfg.use_full_softmax(g.node_count);
  FixedDraws draws =
      draw_for_batch(g, cfg, batch.size(), p.community_count(), full, rng);
  Gradients grads = Gradients::like(p);
  loss_with_draws(p, g, batch, cfg, draws, ForwardMode::StraightThrough,
                  TermMask{}, &grads);
  return grads;
}

TrainedModel train(const Graph& g, const TrainConfig& cfg) {
  if (!cfg.tree.empty())
    throw std::invalid_argument(
        "train: tree configs are handled by train_hierarchical");
  cfg.validate();
  FlatEngine eng(g, cfg, cfg.communities, cfg.dim);
  return detail::run_training(g, cfg, eng);
}

}  // namespace vgraph
