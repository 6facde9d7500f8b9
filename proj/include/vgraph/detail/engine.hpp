#pragma once

// Internal machinery shared by the flat and hierarchical trainers: decoder
// caches, gradient sinks, the sparse Adam application, and the training
// loop skeleton. Not part of the public surface.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "vgraph/common.hpp"
#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"
#include "vgraph/training.hpp"

namespace vgraph::detail {

inline constexpr std::uint64_t kEvalSampleSalt = 0xC0FFEE0DDEADBEEFULL;

inline std::uint64_t eval_seed(std::uint64_t seed, long iteration) {
  return seed ^ (0x9E3779B97F4A7C15ULL *
                 static_cast<std::uint64_t>(iteration + 1));
}

struct LossAccum {
  double recon = 0.0;
  double kl = 0.0;
  double reg = 0.0;

  LossBreakdown breakdown() const {
    LossBreakdown b;
    b.recon = recon;
    b.kl = kl;
    b.reg = reg;
    b.total = -recon + kl + reg;
    return b;
  }
};

// Per-community decoder normalizers over a row range of psi (all of psi
// for the flat model, the leaf rows for a hierarchy). probs and mu are
// filled only when gradients are needed.
struct DecoderCache {
  int first_row = 0;
  std::vector<double> logZ;
  Matrix probs;  // nrows x V
  Matrix mu;     // nrows x d, E_{c ~ decoder}[varphi_c]
  std::vector<double> scratch;

  void build(const ModelParams& p, int first, int nrows, bool need_grads) {
    const int v = p.node_count();
    const int d = p.dim();
    first_row = first;
    logZ.resize(nrows);
    scratch.resize(v);
    if (need_grads) {
      if (static_cast<int>(probs.rows()) != nrows ||
          static_cast<int>(probs.cols()) != v)
        probs = Matrix(nrows, v);
      if (static_cast<int>(mu.rows()) != nrows ||
          static_cast<int>(mu.cols()) != d)
        mu = Matrix(nrows, d);
      mu.fill(0.0);
    }
    for (int jj = 0; jj < nrows; ++jj) {
      const auto psi_j = p.psi.row(first + jj);
      for (int c = 0; c < v; ++c) scratch[c] = dot(psi_j, p.varphi.row(c));
      const double lse = logsumexp(scratch);
      logZ[jj] = lse;
      if (need_grads) {
        auto pr = probs.row(jj);
        auto m = mu.row(jj);
        for (int c = 0; c < v; ++c) {
          const double pc = std::exp(scratch[c] - lse);
          pr[c] = pc;
          axpy(pc, p.varphi.row(c), m);
        }
      }
    }
  }
};

inline void adam_row(std::span<double> p, std::span<const double> g,
                     std::span<double> m, std::span<double> v,
                     const AdamConfig& ac, double lr, double bc1,
                     double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = ac.beta1 * m[i] + (1.0 - ac.beta1) * g[i];
    v[i] = ac.beta2 * v[i] + (1.0 - ac.beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + ac.eps);
  }
}

// Dense sink: writes straight into a Gradients struct. varphi coefficient
// contributions (a multiple of one psi row) are materialized immediately;
// the full-softmax spread term is applied by the caller after the batch.
struct DenseSink {
  Gradients* out;
  const Matrix* psi;
  std::vector<double> spread;

  DenseSink(Gradients* g, const Matrix& psi_ref)
      : out(g), psi(&psi_ref), spread(psi_ref.rows(), 0.0) {}

  std::span<double> phi_row(int i) { return out->phi.row(i); }
  std::span<double> psi_row(int j) { return out->psi.row(j); }
  std::span<double> varphi_row(int i) { return out->varphi.row(i); }
  void varphi_coeff(int i, int j, double c) {
    axpy(c, psi->row(j), out->varphi.row(i));
  }
  void add_spread(int j, double c) { spread[j] += c; }

  // g_varphi[r] += spread[j] * probs(j, r) * psi_j for all rows r.
  void apply_spread(const DecoderCache& cache) {
    for (std::size_t jj = 0; jj < cache.logZ.size(); ++jj) {
      const int j = cache.first_row + static_cast<int>(jj);
      const double s = spread[j];
      if (s == 0.0) continue;
      const auto psi_j = psi->row(j);
      const auto pr = cache.probs.row(jj);
      for (std::size_t r = 0; r < pr.size(); ++r)
        axpy(s * pr[r], psi_j, out->varphi.row(r));
    }
  }
};

// Sparse sink for the training loop. phi gradients are dense rows tracked
// by an epoch stamp; varphi gradients are kept as per-(row, community)
// coefficients of psi rows so negative samples never touch full gradient
// rows; psi gradients are dense (few rows).
struct SparseSink {
  int v, r, d;
  Matrix gphi;
  Matrix gpsi;
  std::vector<int> phi_rows;
  std::vector<std::uint32_t> phi_mark;
  std::vector<double> coeff;  // v * r
  std::vector<int> coeff_rows;
  std::vector<std::uint32_t> coeff_mark;
  std::vector<double> spread;
  std::vector<double> compose;
  std::uint32_t epoch = 0;

  SparseSink(int node_count, int psi_rows, int dim)
      : v(node_count),
        r(psi_rows),
        d(dim),
        gphi(node_count, dim),
        gpsi(psi_rows, dim),
        phi_mark(node_count, 0),
        coeff(static_cast<std::size_t>(node_count) * psi_rows, 0.0),
        coeff_mark(node_count, 0),
        spread(psi_rows, 0.0),
        compose(dim, 0.0) {}

  void next_epoch() {
    ++epoch;
    phi_rows.clear();
    coeff_rows.clear();
    std::fill(spread.begin(), spread.end(), 0.0);
    gpsi.fill(0.0);
  }

  std::span<double> phi_row(int i) {
    if (phi_mark[i] != epoch) {
      phi_mark[i] = epoch;
      phi_rows.push_back(i);
      auto row = gphi.row(i);
      std::fill(row.begin(), row.end(), 0.0);
    }
    return gphi.row(i);
  }

  std::span<double> psi_row(int j) { return gpsi.row(j); }

  std::span<double> varphi_row(int) {
    throw std::logic_error("dense varphi rows unsupported in sparse sink");
  }

  void varphi_coeff(int i, int j, double c) {
    if (coeff_mark[i] != epoch) {
      coeff_mark[i] = epoch;
      coeff_rows.push_back(i);
      std::fill(coeff.begin() + static_cast<std::size_t>(i) * r,
                coeff.begin() + static_cast<std::size_t>(i) * r + r, 0.0);
    }
    coeff[static_cast<std::size_t>(i) * r + j] += c;
  }

  void add_spread(int j, double c) { spread[j] += c; }

  // Adam over exactly the touched rows. varphi rows are composed from
  // coefficients against the pre-update psi, so varphi goes first and psi
  // last. `cache` must be non-null when the decoder ran in full-softmax
  // mode (its spread term touches every varphi row).
  void apply(ModelParams& p, AdamState& st, double lr,
             const DecoderCache* cache) {
    ++st.step;
    const double bc1 = 1.0 - std::pow(st.config.beta1, st.step);
    const double bc2 = 1.0 - std::pow(st.config.beta2, st.step);

    if (cache != nullptr) {
      for (int row = 0; row < v; ++row) {
        std::fill(compose.begin(), compose.end(), 0.0);
        if (coeff_mark[row] == epoch) {
          const double* cf = &coeff[static_cast<std::size_t>(row) * r];
          for (int j = 0; j < r; ++j)
            if (cf[j] != 0.0) axpy(cf[j], p.psi.row(j), compose);
        }
        for (int jj = 0;
             jj < static_cast<int>(cache->logZ.size()); ++jj) {
          const int j = cache->first_row + jj;
          if (spread[j] != 0.0)
            axpy(spread[j] * cache->probs(jj, row), p.psi.row(j), compose);
        }
        adam_row(p.varphi.row(row), compose, st.m_varphi.row(row),
                 st.v_varphi.row(row), st.config, lr, bc1, bc2);
      }
    } else {
      for (int row : coeff_rows) {
        std::fill(compose.begin(), compose.end(), 0.0);
        const double* cf = &coeff[static_cast<std::size_t>(row) * r];
        for (int j = 0; j < r; ++j)
          if (cf[j] != 0.0) axpy(cf[j], p.psi.row(j), compose);
        adam_row(p.varphi.row(row), compose, st.m_varphi.row(row),
                 st.v_varphi.row(row), st.config, lr, bc1, bc2);
      }
    }
    for (int row : phi_rows)
      adam_row(p.phi.row(row), gphi.row(row), st.m_phi.row(row),
               st.v_phi.row(row), st.config, lr, bc1, bc2);
    for (int j = 0; j < r; ++j)
      adam_row(p.psi.row(j), gpsi.row(j), st.m_psi.row(j), st.v_psi.row(j),
               st.config, lr, bc1, bc2);
  }
};

// Reusable per-pair scratch space.
struct PairBuffers {
  std::vector<double> h;      // d: phi_w ⊙ phi_c
  std::vector<double> lq;     // posterior log-probabilities
  std::vector<double> q;
  std::vector<double> u;      // log q - log clamped prior
  std::vector<double> lp;     // prior (w) log-probabilities
  std::vector<double> pw;
  std::vector<double> pc;     // prior (c), regularizer only
  std::vector<double> y;      // relaxed sample
  std::vector<double> vks;    // psi . g_s per community
  std::vector<double> bgrad;
  std::vector<double> agrad;
  std::vector<double> apgrad;
  std::vector<double> gs;     // d: dR/ds
  std::vector<double> mix;    // d: relaxed mixture embedding
  std::vector<double> acc;    // d
  std::vector<double> acc2;   // d
  std::vector<double> hx;     // d, membership-smoothness scratch
  std::vector<double> lgx;    // k, membership-smoothness scratch
  std::vector<double> mw, mc, qx;

  void size_for(int k, int d) {
    h.resize(d);
    gs.resize(d);
    mix.resize(d);
    acc.resize(d);
    acc2.resize(d);
    hx.resize(d);
    lq.resize(k);
    q.resize(k);
    u.resize(k);
    lp.resize(k);
    pw.resize(k);
    pc.resize(k);
    y.resize(k);
    vks.resize(k);
    bgrad.resize(k);
    agrad.resize(k);
    apgrad.resize(k);
    lgx.resize(k);
    mw.resize(k);
    mc.resize(k);
    qx.resize(k);
  }
};

// Training loop skeleton shared by the flat and hierarchical models. The
// engine provides the per-pair forward/backward and the exact-over-z
// evaluation pass; everything else (batching, draws, Adam, checkpointing)
// is identical so a depth-1 hierarchy consumes the RNG stream exactly
// like the flat model.
template <typename Engine>
TrainedModel run_training(const Graph& g, const TrainConfig& cfg,
                          Engine& eng) {
  cfg.validate();
  if (g.edges.empty())
    throw std::invalid_argument("train: graph has no edges");

  const int v = g.node_count;
  Rng master(cfg.seed);
  ModelParams params = init_params(v, eng.psi_rows(), cfg.dim, cfg.tau, master);

  const std::vector<OrderedPair> pairs = all_ordered_pairs(g);
  const std::size_t npairs = pairs.size();

  std::vector<double> edge_alpha;
  if (cfg.lambda > 0.0) {
    edge_alpha.resize(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      edge_alpha[e] =
          jaccard_coefficient(g, g.edges[e].first, g.edges[e].second);
  }
  auto alpha_of = [&](const OrderedPair& pr) {
    return edge_alpha.empty() ? 0.0 : edge_alpha[pr.edge];
  };

  std::unique_ptr<NoiseDistribution> noise;
  if (!eng.full_softmax()) noise = std::make_unique<NoiseDistribution>(g);
  const int m_neg = eng.full_softmax() ? 0 : cfg.negatives;

  // Evaluation pair set: the full ordered-pair set, or a fixed 50k sample
  // for large graphs.
  std::vector<OrderedPair> eval_sample;
  if (g.edges.size() > 25000) {
    Rng er(cfg.seed ^ kEvalSampleSalt);
    eval_sample.reserve(50000);
    for (int i = 0; i < 50000; ++i)
      eval_sample.push_back(pairs[er.index(npairs)]);
  }
  const std::span<const OrderedPair> eval_pairs =
      eval_sample.empty() ? std::span<const OrderedPair>(pairs)
                          : std::span<const OrderedPair>(eval_sample);

  SparseSink sink(v, eng.psi_rows(), cfg.dim);
  AdamState adam = AdamState::like(params);

  TrainedModel out;
  double best_total = 0.0;

  std::vector<int> neg_buf(m_neg);
  auto evaluate = [&](int iteration) {
    Rng erng(eval_seed(cfg.seed, iteration));
    eng.begin_eval(params);
    LossAccum acc;
    const double wpair = 1.0 / static_cast<double>(eval_pairs.size());
    for (const OrderedPair& pr : eval_pairs) {
      for (int i = 0; i < m_neg; ++i) neg_buf[i] = noise->sample(erng);
      eng.eval_pair(params, pr, alpha_of(pr), neg_buf, wpair, acc);
    }
    LossBreakdown b = acc.breakdown();
    if (!std::isfinite(b.total)) throw NanLossError(iteration);
    LossRecord rec{iteration, b.recon, b.kl, b.reg, b.total,
                   lr_at(iteration, cfg)};
    out.history.push_back(rec);
    if (out.history.size() == 1 || b.total < best_total) {
      best_total = b.total;
      out.best_params = params;
      out.best_iteration = iteration;
    }
  };

  evaluate(0);

  const std::size_t batch_size =
      cfg.batch_pairs == 0 ? npairs
                           : static_cast<std::size_t>(cfg.batch_pairs);
  const bool sampled = cfg.batch_pairs != 0;
  const int gpp = eng.gumbels_per_pair();
  std::vector<std::uint32_t> batch_idx(sampled ? batch_size : 0);
  std::vector<double> gumbel(batch_size * gpp);
  std::vector<int> negs(batch_size * m_neg);

  for (int it = 1; it <= cfg.iters; ++it) {
    if (cfg.tau_anneal && cfg.iters > 1)
      params.tau = cfg.tau * (1.0 - 0.5 * static_cast<double>(it - 1) /
                                        static_cast<double>(cfg.iters - 1));

    if (sampled)
      for (std::size_t i = 0; i < batch_size; ++i)
        batch_idx[i] = static_cast<std::uint32_t>(master.index(npairs));
    for (std::size_t i = 0; i < batch_size; ++i) {
      for (int k = 0; k < gpp; ++k) gumbel[i * gpp + k] = master.gumbel();
      for (int m = 0; m < m_neg; ++m)
        negs[i * m_neg + m] = noise->sample(master);
    }

    eng.begin_iteration(params, /*need_grads=*/true);
    sink.next_epoch();
    LossAccum acc;
    const double wpair = 1.0 / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
      const OrderedPair& pr = sampled ? pairs[batch_idx[i]] : pairs[i];
      eng.accumulate(params, pr, alpha_of(pr),
                     std::span<const double>(&gumbel[i * gpp], gpp),
                     std::span<const int>(negs.data() + i * m_neg, m_neg),
                     wpair, ForwardMode::StraightThrough, TermMask{}, acc,
                     &sink);
    }
    if (!std::isfinite(acc.breakdown().total)) throw NanLossError(it);
    sink.apply(params, adam, lr_at(it - 1, cfg),
               eng.full_softmax() ? eng.cache() : nullptr);

    if (it % cfg.eval_every == 0 || it == cfg.iters) evaluate(it);
  }

  out.params = std::move(params);
  return out;
}

}  // namespace vgraph::detail
