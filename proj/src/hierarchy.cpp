#include "vgraph/hierarchy.hpp"

#include <cmath>

#include "vgraph/detail/engine.hpp"

namespace vgraph {

using detail::DecoderCache;
using detail::DenseSink;
using detail::LossAccum;

namespace {
const double kLogProbFloor = std::log(kProbFloor);
}

CommunityTree::CommunityTree(std::vector<int> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty())
    throw std::invalid_argument("community tree: no branching factors");
  for (int f : factors_)
    if (f < 1)
      throw std::invalid_argument("community tree: factors must be >= 1");
  level_start_.resize(depth() + 1);
  level_start_[0] = 0;
  long count = 1;
  for (int l = 0; l < depth(); ++l) {
    count *= factors_[l];
    if (count > 1'000'000)
      throw std::invalid_argument("community tree: too many nodes");
    level_start_[l + 1] = level_start_[l] + static_cast<int>(count);
  }
  parent_.resize(node_count());
  for (int n = 0; n < level_start_[1]; ++n) parent_[n] = -1;
  for (int l = 2; l <= depth(); ++l) {
    const int f = factors_[l - 1];
    const int start = level_start_[l - 1];
    const int prev = level_start_[l - 2];
    for (int n = start; n < level_start_[l]; ++n)
      parent_[n] = prev + (n - start) / f;
  }
}

std::pair<int, int> CommunityTree::child_range(int node) const {
  if (node == -1) return {0, level_start_[1]};
  const int l = level_of(node);
  if (l == depth())
    throw std::invalid_argument("community tree: leaves have no children");
  const int f = factors_[l];
  const int first = level_start_[l] + (node - level_start_[l - 1]) * f;
  return {first, first + f};
}

int CommunityTree::level_of(int node) const {
  for (int l = 1; l <= depth(); ++l)
    if (node < level_start_[l]) return l;
  throw std::out_of_range("community tree: node out of range");
}

int CommunityTree::ancestor_at_level(int leaf_node, int level) const {
  int n = leaf_node;
  for (int l = depth(); l > level; --l) n = parent_[n];
  return n;
}

namespace {

// Per-level softmax conditionals over the whole tree for a fixed left-hand
// vector (phi_w for the prior, phi_w ⊙ phi_c for the posterior); fills the
// conditional log-probability of every node given its parent and the
// accumulated log-probability of the path from the root.
void tree_conditionals(const ModelParams& p, const CommunityTree& t,
                       std::span<const double> vec, std::span<double> cond,
                       std::span<double> path) {
  const auto [rb, re] = t.child_range(-1);
  for (int n = rb; n < re; ++n) cond[n] = dot(vec, p.psi.row(n));
  log_softmax_inplace(cond.subspan(rb, re - rb));
  for (int n = rb; n < re; ++n) path[n] = cond[n];
  for (int m = 0; m < t.first_leaf(); ++m) {
    const auto [cb, ce] = t.child_range(m);
    for (int n = cb; n < ce; ++n) cond[n] = dot(vec, p.psi.row(n));
    log_softmax_inplace(cond.subspan(cb, ce - cb));
    for (int n = cb; n < ce; ++n) path[n] = cond[n] + path[m];
  }
}

// Hierarchical counterpart of the flat engine. Identical loss and
// gradient structure; the posterior/prior softmaxes become per-level
// conditionals, the Gumbel relaxation is applied per conditional, and the
// straight-through forward follows the per-level argmax path to a leaf.
class HierEngine {
 public:
  HierEngine(const Graph& g, const TrainConfig& cfg, const CommunityTree& t,
             int dim)
      : g_(g),
        cfg_(cfg),
        t_(t),
        d_(dim),
        full_(cfg.use_full_softmax(g.node_count)) {
    const int n = t_.node_count();
    h_.resize(d_);
    gs_.resize(d_);
    mix_.resize(d_);
    acc_.resize(d_);
    acc2_.resize(d_);
    clq_.resize(n);
    cq_.resize(n);
    lqp_.resize(n);
    ql_.resize(n);
    plq_.resize(n);
    cp_.resize(n);
    lpp_.resize(n);
    pclq_.resize(n);
    pcc_.resize(n);
    lpcp_.resize(n);
    pwl_.resize(n);
    pcl_.resize(n);
    u_.resize(n);
    y_.resize(n);
    yprod_.resize(n);
    vks_.resize(n);
    inner_.resize(n);
    sq_.resize(n);
    bgrad_.resize(n);
    agrad_.resize(n);
    apgrad_.resize(n);
    desc_.resize(n);
  }

  int psi_rows() const { return t_.node_count(); }
  int gumbels_per_pair() const { return t_.node_count(); }
  bool full_softmax() const { return full_; }
  const DecoderCache* cache() const { return &cache_; }

  void begin_iteration(const ModelParams& p, bool need_grads) {
    if (full_)
      cache_.build(p, t_.first_leaf(), t_.leaf_count(), need_grads);
  }

  void begin_eval(const ModelParams& p) {
    if (full_) cache_.build(p, t_.first_leaf(), t_.leaf_count(), false);
  }

  template <typename Sink>
  void accumulate(const ModelParams& p, const OrderedPair& pr, double alpha,
                  std::span<const double> gnoise, std::span<const int> negs,
                  double wpair, ForwardMode mode, TermMask mask,
                  LossAccum& acc, Sink* sink) {
    const int d = d_;
    const int nt = t_.node_count();
    const int fl = t_.first_leaf();
    const int w = pr.w, c = pr.c;
    const auto phi_w = p.phi.row(w);
    const auto phi_c = p.phi.row(c);

    for (int i = 0; i < d; ++i) h_[i] = phi_w[i] * phi_c[i];
    tree_conditionals(p, t_, h_, clq_, lqp_);
    for (int n = 0; n < nt; ++n) cq_[n] = std::exp(clq_[n]);
    for (int n = fl; n < nt; ++n) ql_[n] = std::exp(lqp_[n]);

    tree_conditionals(p, t_, phi_w, plq_, lpp_);
    for (int n = 0; n < nt; ++n) cp_[n] = std::exp(plq_[n]);

    double kl = 0.0;
    if (mask.kl) {
      for (int n = fl; n < nt; ++n) {
        u_[n] = lqp_[n] - std::max(lpp_[n], kLogProbFloor);
        kl += ql_[n] * u_[n];
      }
      acc.kl += wpair * kl;
    }

    if (sink) {
      std::fill(bgrad_.begin(), bgrad_.end(), 0.0);
      std::fill(agrad_.begin(), agrad_.end(), 0.0);
    }
    bool reg_grads = false;

    if (mask.recon) {
      const double tau = p.tau;
      const double w_r = -wpair;

      // per-conditional Gumbel relaxation
      auto relax_block = [&](int first, int last) {
        for (int n = first; n < last; ++n)
          y_[n] = (std::max(clq_[n], kLogProbFloor) + gnoise[n]) / tau;
        softmax_inplace(std::span<double>(y_).subspan(first, last - first));
      };
      {
        const auto [rb, re] = t_.child_range(-1);
        relax_block(rb, re);
        for (int n = rb; n < re; ++n) yprod_[n] = y_[n];
      }
      for (int m = 0; m < fl; ++m) {
        const auto [cb, ce] = t_.child_range(m);
        relax_block(cb, ce);
        for (int n = cb; n < ce; ++n) yprod_[n] = y_[n] * yprod_[m];
      }

      // hard descent: per-node argmax child, resolved bottom-up
      for (int n = fl; n < nt; ++n) desc_[n] = n;
      for (int m = fl - 1; m >= 0; --m) {
        const auto [cb, ce] = t_.child_range(m);
        int best = cb;
        for (int n = cb + 1; n < ce; ++n)
          if (y_[n] > y_[best]) best = n;
        desc_[m] = desc_[best];
      }
      int hard;
      {
        const auto [rb, re] = t_.child_range(-1);
        int best = rb;
        for (int n = rb + 1; n < re; ++n)
          if (y_[n] > y_[best]) best = n;
        hard = desc_[best];
      }

      std::span<const double> s;
      if (mode == ForwardMode::StraightThrough) {
        s = p.psi.row(hard);
      } else {
        std::fill(mix_.begin(), mix_.end(), 0.0);
        for (int n = fl; n < nt; ++n) axpy(yprod_[n], p.psi.row(n), mix_);
        s = mix_;
      }

      double recon;
      if (full_) {
        if (mode == ForwardMode::StraightThrough) {
          recon = dot(s, p.varphi.row(c)) - cache_.logZ[t_.leaf_index(hard)];
          if (sink) {
            const auto mu = cache_.mu.row(t_.leaf_index(hard));
            const auto vc = p.varphi.row(c);
            for (int i = 0; i < d; ++i) gs_[i] = vc[i] - mu[i];
            sink->varphi_coeff(c, hard, w_r);
            sink->add_spread(hard, wpair);
          }
        } else {
          const int v = g_.node_count;
          vbuf_.resize(v);
          for (int r = 0; r < v; ++r) vbuf_[r] = dot(s, p.varphi.row(r));
          const double lse = logsumexp(vbuf_);
          recon = vbuf_[c] - lse;
          if (sink) {
            std::fill(gs_.begin(), gs_.end(), 0.0);
            for (int r = 0; r < v; ++r) {
              const double prob = std::exp(vbuf_[r] - lse);
              axpy(-prob, p.varphi.row(r), gs_);
              axpy(-w_r * prob, s, sink->varphi_row(r));
            }
            axpy(1.0, p.varphi.row(c), gs_);
            axpy(w_r, s, sink->varphi_row(c));
          }
        }
      } else {
        const double tpos = dot(s, p.varphi.row(c));
        recon = log_sigmoid(tpos);
        if (sink) {
          std::fill(gs_.begin(), gs_.end(), 0.0);
          const double spos = sigmoid(-tpos);
          axpy(spos, p.varphi.row(c), gs_);
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
            axpy(-sneg, p.varphi.row(vneg), gs_);
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
          axpy(w_r, gs_, sink->psi_row(hard));
        } else {
          for (int n = fl; n < nt; ++n)
            axpy(w_r * yprod_[n], gs_, sink->psi_row(n));
        }

        // backprop through the relaxed conditionals into the posterior
        // logits: eta_j = y_j (v_j - sum y v) / tau per block
        auto block_eta = [&](int first, int last) {
          double ybar = 0.0;
          for (int n = first; n < last; ++n) ybar += y_[n] * vks_[n];
          double etasum = 0.0;
          for (int n = first; n < last; ++n) {
            const double eta = clq_[n] > kLogProbFloor
                                   ? y_[n] * (vks_[n] - ybar) / tau
                                   : 0.0;
            vks_[n] = eta;
            etasum += eta;
          }
          for (int n = first; n < last; ++n)
            bgrad_[n] += w_r * (vks_[n] - cq_[n] * etasum);
        };
        if (mode == ForwardMode::StraightThrough) {
          // only blocks along the hard path receive gradient
          int m = -1;
          for (int level = 1; level <= t_.depth(); ++level) {
            const auto [cb, ce] = t_.child_range(m);
            int best = cb;
            for (int n = cb; n < ce; ++n) {
              vks_[n] = dot(p.psi.row(desc_[n]), gs_);
              if (y_[n] > y_[best]) best = n;
            }
            block_eta(cb, ce);
            m = best;
          }
        } else {
          for (int n = fl; n < nt; ++n) inner_[n] = dot(p.psi.row(n), gs_);
          for (int m = fl - 1; m >= 0; --m) {
            const auto [cb, ce] = t_.child_range(m);
            double sum = 0.0;
            for (int n = cb; n < ce; ++n) sum += y_[n] * inner_[n];
            inner_[m] = sum;
          }
          {
            const auto [rb, re] = t_.child_range(-1);
            for (int n = rb; n < re; ++n) vks_[n] = inner_[n];
            block_eta(rb, re);
          }
          for (int m = 0; m < fl; ++m) {
            const auto [cb, ce] = t_.child_range(m);
            for (int n = cb; n < ce; ++n) vks_[n] = yprod_[m] * inner_[n];
            block_eta(cb, ce);
          }
        }
      }
    }

    if (mask.kl && sink) {
      for (int n = fl; n < nt; ++n) sq_[n] = ql_[n] * u_[n];
      accumulate_block_grads(sq_, cq_, wpair, bgrad_, /*flip=*/false);
      for (int n = fl; n < nt; ++n)
        sq_[n] = lpp_[n] > kLogProbFloor ? ql_[n] : 0.0;
      accumulate_block_grads(sq_, cp_, wpair, agrad_, /*flip=*/true);
    }

    if (mask.reg && cfg_.lambda > 0.0 && alpha != 0.0) {
      tree_conditionals(p, t_, phi_c, pclq_, lpcp_);
      double sqsum = 0.0;
      for (int n = fl; n < nt; ++n) {
        pwl_[n] = std::exp(lpp_[n]);  // leaf prior probs, both sides
        pcl_[n] = std::exp(lpcp_[n]);
        const double diff = pcl_[n] - pwl_[n];
        sqsum += diff * diff;
      }
      acc.reg += wpair * cfg_.lambda * alpha * sqsum;
      if (sink) {
        reg_grads = true;
        for (int n = 0; n < nt; ++n) pcc_[n] = std::exp(pclq_[n]);
        const double w2 = wpair * cfg_.lambda * alpha * 2.0;
        // c side: x_l = pc_l * gpc_l; w side: pw_l * (-gpc_l)
        for (int n = fl; n < nt; ++n) {
          const double gdiff = w2 * (pcl_[n] - pwl_[n]);
          sq_[n] = pcl_[n] * gdiff;
          u_[n] = pwl_[n] * -gdiff;
        }
        std::fill(apgrad_.begin(), apgrad_.end(), 0.0);
        accumulate_block_grads(sq_, pcc_, 1.0, apgrad_, /*flip=*/false);
        accumulate_block_grads(u_, cp_, 1.0, agrad_, /*flip=*/false);
      }
    }

    if (sink) {
      std::fill(acc_.begin(), acc_.end(), 0.0);
      for (int n = 0; n < nt; ++n)
        if (bgrad_[n] != 0.0) axpy(bgrad_[n], p.psi.row(n), acc_);
      std::fill(acc2_.begin(), acc2_.end(), 0.0);
      for (int n = 0; n < nt; ++n)
        if (agrad_[n] != 0.0) axpy(agrad_[n], p.psi.row(n), acc2_);

      auto gw = sink->phi_row(w);
      for (int i = 0; i < d; ++i) gw[i] += phi_c[i] * acc_[i] + acc2_[i];
      auto gc = sink->phi_row(c);
      for (int i = 0; i < d; ++i) gc[i] += phi_w[i] * acc_[i];
      if (reg_grads) {
        std::fill(acc2_.begin(), acc2_.end(), 0.0);
        for (int n = 0; n < nt; ++n)
          if (apgrad_[n] != 0.0) axpy(apgrad_[n], p.psi.row(n), acc2_);
        for (int i = 0; i < d; ++i) gc[i] += acc2_[i];
      }

      for (int n = 0; n < nt; ++n) {
        auto pj = sink->psi_row(n);
        const double bg = bgrad_[n];
        const double ag = agrad_[n];
        if (bg != 0.0 || ag != 0.0)
          for (int i = 0; i < d; ++i) pj[i] += bg * h_[i] + ag * phi_w[i];
        if (reg_grads && apgrad_[n] != 0.0) axpy(apgrad_[n], phi_c, pj);
      }
    }
  }

  void eval_pair(const ModelParams& p, const OrderedPair& pr, double alpha,
                 std::span<const int> negs, double wpair, LossAccum& acc) {
    const int d = d_;
    const int nt = t_.node_count();
    const int fl = t_.first_leaf();
    const int w = pr.w, c = pr.c;
    const auto phi_w = p.phi.row(w);
    const auto phi_c = p.phi.row(c);

    for (int i = 0; i < d; ++i) h_[i] = phi_w[i] * phi_c[i];
    tree_conditionals(p, t_, h_, clq_, lqp_);
    for (int n = fl; n < nt; ++n) ql_[n] = std::exp(lqp_[n]);
    tree_conditionals(p, t_, phi_w, plq_, lpp_);

    double kl = 0.0;
    for (int n = fl; n < nt; ++n)
      kl += ql_[n] * (lqp_[n] - std::max(lpp_[n], kLogProbFloor));
    acc.kl += wpair * kl;

    double recon = 0.0;
    if (full_) {
      for (int n = fl; n < nt; ++n)
        recon += ql_[n] * (dot(p.psi.row(n), p.varphi.row(c)) -
                           cache_.logZ[t_.leaf_index(n)]);
    } else {
      for (int n = fl; n < nt; ++n) {
        const auto psi_n = p.psi.row(n);
        double nsj = log_sigmoid(dot(psi_n, p.varphi.row(c)));
        for (int vneg : negs)
          nsj += log_sigmoid(-dot(psi_n, p.varphi.row(vneg)));
        recon += ql_[n] * nsj;
      }
    }
    acc.recon += wpair * recon;

    if (cfg_.lambda > 0.0 && alpha != 0.0) {
      for (int n = fl; n < nt; ++n) pwl_[n] = std::exp(lpp_[n]);
      tree_conditionals(p, t_, phi_c, pclq_, lpcp_);
      double sq = 0.0;
      for (int n = fl; n < nt; ++n) {
        const double diff = std::exp(lpcp_[n]) - pwl_[n];
        sq += diff * diff;
      }
      acc.reg += wpair * cfg_.lambda * alpha * sq;
    }
  }

 private:
  // Shared "value minus conditional-probability-times-parent-total"
  // backprop over the tree: out[n] += scale * (T(n) - cond_n * T(parent)),
  // with T the bottom-up sum of the per-leaf values in `vals`. With
  // flip=true the sign is reversed (used for the KL prior side).
  void accumulate_block_grads(std::vector<double>& vals,
                              const std::vector<double>& cond, double scale,
                              std::vector<double>& out, bool flip) {
    const int fl = t_.first_leaf();
    for (int m = fl - 1; m >= 0; --m) {
      const auto [cb, ce] = t_.child_range(m);
      double sum = 0.0;
      for (int n = cb; n < ce; ++n) sum += vals[n];
      vals[m] = sum;
    }
    double root = 0.0;
    {
      const auto [rb, re] = t_.child_range(-1);
      for (int n = rb; n < re; ++n) root += vals[n];
      for (int n = rb; n < re; ++n) {
        const double g = flip ? cond[n] * root - vals[n]
                              : vals[n] - cond[n] * root;
        out[n] += scale * g;
      }
    }
    for (int m = 0; m < fl; ++m) {
      const auto [cb, ce] = t_.child_range(m);
      for (int n = cb; n < ce; ++n) {
        const double g = flip ? cond[n] * vals[m] - vals[n]
                              : vals[n] - cond[n] * vals[m];
        out[n] += scale * g;
      }
    }
  }

  const Graph& g_;
  TrainConfig cfg_;
  const CommunityTree& t_;
  int d_;
  bool full_;
  DecoderCache cache_;
  std::vector<double> h_, gs_, mix_, acc_, acc2_;
  std::vector<double> clq_, cq_, lqp_, ql_, plq_, cp_, lpp_;
  std::vector<double> pclq_, pcc_, lpcp_, pwl_, pcl_;
  std::vector<double> u_, y_, yprod_, vks_, inner_, sq_;
  std::vector<double> bgrad_, agrad_, apgrad_;
  std::vector<int> desc_;
  std::vector<double> vbuf_;
};

}  // namespace

std::vector<double> path_prior(const ModelParams& p, const CommunityTree& t,
                               int w) {
  std::vector<double> cond(t.node_count()), path(t.node_count());
  tree_conditionals(p, t, p.phi.row(w), cond, path);
  std::vector<double> out(t.leaf_count());
  for (int n = t.first_leaf(); n < t.node_count(); ++n)
    out[t.leaf_index(n)] = std::exp(path[n]);
  return out;
}

std::vector<double> path_posterior(const ModelParams& p,
                                   const CommunityTree& t, int w, int c) {
  const int d = p.dim();
  std::vector<double> h(d);
  const auto phi_w = p.phi.row(w);
  const auto phi_c = p.phi.row(c);
  for (int i = 0; i < d; ++i) h[i] = phi_w[i] * phi_c[i];
  std::vector<double> cond(t.node_count()), path(t.node_count());
  tree_conditionals(p, t, h, cond, path);
  std::vector<double> out(t.leaf_count());
  for (int n = t.first_leaf(); n < t.node_count(); ++n)
    out[t.leaf_index(n)] = std::exp(path[n]);
  return out;
}

double hierarchical_edge_likelihood(const ModelParams& p,
                                    const CommunityTree& t, int w, int c) {
  const std::vector<double> prior = path_prior(p, t, w);
  const int v = p.node_count();
  std::vector<double> logits(v);
  double lik = 0.0;
  for (int n = t.first_leaf(); n < t.node_count(); ++n) {
    const auto psi_n = p.psi.row(n);
    for (int r = 0; r < v; ++r) logits[r] = dot(psi_n, p.varphi.row(r));
    const double lse = logsumexp(logits);
    lik += prior[t.leaf_index(n)] * std::exp(logits[c] - lse);
  }
  return lik;
}

std::vector<CommunitySet> assign_hierarchical(const ModelParams& p,
                                              const CommunityTree& t,
                                              const Graph& g,
                                              AssignMode mode) {
  const int leaves = t.leaf_count();
  // leaf communities per node
  std::vector<std::vector<int>> leaf_of(g.node_count);
  if (mode == AssignMode::NonOverlapping) {
    for (int w = 0; w < g.node_count; ++w) {
      const auto nbrs = g.neighbors(w);
      if (nbrs.empty()) continue;
      std::vector<double> m(leaves, 0.0);
      for (int c : nbrs) {
        const std::vector<double> q = path_posterior(p, t, w, c);
        for (int l = 0; l < leaves; ++l) m[l] += q[l];
      }
      leaf_of[w].push_back(argmax(m));
    }
  } else {
    for (auto [u, v] : g.edges) {
      const std::vector<double> q = path_posterior(p, t, u, v);
      const int l = argmax(q);
      leaf_of[u].push_back(l);
      leaf_of[v].push_back(l);
    }
  }

  std::vector<CommunitySet> out;
  for (int level = 1; level <= t.depth(); ++level) {
    const int k = t.level_size(level);
    const int start = t.level_start(level);
    std::vector<std::vector<int>> members(k);
    for (int w = 0; w < g.node_count; ++w) {
      std::vector<int> comms;
      for (int l : leaf_of[w])
        comms.push_back(t.ancestor_at_level(t.first_leaf() + l, level) -
                        start);
      std::sort(comms.begin(), comms.end());
      comms.erase(std::unique(comms.begin(), comms.end()), comms.end());
      for (int cidx : comms) members[cidx].push_back(w);
    }
    out.push_back(
        CommunitySet::from_members(k, g.node_count, std::move(members)));
  }
  return out;
}

LossBreakdown hierarchical_loss_with_draws(
    const ModelParams& p, const Graph& g, const CommunityTree& t,
    std::span<const OrderedPair> batch, const TrainConfig& cfg,
    const FixedDraws& draws, ForwardMode mode, TermMask mask,
    Gradients* grads) {
  if (batch.empty())
    throw std::invalid_argument(
        "hierarchical_loss_with_draws: batch must be nonempty");
  HierEngine eng(g, cfg, t, p.dim());
  const bool full = eng.full_softmax();
  const int gpp = eng.gumbels_per_pair();
  const int m = full ? 0 : cfg.negatives;
  if (draws.gumbel.size() != batch.size() * static_cast<std::size_t>(gpp))
    throw std::invalid_argument(
        "hierarchical_loss_with_draws: gumbel draw size mismatch");

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
                   std::span<const double>(&draws.gumbel[i * gpp], gpp),
                   std::span<const int>(draws.negatives.data() + i * m, m),
                   wpair, mode, mask, acc, sp);
  }
  if (grads && full && st && mask.recon) sink.apply_spread(*eng.cache());
  return acc.breakdown();
}

TrainedModel train_hierarchical(const Graph& g, const TrainConfig& cfg) {
  if (cfg.tree.empty())
    throw std::invalid_argument("train_hierarchical: cfg.tree is empty");
  cfg.validate();
  CommunityTree tree(cfg.tree);
  HierEngine eng(g, cfg, tree, cfg.dim);
  return detail::run_training(g, cfg, eng);
}

}  // namespace vgraph
