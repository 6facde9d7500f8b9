#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"

namespace vgraph {

enum class DecoderMode { Auto, FullSoftmax, NegativeSampling };

// Which p(z|.) the smoothness regularizer compares across an edge: the
// softmax prior (cheap, default) or the neighbor-aggregated membership.
enum class SmoothnessSource { Prior, Membership };

struct TrainConfig {
  int dim = 128;
  int communities = 0;      // K; leaf count when tree is set
  double lr0 = 0.05;
  double decay = 0.99;
  int decay_every = 100;
  int iters = 5000;
  int batch_pairs = 5000;   // ordered pairs per iteration; 0 = full batch
  double lambda = 0.0;      // smoothness weight (100 when enabled)
  int negatives = 5;        // M
  double tau = 1.0;
  bool tau_anneal = false;  // linear tau -> tau/2 over training
  std::uint64_t seed = 1;
  int eval_every = 100;
  int full_softmax_limit = 10000;
  DecoderMode decoder = DecoderMode::Auto;
  SmoothnessSource smoothness = SmoothnessSource::Prior;
  std::vector<int> tree;    // per-level branching factors; empty = flat

  void validate() const;
  bool use_full_softmax(int node_count) const;
  int leaf_count() const;   // communities for flat, product of tree factors
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct Gradients {
  Matrix phi, varphi, psi;
  static Gradients like(const ModelParams& p) {
    return {Matrix(p.phi.rows(), p.phi.cols()),
            Matrix(p.varphi.rows(), p.varphi.cols()),
            Matrix(p.psi.rows(), p.psi.cols())};
  }
};

struct AdamState {
  Matrix m_phi, v_phi, m_varphi, v_varphi, m_psi, v_psi;
  long step = 0;
  AdamConfig config;
  static AdamState like(const ModelParams& p) {
    AdamState s;
    s.m_phi = Matrix(p.phi.rows(), p.phi.cols());
    s.v_phi = s.m_phi;
    s.m_varphi = Matrix(p.varphi.rows(), p.varphi.cols());
    s.v_varphi = s.m_varphi;
    s.m_psi = Matrix(p.psi.rows(), p.psi.cols());
    s.v_psi = s.m_psi;
    return s;
  }
};

// Standard bias-corrected Adam update over all parameter matrices.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state,
               double lr);

// lr0 * decay^floor(iteration / decay_every)
double lr_at(long iteration, const TrainConfig& cfg);

// sum_k q_k (log q_k - log max(p_k, 1e-10)), with 0 log 0 = 0.
double kl_categorical(std::span<const double> q, std::span<const double> p);

// Ordered node pair (w, c) plus the undirected edge it came from.
struct OrderedPair {
  int w, c;
  int edge;
};

// Each undirected edge as two ordered pairs: (u,v) then (v,u).
std::vector<OrderedPair> all_ordered_pairs(const Graph& g);

// lambda * sum over batch of alpha_{w,c} * sum_k (p(z=k|c) - p(z=k|w))^2,
// with p(z|.) the softmax prior. Not normalized by batch size.
double smoothness_penalty(const ModelParams& p, const Graph& g,
                          std::span<const OrderedPair> batch, double lambda);

struct ElboTerms {
  double reconstruction;
  double kl;
};

// Reconstruction uses the hard sample: log p(c|z=hard) under the full
// softmax decoder; the KL term is closed-form, not sampled.
ElboTerms elbo_terms(const ModelParams& p, int w, int c,
                     const GumbelSample& sample);
// Negative-sampling surrogate for the reconstruction term.
ElboTerms elbo_terms(const ModelParams& p, int w, int c,
                     const GumbelSample& sample,
                     std::span<const int> negatives);

struct LossBreakdown {
  double recon = 0.0;  // mean reconstruction log-likelihood (sign positive)
  double kl = 0.0;     // mean KL
  double reg = 0.0;    // lambda * mean smoothness term
  double total = 0.0;  // -recon + kl + reg
};

// Sampled total loss over a batch: mean(-recon + kl) plus the smoothness
// penalty normalized by batch size. Gumbel noise (and negatives, when the
// decoder mode resolves to negative sampling) are drawn from rng.
LossBreakdown total_loss(const ModelParams& p, const Graph& g,
                         std::span<const OrderedPair> batch,
                         const TrainConfig& cfg, Rng& rng);

// Hand-derived gradients of total_loss under the straight-through
// contract: hard forward, relaxed backward for the reconstruction term;
// KL and regularizer gradients are exact.
Gradients compute_gradients(const ModelParams& p, const Graph& g,
                            std::span<const OrderedPair> batch,
                            const TrainConfig& cfg, Rng& rng);

// ---- verification surface ----------------------------------------------
// Fixed draws make the sampled objective a deterministic function of the
// parameters so analytic gradients can be checked by finite differences.

struct FixedDraws {
  std::vector<double> gumbel;  // batch_size * gumbels_per_pair
  std::vector<int> negatives;  // batch_size * M; unused under full softmax
};

enum class ForwardMode { StraightThrough, Relaxed };

struct TermMask {
  bool recon = true;
  bool kl = true;
  bool reg = true;
};

LossBreakdown loss_with_draws(const ModelParams& p, const Graph& g,
                              std::span<const OrderedPair> batch,
                              const TrainConfig& cfg, const FixedDraws& draws,
                              ForwardMode mode, TermMask mask,
                              Gradients* grads);

// --------------------------------------------------------------------------

struct LossRecord {
  int iteration;
  double recon, kl, reg, total, lr;
};

struct TrainedModel {
  ModelParams params;       // after the last iteration
  ModelParams best_params;  // lowest recorded total loss
  int best_iteration = 0;
  std::vector<LossRecord> history;
};

class NanLossError : public std::runtime_error {
 public:
  NanLossError(int iteration)
      : std::runtime_error("non-finite loss at iteration " +
                           std::to_string(iteration)),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

// Mini-batch gradient descent with Adam and a step learning-rate decay.
// Every eval_every iterations the total loss over the full ordered-pair
// set (or a fixed 50k-pair sample when |E| > 25k) is recorded and the
// best parameters are snapshotted. Deterministic given cfg.seed.
TrainedModel train(const Graph& g, const TrainConfig& cfg);

}  // namespace vgraph
