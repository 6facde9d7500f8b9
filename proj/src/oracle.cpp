#include "vgraph/oracle.hpp"

#include <cmath>

namespace vgraph::oracle {

namespace {

// Plain softmax without stabilization tricks; fine for the small logits
// these references are run on.
std::vector<double> naive_softmax(const std::vector<double>& logits) {
  std::vector<double> out(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i]);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

std::vector<double> naive_prior(const ModelParams& p, int w) {
  std::vector<double> logits(p.community_count());
  for (int j = 0; j < p.community_count(); ++j) {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i) s += p.phi(w, i) * p.psi(j, i);
    logits[j] = s;
  }
  return naive_softmax(logits);
}

std::vector<double> naive_decoder(const ModelParams& p, int j) {
  std::vector<double> logits(p.node_count());
  for (int c = 0; c < p.node_count(); ++c) {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i) s += p.psi(j, i) * p.varphi(c, i);
    logits[c] = s;
  }
  return naive_softmax(logits);
}

std::vector<double> naive_posterior(const ModelParams& p, int w, int c) {
  std::vector<double> logits(p.community_count());
  for (int j = 0; j < p.community_count(); ++j) {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i)
      s += p.phi(w, i) * p.phi(c, i) * p.psi(j, i);
    logits[j] = s;
  }
  return naive_softmax(logits);
}

}  // namespace

double exact_edge_loglik(const ModelParams& p, int w, int c) {
  const std::vector<double> prior = naive_prior(p, w);
  double sum = 0.0;
  for (int j = 0; j < p.community_count(); ++j)
    sum += naive_decoder(p, j)[c] * prior[j];
  return std::log(sum);
}

double exact_elbo(const ModelParams& p, int w, int c,
                  std::span<const double> q) {
  const std::vector<double> prior = naive_prior(p, w);
  double expected = 0.0;
  double kl = 0.0;
  for (int j = 0; j < p.community_count(); ++j) {
    if (q[j] <= 0.0) continue;
    expected += q[j] * std::log(naive_decoder(p, j)[c]);
    kl += q[j] * (std::log(q[j]) -
                  std::log(std::max(prior[j], kProbFloor)));
  }
  return expected - kl;
}

double exact_elbo(const ModelParams& p, int w, int c) {
  const std::vector<double> q = naive_posterior(p, w, c);
  return exact_elbo(p, w, c, q);
}

std::vector<double> bayes_posterior(const ModelParams& p, int w, int c) {
  const std::vector<double> prior = naive_prior(p, w);
  std::vector<double> post(p.community_count());
  double z = 0.0;
  for (int j = 0; j < p.community_count(); ++j) {
    post[j] = naive_decoder(p, j)[c] * prior[j];
    z += post[j];
  }
  for (double& x : post) x /= z;
  return post;
}

std::vector<std::vector<double>> brute_force_memberships(const ModelParams& p,
                                                         const Graph& g) {
  std::vector<std::vector<double>> out(g.node_count);
  for (int w = 0; w < g.node_count; ++w) {
    const auto nbrs = g.neighbors(w);
    if (nbrs.empty()) continue;
    std::vector<double> acc(p.community_count(), 0.0);
    for (int c : nbrs) {
      const std::vector<double> q = naive_posterior(p, w, c);
      for (int j = 0; j < p.community_count(); ++j) acc[j] += q[j];
    }
    for (double& x : acc) x /= static_cast<double>(nbrs.size());
    out[w] = std::move(acc);
  }
  return out;
}

}  // namespace vgraph::oracle
