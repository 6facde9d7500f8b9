#include "vgraph/model.hpp"

#include <cmath>
#include <stdexcept>

namespace vgraph {

ModelParams init_params(int node_count, int community_count, int dim,
                        double tau, Rng& rng) {
  if (tau <= 0.0) throw std::invalid_argument("init_params: tau must be > 0");
  ModelParams p;
  p.tau = tau;
  const double sd = 1.0 / std::sqrt(static_cast<double>(dim));
  auto fill = [&](Matrix& m, int rows) {
    m = Matrix(rows, dim);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < dim; ++c) m(r, c) = sd * rng.normal();
  };
  fill(p.phi, node_count);
  fill(p.varphi, node_count);
  fill(p.psi, community_count);
  return p;
}

MembershipVector prior_distribution(const ModelParams& p, int w) {
  const int k = p.community_count();
  MembershipVector out(k);
  const auto phi_w = p.phi.row(w);
  for (int j = 0; j < k; ++j) out[j] = dot(phi_w, p.psi.row(j));
  softmax_inplace(out);
  return out;
}

std::vector<double> decoder_distribution(const ModelParams& p, int j) {
  const int v = p.node_count();
  std::vector<double> out(v);
  const auto psi_j = p.psi.row(j);
  for (int c = 0; c < v; ++c) out[c] = dot(psi_j, p.varphi.row(c));
  softmax_inplace(out);
  return out;
}

double negative_sampling_objective(const ModelParams& p, int c, int j,
                                   std::span<const int> negatives) {
  const auto psi_j = p.psi.row(j);
  double obj = log_sigmoid(dot(p.varphi.row(c), psi_j));
  for (int v : negatives) obj += log_sigmoid(-dot(p.varphi.row(v), psi_j));
  return obj;
}

MembershipVector posterior_distribution(const ModelParams& p, int w, int c) {
  const int k = p.community_count();
  const int d = p.dim();
  const auto phi_w = p.phi.row(w);
  const auto phi_c = p.phi.row(c);
  std::vector<double> h(d);
  for (int i = 0; i < d; ++i) h[i] = phi_w[i] * phi_c[i];
  MembershipVector out(k);
  for (int j = 0; j < k; ++j) out[j] = dot(h, p.psi.row(j));
  softmax_inplace(out);
  return out;
}

GumbelSample gumbel_softmax(const MembershipVector& dist, double tau,
                            std::span<const double> noise) {
  if (tau <= 0.0) throw std::invalid_argument("gumbel_softmax: tau must be > 0");
  if (noise.size() != dist.size())
    throw std::invalid_argument("gumbel_softmax: noise size mismatch");
  GumbelSample s;
  s.relaxed.resize(dist.size());
  for (std::size_t k = 0; k < dist.size(); ++k)
    s.relaxed[k] =
        (std::log(std::max(dist[k], kProbFloor)) + noise[k]) / tau;
  softmax_inplace(s.relaxed);
  s.hard = argmax(s.relaxed);
  return s;
}

MembershipVector node_membership(const ModelParams& p, const Graph& g,
                                 int w) {
  const auto nbrs = g.neighbors(w);
  if (nbrs.empty())
    throw std::invalid_argument(
        "node_membership undefined for isolated node " + std::to_string(w));
  MembershipVector acc(p.community_count(), 0.0);
  for (int c : nbrs) {
    const MembershipVector q = posterior_distribution(p, w, c);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += q[j];
  }
  const double inv = 1.0 / static_cast<double>(nbrs.size());
  for (double& x : acc) x *= inv;
  return acc;
}

CommunitySet assign_nonoverlapping(const ModelParams& p, const Graph& g) {
  const int k = p.community_count();
  std::vector<std::vector<int>> members(k);
  for (int w = 0; w < g.node_count; ++w) {
    if (g.degree(w) == 0) continue;
    const MembershipVector m = node_membership(p, g, w);
    members[argmax(m)].push_back(w);
  }
  return CommunitySet::from_members(k, g.node_count, std::move(members));
}

CommunitySet assign_overlapping(const ModelParams& p, const Graph& g) {
  const int k = p.community_count();
  std::vector<std::vector<int>> members(k);
  for (auto [u, v] : g.edges) {
    const MembershipVector q = posterior_distribution(p, u, v);
    const int j = argmax(q);
    members[j].push_back(u);
    members[j].push_back(v);
  }
  return CommunitySet::from_members(k, g.node_count, std::move(members));
}

}  // namespace vgraph
