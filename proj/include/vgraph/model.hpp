#pragma once

#include <span>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/matrix.hpp"

namespace vgraph {

using MembershipVector = std::vector<double>;

// Three embedding matrices plus the Gumbel-Softmax temperature:
//   phi    V x d  node embeddings parameterizing the community prior
//   varphi V x d  node embeddings parameterizing the decoder
//   psi    K x d  community embeddings (tree-node embeddings when
//                 training a hierarchy; K is then the tree size)
struct ModelParams {
  Matrix phi;
  Matrix varphi;
  Matrix psi;
  double tau = 1.0;

  int node_count() const { return static_cast<int>(phi.rows()); }
  int community_count() const { return static_cast<int>(psi.rows()); }
  int dim() const { return static_cast<int>(phi.cols()); }
};

// Entries i.i.d. normal with mean 0 and standard deviation 1/sqrt(d),
// drawn row by row (phi, then varphi, then psi).
ModelParams init_params(int node_count, int community_count, int dim,
                        double tau, Rng& rng);

// softmax_j(phi_w . psi_j)
MembershipVector prior_distribution(const ModelParams& p, int w);

// softmax_c(psi_j . varphi_c) over all vertices
std::vector<double> decoder_distribution(const ModelParams& p, int j);

// log sigma(varphi_c . psi_j) + sum_v log sigma(-varphi_v . psi_j)
double negative_sampling_objective(const ModelParams& p, int c, int j,
                                   std::span<const int> negatives);

// softmax_j((phi_w ⊙ phi_c) . psi_j)
MembershipVector posterior_distribution(const ModelParams& p, int w, int c);

struct GumbelSample {
  std::vector<double> relaxed;  // on the simplex
  int hard = 0;                 // argmax of relaxed
};

// relaxed_k = softmax((log max(dist_k, 1e-10) + noise_k) / tau).
// Downstream forwards use the hard one-hot; gradients flow through the
// relaxed vector (straight-through contract).
GumbelSample gumbel_softmax(const MembershipVector& dist, double tau,
                            std::span<const double> noise);

// (1/|N(w)|) sum over neighbors c of posterior_distribution(w, c).
// Throws on isolated nodes.
MembershipVector node_membership(const ModelParams& p, const Graph& g, int w);

// argmax of node_membership per node; ties break toward the lowest
// community index; isolated nodes stay unassigned.
CommunitySet assign_nonoverlapping(const ModelParams& p, const Graph& g);

// Each edge goes to argmax_k q(z=k|w,c); a node belongs to the set of
// argmax communities over its incident edges.
CommunitySet assign_overlapping(const ModelParams& p, const Graph& g);

}  // namespace vgraph
