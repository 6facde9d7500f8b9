#pragma once

#include <span>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"

namespace vgraph::oracle {

// Slow, obviously-correct references for small instances. Naive summation
// in a fixed order; never used on the hot path.

// log sum_j decoder(j)_c * prior(w)_j by direct summation.
double exact_edge_loglik(const ModelParams& p, int w, int c);

// sum_j q_j log decoder(j)_c - KL(q || prior(w)) by full enumeration,
// with q the model posterior q(.|w,c).
double exact_elbo(const ModelParams& p, int w, int c);

// Same bound with an explicit variational distribution.
double exact_elbo(const ModelParams& p, int w, int c,
                  std::span<const double> q);

// True posterior over z for edge (w,c) by Bayes rule on the Eq.-1 factors.
std::vector<double> bayes_posterior(const ModelParams& p, int w, int c);

// Naive recomputation of the neighbor-aggregated membership of every
// non-isolated node; isolated nodes get an empty vector.
std::vector<std::vector<double>> brute_force_memberships(const ModelParams& p,
                                                         const Graph& g);

}  // namespace vgraph::oracle
