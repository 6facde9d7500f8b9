#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"
#include "vgraph/training.hpp"

namespace vgtest {

using namespace vgraph;

inline Graph graph_from_pairs(const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::pair<std::string, std::string>> raw;
  for (auto [u, v] : edges)
    raw.emplace_back(std::to_string(u), std::to_string(v));
  return build_graph(raw);
}

inline Graph triangle_graph() { return graph_from_pairs({{0, 1}, {1, 2}, {0, 2}}); }

inline ModelParams random_params(int v, int k, int d, std::uint64_t seed,
                                 double scale = 1.0) {
  Rng rng(seed);
  ModelParams p = init_params(v, k, d, 1.0, rng);
  if (scale != 1.0) {
    for (Matrix* m : {&p.phi, &p.varphi, &p.psi})
      for (std::size_t i = 0; i < m->rows(); ++i)
        for (std::size_t j = 0; j < m->cols(); ++j) (*m)(i, j) *= scale;
  }
  return p;
}

inline double rel_err_l2(const Matrix& a, const Matrix& b) {
  double num = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double diff = a(i, j) - b(i, j);
      num += diff * diff;
      na += a(i, j) * a(i, j);
      nb += b(i, j) * b(i, j);
    }
  const double denom = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(num) / denom;
}

// Central finite differences of a scalar function of the parameters.
template <typename F>
Gradients finite_diff(ModelParams p, F f, double h) {
  Gradients g = Gradients::like(p);
  auto sweep = [&](Matrix& pm, Matrix& gm) {
    for (std::size_t i = 0; i < pm.rows(); ++i)
      for (std::size_t j = 0; j < pm.cols(); ++j) {
        const double orig = pm(i, j);
        pm(i, j) = orig + h;
        const double fp = f(p);
        pm(i, j) = orig - h;
        const double fm = f(p);
        pm(i, j) = orig;
        gm(i, j) = (fp - fm) / (2.0 * h);
      }
  };
  sweep(p.phi, g.phi);
  sweep(p.varphi, g.varphi);
  sweep(p.psi, g.psi);
  return g;
}

}  // namespace vgtest
