#include "vgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "vgraph/common.hpp"

namespace vgraph {

int LabelSet::labeled_count() const {
  int n = 0;
  for (const auto& l : label)
    if (l.has_value()) ++n;
  return n;
}

LabelSet load_labels(std::istream& in, const Graph& g,
                     std::size_t* unknown_dropped) {
  LabelSet ls;
  ls.label.resize(g.node_count);
  std::map<std::string, int> classes;
  std::size_t unknown = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream iss(line);
    std::string node, cls, extra;
    if (!(iss >> node)) continue;
    if (node[0] == '#') continue;
    if (!(iss >> cls) || (iss >> extra))
      throw ParseError("expected node label and class label", lineno);
    auto it = g.label_index.find(node);
    if (it == g.label_index.end()) {
      ++unknown;
      continue;
    }
    auto [cit, inserted] =
        classes.try_emplace(cls, static_cast<int>(classes.size()));
    if (inserted) ls.class_names.push_back(cls);
    ls.label[it->second] = cit->second;
  }
  if (unknown_dropped) *unknown_dropped = unknown;
  return ls;
}

LabelSet load_labels_file(const std::string& path, const Graph& g,
                          std::size_t* unknown_dropped) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open label file: " + path);
  return load_labels(in, g, unknown_dropped);
}

namespace {

// community id per node, or -1; throws on overlapping input
std::vector<int> single_assignment(const CommunitySet& cs,
                                   const char* which) {
  std::vector<int> out(cs.membership.size(), -1);
  for (std::size_t v = 0; v < cs.membership.size(); ++v) {
    if (cs.membership[v].size() > 1)
      throw std::invalid_argument(std::string("nmi: ") + which +
                                  " side is overlapping");
    if (!cs.membership[v].empty()) out[v] = cs.membership[v][0];
  }
  return out;
}

double entropy(const std::vector<int>& counts, int n) {
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

double nmi(const CommunitySet& a, const CommunitySet& b) {
  if (a.membership.size() != b.membership.size())
    throw std::invalid_argument("nmi: node sets differ");
  const std::vector<int> ca = single_assignment(a, "first");
  const std::vector<int> cb = single_assignment(b, "second");

  int n = 0;
  std::vector<int> na(a.k, 0), nb(b.k, 0);
  std::map<std::pair<int, int>, int> joint;
  for (std::size_t v = 0; v < ca.size(); ++v) {
    if (ca[v] < 0 || cb[v] < 0) continue;
    ++n;
    ++na[ca[v]];
    ++nb[cb[v]];
    ++joint[{ca[v], cb[v]}];
  }
  if (n == 0) throw std::invalid_argument("nmi: no commonly assigned nodes");

  double mi = 0.0;
  for (const auto& [cell, cnt] : joint) {
    const double pij = static_cast<double>(cnt) / n;
    const double pi = static_cast<double>(na[cell.first]) / n;
    const double pj = static_cast<double>(nb[cell.second]) / n;
    mi += pij * std::log(pij / (pi * pj));
  }
  const double ha = entropy(na, n);
  const double hb = entropy(nb, n);
  if (ha + hb == 0.0) return 1.0;  // both single-cluster
  const double value = 2.0 * mi / (ha + hb);
  return std::clamp(value, 0.0, 1.0);
}

double modularity(const Graph& g, const CommunitySet& partition) {
  if (g.edges.empty()) throw std::invalid_argument("modularity: empty graph");
  const std::vector<int> assign = single_assignment(partition, "partition");
  const double m = static_cast<double>(g.edges.size());
  std::vector<double> internal(partition.k, 0.0), degree(partition.k, 0.0);
  for (auto [u, v] : g.edges)
    if (assign[u] >= 0 && assign[u] == assign[v]) internal[assign[u]] += 1.0;
  for (int v = 0; v < g.node_count; ++v)
    if (assign[v] >= 0) degree[assign[v]] += g.degree(v);
  double q = 0.0;
  for (int c = 0; c < partition.k; ++c) {
    const double frac = degree[c] / (2.0 * m);
    q += internal[c] / m - frac * frac;
  }
  return q;
}

namespace {

double set_overlap(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(inter);
}

double best_match_score(const CommunitySet& from, const CommunitySet& to,
                        bool jaccard) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& fa : from.members) {
    if (fa.empty()) continue;
    ++counted;
    double best = 0.0;
    for (const auto& tb : to.members) {
      if (tb.empty()) continue;
      const double inter = set_overlap(fa, tb);
      const double score =
          jaccard ? inter / (static_cast<double>(fa.size() + tb.size()) - inter)
                  : 2.0 * inter / static_cast<double>(fa.size() + tb.size());
      best = std::max(best, score);
    }
    sum += best;
  }
  if (counted == 0)
    throw std::invalid_argument("overlap score: empty community set");
  return sum / counted;
}

double overlap_metric(const CommunitySet& pred, const CommunitySet& truth,
                      bool jaccard) {
  return 0.5 * (best_match_score(truth, pred, jaccard) +
                best_match_score(pred, truth, jaccard));
}

}  // namespace

double overlapping_f1(const CommunitySet& pred, const CommunitySet& truth) {
  return overlap_metric(pred, truth, false);
}

double overlapping_jaccard(const CommunitySet& pred,
                           const CommunitySet& truth) {
  return overlap_metric(pred, truth, true);
}

namespace {

// Binary logistic regression, full-batch gradient descent with Armijo
// backtracking. Objective: sum_i log(1 + exp(-y_i s_i)) + 0.5 |w|^2
// (bias unpenalized).
std::vector<double> fit_binary_logistic(const Matrix& x,
                                        const std::vector<int>& rows,
                                        const std::vector<char>& positive) {
  const int d = static_cast<int>(x.cols());
  std::vector<double> w(d + 1, 0.0);  // last entry: bias
  std::vector<double> grad(d + 1), trial(d + 1);

  auto objective = [&](const std::vector<double>& wv) {
    double obj = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto xi = x.row(rows[i]);
      double s = wv[d];
      for (int f = 0; f < d; ++f) s += wv[f] * xi[f];
      const double ys = positive[i] ? s : -s;
      obj += ys >= 0 ? std::log1p(std::exp(-ys)) : -ys + std::log1p(std::exp(ys));
    }
    for (int f = 0; f < d; ++f) obj += 0.5 * wv[f] * wv[f];
    return obj;
  };

  double obj = objective(w);
  double step = 1.0 / (1.0 + static_cast<double>(rows.size()));
  for (int iter = 0; iter < 500; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto xi = x.row(rows[i]);
      double s = w[d];
      for (int f = 0; f < d; ++f) s += w[f] * xi[f];
      const double y = positive[i] ? 1.0 : -1.0;
      const double coef = -y * sigmoid(-y * s);
      for (int f = 0; f < d; ++f) grad[f] += coef * xi[f];
      grad[d] += coef;
    }
    for (int f = 0; f < d; ++f) grad[f] += w[f];

    double gnorm2 = 0.0;
    for (double v : grad) gnorm2 += v * v;
    if (gnorm2 < 1e-12) break;

    double t = step * 4.0;
    double next = obj;
    for (int bt = 0; bt < 40; ++bt) {
      for (int f = 0; f <= d; ++f) trial[f] = w[f] - t * grad[f];
      next = objective(trial);
      if (next <= obj - 1e-4 * t * gnorm2) break;
      t *= 0.5;
    }
    if (next >= obj - 1e-14 * std::abs(obj)) break;
    w.swap(trial);
    obj = next;
    step = t;
  }
  return w;
}

}  // namespace

ClassificationScores classify_nodes(const Matrix& embeddings,
                                    const LabelSet& labels,
                                    double train_fraction,
                                    std::uint64_t seed) {
  std::vector<int> nodes;
  for (std::size_t v = 0; v < labels.label.size(); ++v)
    if (labels.label[v].has_value()) nodes.push_back(static_cast<int>(v));
  if (nodes.size() < 2)
    throw std::invalid_argument("classify_nodes: not enough labeled nodes");

  // Fisher-Yates with the deterministic RNG
  Rng rng(seed);
  for (std::size_t i = nodes.size() - 1; i > 0; --i) {
    const std::size_t j = rng.index(i + 1);
    std::swap(nodes[i], nodes[j]);
  }
  const int ntrain =
      static_cast<int>(std::floor(train_fraction * nodes.size()));
  if (ntrain < 1 || ntrain >= static_cast<int>(nodes.size()))
    throw std::invalid_argument("classify_nodes: degenerate split");
  const std::vector<int> train(nodes.begin(), nodes.begin() + ntrain);
  const std::vector<int> test(nodes.begin() + ntrain, nodes.end());

  const int nclass = labels.class_count();
  std::vector<char> in_train(nclass, 0);
  for (int v : train) in_train[*labels.label[v]] = 1;
  int train_classes = 0;
  for (char c : in_train) train_classes += c;
  if (train_classes < 2)
    throw std::invalid_argument(
        "classify_nodes: need at least two classes in the training split");

  ClassificationScores out;
  out.train_count = static_cast<int>(train.size());
  out.test_count = static_cast<int>(test.size());
  out.missing_train_class = train_classes < nclass;

  const int d = static_cast<int>(embeddings.cols());
  Matrix weights(nclass, d + 1);
  std::vector<char> positive(train.size());
  for (int cls = 0; cls < nclass; ++cls) {
    if (!in_train[cls]) continue;
    for (std::size_t i = 0; i < train.size(); ++i)
      positive[i] = *labels.label[train[i]] == cls;
    const std::vector<double> w =
        fit_binary_logistic(embeddings, train, positive);
    for (int f = 0; f <= d; ++f) weights(cls, f) = w[f];
  }

  // predict by the highest one-vs-rest score among trained classes
  std::vector<int> predicted(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto xi = embeddings.row(test[i]);
    int best = -1;
    double best_s = 0.0;
    for (int cls = 0; cls < nclass; ++cls) {
      if (!in_train[cls]) continue;
      double s = weights(cls, d);
      for (int f = 0; f < d; ++f) s += weights(cls, f) * xi[f];
      if (best < 0 || s > best_s) {
        best = cls;
        best_s = s;
      }
    }
    predicted[i] = best;
  }

  int correct = 0;
  std::vector<int> tp(nclass, 0), fp(nclass, 0), fn(nclass, 0);
  std::vector<char> in_test(nclass, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int truth = *labels.label[test[i]];
    in_test[truth] = 1;
    if (predicted[i] == truth) {
      ++correct;
      ++tp[truth];
    } else {
      ++fp[predicted[i]];
      ++fn[truth];
    }
  }
  out.micro_f1 = static_cast<double>(correct) / test.size();

  double macro = 0.0;
  int test_classes = 0;
  for (int cls = 0; cls < nclass; ++cls) {
    if (!in_test[cls]) continue;
    ++test_classes;
    const double denom = 2.0 * tp[cls] + fp[cls] + fn[cls];
    macro += denom > 0 ? 2.0 * tp[cls] / denom : 0.0;
  }
  out.macro_f1 = test_classes > 0 ? macro / test_classes : 0.0;
  return out;
}

}  // namespace vgraph
