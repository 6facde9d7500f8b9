#include "vgraph/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "json.hpp"

namespace vgraph {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols)
      throw std::runtime_error("checkpoint: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

const char* decoder_name(DecoderMode m) {
  switch (m) {
    case DecoderMode::FullSoftmax:
      return "full";
    case DecoderMode::NegativeSampling:
      return "negative";
    default:
      return "auto";
  }
}

DecoderMode decoder_from(const std::string& s) {
  if (s == "full") return DecoderMode::FullSoftmax;
  if (s == "negative") return DecoderMode::NegativeSampling;
  if (s == "auto") return DecoderMode::Auto;
  throw std::runtime_error("checkpoint: unknown decoder mode " + s);
}

json config_to_json(const TrainConfig& c) {
  return json{{"dim", c.dim},
              {"communities", c.communities},
              {"lr0", c.lr0},
              {"decay", c.decay},
              {"decay_every", c.decay_every},
              {"iters", c.iters},
              {"batch_pairs", c.batch_pairs},
              {"lambda", c.lambda},
              {"negatives", c.negatives},
              {"tau", c.tau},
              {"tau_anneal", c.tau_anneal},
              {"seed", c.seed},
              {"eval_every", c.eval_every},
              {"full_softmax_limit", c.full_softmax_limit},
              {"decoder", decoder_name(c.decoder)},
              {"smoothness", c.smoothness == SmoothnessSource::Membership
                                 ? "membership"
                                 : "prior"},
              {"tree", c.tree}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.dim = j.at("dim").get<int>();
  c.communities = j.at("communities").get<int>();
  c.lr0 = j.at("lr0").get<double>();
  c.decay = j.at("decay").get<double>();
  c.decay_every = j.at("decay_every").get<int>();
  c.iters = j.at("iters").get<int>();
  c.batch_pairs = j.at("batch_pairs").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.negatives = j.at("negatives").get<int>();
  c.tau = j.at("tau").get<double>();
  c.tau_anneal = j.at("tau_anneal").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every = j.at("eval_every").get<int>();
  c.full_softmax_limit = j.at("full_softmax_limit").get<int>();
  c.decoder = decoder_from(j.at("decoder").get<std::string>());
  c.smoothness = j.at("smoothness").get<std::string>() == "membership"
                     ? SmoothnessSource::Membership
                     : SmoothnessSource::Prior;
  c.tree = j.at("tree").get<std::vector<int>>();
  return c;
}

json params_to_json(const ModelParams& p) {
  return json{{"phi", matrix_to_json(p.phi)},
              {"varphi", matrix_to_json(p.varphi)},
              {"psi", matrix_to_json(p.psi)},
              {"tau", p.tau}};
}

ModelParams params_from_json(const json& j) {
  ModelParams p;
  p.phi = matrix_from_json(j.at("phi"));
  p.varphi = matrix_from_json(j.at("varphi"));
  p.psi = matrix_from_json(j.at("psi"));
  p.tau = j.at("tau").get<double>();
  return p;
}

}  // namespace

Checkpoint Checkpoint::from_trained(const TrainedModel& tm, const Graph& g,
                                    const TrainConfig& cfg) {
  Checkpoint cp;
  cp.config = cfg;
  cp.labels = g.labels;
  cp.params = tm.params;
  cp.best_params = tm.best_params;
  cp.best_iteration = tm.best_iteration;
  cp.history = tm.history;
  return cp;
}

bool Checkpoint::matches_graph(const Graph& g) const {
  return labels == g.labels;
}

void save_checkpoint(std::ostream& out, const Checkpoint& cp) {
  json j;
  j["format"] = "vgraph-checkpoint";
  j["version"] = Checkpoint::kVersion;
  j["config"] = config_to_json(cp.config);
  j["labels"] = cp.labels;
  j["params"] = params_to_json(cp.params);
  j["best_params"] = params_to_json(cp.best_params);
  j["best_iteration"] = cp.best_iteration;
  json hist = json::array();
  for (const LossRecord& r : cp.history)
    hist.push_back(json::array(
        {r.iteration, r.recon, r.kl, r.reg, r.total, r.lr}));
  j["history"] = std::move(hist);
  out << j.dump(1, '\t') << '\n';
}

void save_checkpoint_file(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  save_checkpoint(out, cp);
}

Checkpoint load_checkpoint(std::istream& in) {
  json j = json::parse(in);
  if (j.at("format") != "vgraph-checkpoint")
    throw std::runtime_error("not a vgraph checkpoint");
  if (j.at("version").get<int>() != Checkpoint::kVersion)
    throw std::runtime_error("unsupported checkpoint version");
  Checkpoint cp;
  cp.config = config_from_json(j.at("config"));
  cp.labels = j.at("labels").get<std::vector<std::string>>();
  cp.params = params_from_json(j.at("params"));
  cp.best_params = params_from_json(j.at("best_params"));
  cp.best_iteration = j.at("best_iteration").get<int>();
  for (const json& r : j.at("history"))
    cp.history.push_back(LossRecord{r[0].get<int>(), r[1].get<double>(),
                                    r[2].get<double>(), r[3].get<double>(),
                                    r[4].get<double>(), r[5].get<double>()});
  return cp;
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint(in);
}

void write_embeddings_tsv(std::ostream& out, const ModelParams& p,
                          const Graph& g, EmbeddingMatrix which) {
  const Matrix& m = which == EmbeddingMatrix::Phi      ? p.phi
                    : which == EmbeddingMatrix::Varphi ? p.varphi
                                                       : p.psi;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (which == EmbeddingMatrix::Psi)
      out << "community_" << r;
    else
      out << g.labels[r];
    for (std::size_t c = 0; c < m.cols(); ++c)
      out << '\t' << format_double(m(r, c));
    out << '\n';
  }
}

void write_membership_tsv(std::ostream& out, const ModelParams& p,
                          const Graph& g) {
  for (int v = 0; v < g.node_count; ++v) {
    if (g.degree(v) == 0) continue;
    const MembershipVector m = node_membership(p, g, v);
    out << g.labels[v];
    for (double x : m) out << '\t' << format_double(x);
    out << '\n';
  }
}

void write_loss_csv(std::ostream& out,
                    const std::vector<LossRecord>& history) {
  out << "iteration,recon,kl,reg,total,lr\n";
  for (const LossRecord& r : history)
    out << r.iteration << ',' << format_double(r.recon) << ','
        << format_double(r.kl) << ',' << format_double(r.reg) << ','
        << format_double(r.total) << ',' << format_double(r.lr) << '\n';
}

}  // namespace vgraph
