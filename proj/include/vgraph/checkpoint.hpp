#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vgraph/graph.hpp"
#include "vgraph/model.hpp"
#include "vgraph/training.hpp"

namespace vgraph {

// Versioned JSON container for a trained run: config echo, the external
// label map, final and best parameters, and the loss history. Doubles
// round-trip exactly (shortest-representation serialization).
struct Checkpoint {
  static constexpr int kVersion = 1;
  TrainConfig config;
  std::vector<std::string> labels;  // dense index -> external label
  ModelParams params;               // final
  ModelParams best_params;
  int best_iteration = 0;
  std::vector<LossRecord> history;

  static Checkpoint from_trained(const TrainedModel& tm, const Graph& g,
                                 const TrainConfig& cfg);
  bool matches_graph(const Graph& g) const;
};

void save_checkpoint(std::ostream& out, const Checkpoint& cp);
void save_checkpoint_file(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint_file(const std::string& path);

// TSV exports: external label, then the row values with full precision.
enum class EmbeddingMatrix { Phi, Varphi, Psi };
void write_embeddings_tsv(std::ostream& out, const ModelParams& p,
                          const Graph& g, EmbeddingMatrix which);

// External label then K membership probabilities; isolated nodes are
// skipped (they have no membership).
void write_membership_tsv(std::ostream& out, const ModelParams& p,
                          const Graph& g);

void write_loss_csv(std::ostream& out,
                    const std::vector<LossRecord>& history);

std::string format_double(double v);  // shortest round-trip representation

}  // namespace vgraph
