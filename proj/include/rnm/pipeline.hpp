#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/eval.hpp"
#include "rnm/ingest.hpp"
#include "rnm/iterate.hpp"
#include "rnm/training.hpp"

namespace rnm {

// Dataset after augmentation, indexing, feature resolution and seed split.
// All pair lists are in the global id space; relation truth is forward-only.
struct PreparedData {
  GraphPair pair;
  Indexes indexes;
  Matrix features;
  SeedAlignments seeds;  // local ids, as split
  std::vector<std::pair<int, int>> train_entities;
  std::vector<std::pair<int, int>> test_entities;
  std::vector<std::pair<int, int>> relation_truth;
};

PreparedData prepare(const Dataset& ds, const RunConfig& cfg);

// Trains the encoder on the prepared split. Optionally streams the per-epoch
// loss log and saves a resumable checkpoint of the final trainer state.
EmbeddingState train_embeddings(const PreparedData& prep, const RunConfig& cfg,
                                std::ostream* train_log = nullptr,
                                const std::string& checkpoint_path = "");

struct MatchOutcome {
  DistanceState state;
  AlignmentSets sets;
  std::vector<IterationMetrics> iterations;
  RankingReport entities;
  RankingReport relations;
  bool has_relations = false;
};

using IterationDumpHook =
    std::function<void(int iteration, const DistanceState&, const AlignmentSets&)>;

// Matching iterations plus final scoring, honoring cfg.variant. Per-iteration
// Hits@1 is recorded in the metrics whenever truth is available.
MatchOutcome match_and_score(const PreparedData& prep, const EmbeddingState& emb,
                             const RunConfig& cfg, const IterationDumpHook& dump = nullptr);

struct PipelineResult {
  PreparedData data;
  EmbeddingState emb;
  MatchOutcome outcome;
};

PipelineResult run_pipeline(const Dataset& ds, const RunConfig& cfg,
                            std::ostream* train_log = nullptr,
                            const IterationDumpHook& dump = nullptr,
                            const std::string& checkpoint_path = "");

// Re-matches shared embeddings under one ablation variant.
MatchOutcome run_ablation(Variant variant, const PreparedData& prep, const EmbeddingState& emb,
                          const RunConfig& base);

// Full retrain + match at each seed ratio with the shared RNG seed.
std::vector<std::pair<double, MatchOutcome>> seed_ratio_sweep(const std::vector<double>& ratios,
                                                              const Dataset& ds,
                                                              const RunConfig& base);

}  // namespace rnm
