#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/kg.hpp"
#include "rnm/types.hpp"

namespace rnm {

/// Pre-aligned entity pairs split into supervision and held-out test pairs.
/// Pairs are (g1 local id, g2 local id) and one-to-one on both sides.
struct SeedAlignments {
  std::vector<std::pair<int, int>> train;
  std::vector<std::pair<int, int>> test;
  double ratio = 0.3;
};

/// Entity feature rows over the global id space (g1 rows first).
struct FeatureTable {
  Matrix rows;
  bool present = false;
  int dim() const { return static_cast<int>(rows.cols()); }
};

/// A loaded dataset: the unaugmented graph pair plus reference alignments.
/// ref_entities doubles as ground truth for synthetic data; ref_relations is
/// optional (the relation task is unsupervised, truth is evaluation-only).
struct Dataset {
  GraphPair pair;
  std::vector<std::pair<int, int>> ref_entities;   // local ids
  std::vector<std::pair<int, int>> ref_relations;  // local ids, forward relations
  FeatureTable features;
};

/// Loads a DBP15K-style directory: triples_1/2, ent_ids_1/2, rel_ids_1/2,
/// ref_ent_ids, optional ref_rel_ids and ent_features_1/2. Errors carry file
/// and line numbers.
Dataset load_dbp15k(const std::string& dir);

/// Writes a dataset in the same layout load_dbp15k reads.
void write_dataset(const Dataset& ds, const std::string& dir);

/// Loads one per-KG feature file ("id v1 ... vd"). Rows for entities missing
/// from the file are filled per `fill` (zeros | normal) and counted in a
/// warning. Dimension mismatches are an error.
Matrix load_features(const std::string& path, int dim, const KnowledgeGraph& kg,
                     const std::string& fill, std::uint64_t fill_seed);

/// Deterministic shuffle split of the reference pairs at `ratio` train share.
SeedAlignments split_seeds(const std::vector<std::pair<int, int>>& ref_pairs, double ratio,
                           std::uint64_t seed);

/// Samples a base KG, derives two views by per-view triple dropout with
/// freshly numbered ids, and attaches noisy shared features. The returned
/// ref_entities/ref_relations are the full ground-truth bijections.
Dataset generate_synthetic_pair(const SynthSpec& spec);

}  // namespace rnm
