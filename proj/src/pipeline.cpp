#include "rnm/pipeline.hpp"

#include <random>
#include <stdexcept>

namespace rnm {

namespace {

RunConfig apply_variant(const RunConfig& cfg) {
  RunConfig out = cfg;
  switch (cfg.variant) {
    case Variant::Full: break;
    case Variant::NoAP: out.match.use_alignment_prob = false; break;
    case Variant::NoIS: out.iter.max_iters = 1; break;
    case Variant::NoRM: out.match.relation_aware = false; break;
  }
  return out;
}

Matrix resolve_features(const Dataset& ds, const RunConfig& cfg, int total_entities) {
  if (ds.features.present) {
    if (ds.features.rows.rows() != total_entities)
      throw std::invalid_argument("feature table row count does not match entity count");
    return ds.features.rows;
  }
  Matrix f = Matrix::Zero(total_entities, cfg.hidden_dim);
  if (cfg.feature_fill == "normal") {
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j) f(i, j) = dist(rng);
  }
  return f;
}

}  // namespace

PreparedData prepare(const Dataset& ds, const RunConfig& cfg) {
  cfg.validate();
  PreparedData prep;
  prep.pair = add_reverse_relations(ds.pair);
  prep.indexes = build_indexes(prep.pair);
  prep.features = resolve_features(ds, cfg, prep.pair.total_entities());
  prep.seeds = split_seeds(ds.ref_entities, cfg.seed_ratio, cfg.seed);

  const int ent_off = prep.pair.entity_offset();
  const int rel_off = prep.pair.relation_offset();
  prep.train_entities.reserve(prep.seeds.train.size());
  for (auto [a, b] : prep.seeds.train) prep.train_entities.emplace_back(a, b + ent_off);
  prep.test_entities.reserve(prep.seeds.test.size());
  for (auto [a, b] : prep.seeds.test) prep.test_entities.emplace_back(a, b + ent_off);
  prep.relation_truth.reserve(ds.ref_relations.size());
  for (auto [a, b] : ds.ref_relations) prep.relation_truth.emplace_back(a, b + rel_off);
  return prep;
}

EmbeddingState train_embeddings(const PreparedData& prep, const RunConfig& cfg,
                                std::ostream* train_log, const std::string& checkpoint_path) {
  Trainer trainer(prep.pair, prep.train_entities, prep.features, cfg.train, cfg.encoder,
                  cfg.seed);
  EmbeddingState emb = trainer.run(train_log);
  if (!checkpoint_path.empty()) trainer.save_checkpoint(checkpoint_path);
  return emb;
}

MatchOutcome match_and_score(const PreparedData& prep, const EmbeddingState& emb,
                             const RunConfig& cfg, const IterationDumpHook& dump) {
  RunConfig eff = apply_variant(cfg);
  DistanceState init =
      init_distances(emb, prep.train_entities, prep.pair, eff.match, eff.threads);

  RelationFolding folding = RelationFolding::from_pair(prep.pair, eff.folded_relations);
  IterationHook hook = [&](const DistanceState& st, const AlignmentSets& sets,
                           IterationMetrics& m) {
    if (!prep.test_entities.empty())
      m.ent_hits1 = rank_entities(st, prep.test_entities, {1}).hits_at(1);
    if (!prep.relation_truth.empty())
      m.rel_hits1 = rank_relations(st, prep.relation_truth, {1}, folding).hits_at(1);
    if (dump) dump(m.iteration, st, sets);
  };

  IterateResult itr =
      run_iterations(std::move(init), prep.indexes, eff.match, eff.iter, eff.threads, hook);

  MatchOutcome out;
  out.state = std::move(itr.state);
  out.sets = std::move(itr.sets);
  out.iterations = std::move(itr.metrics);
  out.entities = rank_entities(out.state, prep.test_entities, eff.eval_ks);
  out.entities.variant = to_string(eff.variant);
  if (!prep.relation_truth.empty()) {
    out.relations = rank_relations(out.state, prep.relation_truth, eff.eval_ks, folding);
    out.relations.variant = to_string(eff.variant);
    out.has_relations = true;
  }
  return out;
}

PipelineResult run_pipeline(const Dataset& ds, const RunConfig& cfg, std::ostream* train_log,
                            const IterationDumpHook& dump, const std::string& checkpoint_path) {
  PipelineResult res;
  res.data = prepare(ds, cfg);
  res.emb = train_embeddings(res.data, cfg, train_log, checkpoint_path);
  res.outcome = match_and_score(res.data, res.emb, cfg, dump);
  return res;
}

MatchOutcome run_ablation(Variant variant, const PreparedData& prep, const EmbeddingState& emb,
                          const RunConfig& base) {
  RunConfig cfg = base;
  cfg.variant = variant;
  return match_and_score(prep, emb, cfg);
}

std::vector<std::pair<double, MatchOutcome>> seed_ratio_sweep(const std::vector<double>& ratios,
                                                              const Dataset& ds,
                                                              const RunConfig& base) {
  std::vector<std::pair<double, MatchOutcome>> out;
  out.reserve(ratios.size());
  for (double ratio : ratios) {
    RunConfig cfg = base;
    cfg.seed_ratio = ratio;
    PipelineResult res = run_pipeline(ds, cfg);
    out.emplace_back(ratio, std::move(res.outcome));
  }
  return out;
}

}  // namespace rnm
