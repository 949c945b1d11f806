#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rnm/eval.hpp"
#include "rnm/ingest.hpp"
#include "rnm/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rnm;

namespace {

// Per-stage exit codes.
constexpr int kConfigError = 2;
constexpr int kIngestError = 3;
constexpr int kTrainError = 4;
constexpr int kMatchError = 5;
constexpr int kEvalError = 6;

std::map<std::string, std::string> kv_from_sets(const std::vector<std::string>& sets) {
  std::map<std::string, std::string> kv;
  for (const std::string& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);  // later --set wins
  }
  return kv;
}

int fail(int code, const std::string& stage, const std::exception& e) {
  std::cerr << "error [" << stage << "]: " << e.what() << "\n";
  return code;
}

std::string dataset_name(const std::string& dir) {
  fs::path p(dir);
  if (p.has_filename()) return p.filename().string();
  return p.parent_path().filename().string();
}

struct RunFlags {
  std::string data_dir, out_dir, config_file;
  std::vector<std::string> sets;
  std::string variant;
  std::uint64_t seed = 0;
  double seed_ratio = 0;
  int threads = 0, iters = 0;
};

int cmd_synth(const std::string& spec_file, const std::vector<std::string>& sets,
              const std::string& out_dir) {
  SynthSpec spec;
  try {
    if (!spec_file.empty()) spec = SynthSpec::from_file(spec_file);
    spec.apply(kv_from_sets(sets));
  } catch (const std::exception& e) {
    return fail(kConfigError, "config", e);
  }
  try {
    fs::create_directories(out_dir);
    Dataset ds = generate_synthetic_pair(spec);
    write_dataset(ds, out_dir);
    std::ofstream manifest(fs::path(out_dir) / "synth_manifest.txt");
    manifest << spec.manifest();
    if (!manifest) throw std::runtime_error("cannot write synth manifest");
  } catch (const std::exception& e) {
    return fail(kIngestError, "synth", e);
  }
  std::cout << "wrote synthetic dataset to " << out_dir << "\n";
  return 0;
}

int cmd_run(const CLI::App& cmd, const RunFlags& f) {
  RunConfig cfg;
  fs::path out(f.out_dir);
  try {
    if (!f.config_file.empty()) cfg.apply(parse_kv_file(f.config_file));
    cfg.apply(kv_from_sets(f.sets));
    std::map<std::string, std::string> flag_kv;
    if (cmd.count("--variant")) flag_kv["variant"] = f.variant;
    if (cmd.count("--seed")) flag_kv["seed"] = std::to_string(f.seed);
    if (cmd.count("--seed-ratio")) flag_kv["seed_ratio"] = std::to_string(f.seed_ratio);
    if (cmd.count("--threads")) flag_kv["threads"] = std::to_string(f.threads);
    if (cmd.count("--iters")) flag_kv["max_iters"] = std::to_string(f.iters);
    cfg.apply(flag_kv);
    fs::create_directories(out);
    std::ofstream manifest(out / "manifest.txt");
    manifest << "data=" << f.data_dir << "\n"
             << "dataset=" << dataset_name(f.data_dir) << "\n"
             << cfg.manifest();
    if (!manifest) throw std::runtime_error("cannot write manifest under " + f.out_dir);
  } catch (const std::exception& e) {
    return fail(kConfigError, "config", e);
  }

  Dataset ds;
  try {
    ds = load_dbp15k(f.data_dir);
  } catch (const std::exception& e) {
    return fail(kIngestError, "ingest", e);
  }

  PreparedData prep;
  EmbeddingState emb;
  try {
    prep = prepare(ds, cfg);
    std::ofstream train_log(out / "train.log");
    emb = train_embeddings(prep, cfg, &train_log, (out / "checkpoint.bin").string());
  } catch (const std::exception& e) {
    return fail(kTrainError, "train", e);
  }

  MatchOutcome outcome;
  try {
    IterationDumpHook dump;
    if (cfg.dump_iterations)
      dump = [&](int iter, const DistanceState& st, const AlignmentSets& sets) {
        save_state(st, sets, prep.pair,
                   (out / ("state_iter_" + std::to_string(iter) + ".bin")).string());
      };
    outcome = match_and_score(prep, emb, cfg, dump);
  } catch (const std::exception& e) {
    return fail(kMatchError, "match", e);
  }

  try {
    save_state(outcome.state, outcome.sets, prep.pair, (out / "state.bin").string());
    write_alignment_files(outcome.state, outcome.sets, prep.pair,
                          (out / "alignments_entities.tsv").string(),
                          (out / "alignments_relations.tsv").string());

    std::ofstream test_file(out / "test_entities.tsv");
    for (auto [a, b] : prep.seeds.test)
      test_file << prep.pair.g1.entity_src_ids[a] << '\t' << prep.pair.g2.entity_src_ids[b]
                << '\n';
    if (!test_file) throw std::runtime_error("cannot write test_entities.tsv");

    std::ofstream metrics(out / "metrics.tsv");
    metrics << "iteration\tent_aligned\trel_aligned\tconverged\tent_hits1\trel_hits1\n";
    for (const IterationMetrics& m : outcome.iterations)
      metrics << m.iteration << '\t' << m.ent_aligned << '\t' << m.rel_aligned << '\t'
              << (m.converged ? "true" : "false") << '\t' << m.ent_hits1 << '\t' << m.rel_hits1
              << '\n';
    if (!metrics) throw std::runtime_error("cannot write metrics.tsv");

    std::vector<RankingReport> reports = {outcome.entities};
    if (outcome.has_relations) reports.push_back(outcome.relations);
    write_report_file((out / "report.tsv").string(), reports, dataset_name(f.data_dir),
                      cfg.seed_ratio);

    std::cout << "entity: " << outcome.entities.summary() << "\n";
    if (outcome.has_relations) std::cout << "relation: " << outcome.relations.summary() << "\n";
    for (const IterationMetrics& m : outcome.iterations)
      std::cout << "iteration " << m.iteration << ": |L_e|=" << m.ent_aligned
                << " |L_r|=" << m.rel_aligned << (m.converged ? " (converged)" : "") << "\n";
  } catch (const std::exception& e) {
    return fail(kEvalError, "eval", e);
  }
  return 0;
}

int cmd_eval(const std::string& state_file, const std::string& truth_file,
             const std::string& task, const std::string& ks_text, bool unfolded,
             const std::string& out_file) {
  std::vector<int> ks;
  try {
    std::stringstream ss(ks_text);
    std::string item;
    while (std::getline(ss, item, ',')) ks.push_back(std::stoi(item));
    if (ks.empty()) throw std::runtime_error("--ks must name at least one cutoff");
    if (task != "entity" && task != "relation")
      throw std::runtime_error("--task must be entity or relation");
  } catch (const std::exception& e) {
    return fail(kConfigError, "config", e);
  }

  try {
    LoadedState ls = load_state(state_file);
    RankingReport report;
    if (task == "entity") {
      auto truth = resolve_truth_file(truth_file, ls.ent_src_1, ls.ent_src_2,
                                 static_cast<int>(ls.ent_src_1.size()),
                                 static_cast<int>(ls.ent_src_2.size()), ls.entity_offset);
      report = rank_entities(ls.state, truth, ks);
    } else {
      // Source ids resolve to forward relations; reverses share their ids.
      auto truth = resolve_truth_file(truth_file, ls.rel_src_1, ls.rel_src_2, ls.forward_relations_1,
                                 ls.forward_relations_2, ls.relation_offset);
      RelationFolding folding{ls.relation_offset, ls.forward_relations_1, ls.forward_relations_2,
                              !unfolded};
      report = rank_relations(ls.state, truth, ks, folding);
    }
    std::cout << report.task << ": " << report.summary() << "\n";
    if (!out_file.empty()) write_report_file(out_file, {report}, state_file, 0.0);
  } catch (const std::exception& e) {
    return fail(kEvalError, "eval", e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relation-aware neighborhood matching for KG alignment"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic aligned KG pair");
  std::string synth_spec, synth_out;
  std::vector<std::string> synth_sets;
  synth->add_option("--spec", synth_spec, "key=value spec file");
  synth->add_option("--set", synth_sets, "spec override key=value (repeatable)");
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  auto* run = app.add_subcommand("run", "train, iterate and evaluate");
  RunFlags rf;
  run->add_option("--data", rf.data_dir, "dataset directory")->required();
  run->add_option("--out", rf.out_dir, "run output directory")->required();
  run->add_option("--config", rf.config_file, "key=value config file");
  run->add_option("--set", rf.sets, "config override key=value (repeatable)");
  run->add_option("--variant", rf.variant, "full | -AP | -IS | -RM");
  run->add_option("--seed", rf.seed, "RNG seed");
  run->add_option("--seed-ratio", rf.seed_ratio, "train share of reference pairs");
  run->add_option("--threads", rf.threads, "worker threads for matching");
  run->add_option("--iters", rf.iters, "maximum matching iterations");

  auto* eval = app.add_subcommand("eval", "re-score a state dump against a truth file");
  std::string eval_state, eval_truth, eval_task = "entity", eval_ks = "1,10", eval_out;
  bool eval_unfolded = false;
  eval->add_option("--state", eval_state, "state dump file")->required();
  eval->add_option("--truth", eval_truth, "tab-separated id pair file")->required();
  eval->add_option("--task", eval_task, "entity | relation");
  eval->add_option("--ks", eval_ks, "comma-separated Hits@k cutoffs");
  eval->add_flag("--unfolded", eval_unfolded, "score relations without reverse folding");
  eval->add_option("--out", eval_out, "also write the report to this file");

  CLI11_PARSE(app, argc, argv);

  if (*synth) return cmd_synth(synth_spec, synth_sets, synth_out);
  if (*run) return cmd_run(*run, rf);
  return cmd_eval(eval_state, eval_truth, eval_task, eval_ks, eval_unfolded, eval_out);
}
