#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>

#include "rnm/eval.hpp"
#include "rnm/ingest.hpp"
#include "rnm/pipeline.hpp"

namespace py = pybind11;
using namespace rnm;

namespace {

std::map<std::string, std::string> to_kv(const py::dict& overrides) {
  std::map<std::string, std::string> kv;
  for (auto item : overrides)
    kv[py::str(item.first).cast<std::string>()] = py::str(item.second).cast<std::string>();
  return kv;
}

py::dict report_dict(const RankingReport& r) {
  py::dict hits;
  for (std::size_t i = 0; i < r.ks.size(); ++i) hits[py::int_(r.ks[i])] = r.hits[i];
  py::dict out;
  out["task"] = r.task;
  out["variant"] = r.variant;
  out["hits"] = hits;
  out["mrr"] = r.mrr;
  out["queries"] = r.queries;
  out["missing"] = r.missing;
  return out;
}

py::list iteration_list(const std::vector<IterationMetrics>& metrics) {
  py::list items;
  for (const IterationMetrics& m : metrics) {
    py::dict d;
    d["iteration"] = m.iteration;
    d["ent_aligned"] = m.ent_aligned;
    d["rel_aligned"] = m.rel_aligned;
    d["converged"] = m.converged;
    d["ent_hits1"] = m.ent_hits1;
    d["rel_hits1"] = m.rel_hits1;
    items.append(d);
  }
  return items;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "relation-aware neighborhood matching for KG alignment";
  m.attr("__version__") = "1.0.0";

  m.def(
      "synthesize",
      [](const std::string& out_dir, const py::dict& overrides) {
        SynthSpec spec;
        spec.apply(to_kv(overrides));
        Dataset ds;
        {
          py::gil_scoped_release release;
          ds = generate_synthetic_pair(spec);
          write_dataset(ds, out_dir);
        }
        py::dict stats;
        stats["entities_1"] = ds.pair.g1.num_entities;
        stats["entities_2"] = ds.pair.g2.num_entities;
        stats["relations_1"] = ds.pair.g1.num_relations;
        stats["relations_2"] = ds.pair.g2.num_relations;
        stats["triples_1"] = static_cast<int>(ds.pair.g1.triples.size());
        stats["triples_2"] = static_cast<int>(ds.pair.g2.triples.size());
        stats["ref_entities"] = static_cast<int>(ds.ref_entities.size());
        stats["ref_relations"] = static_cast<int>(ds.ref_relations.size());
        stats["manifest"] = spec.manifest();
        return stats;
      },
      py::arg("out_dir"), py::arg("overrides") = py::dict(),
      "Generate a synthetic aligned KG pair and write it in dataset layout.");

  m.def(
      "run",
      [](const std::string& data_dir, const py::dict& overrides) {
        RunConfig cfg;
        cfg.apply(to_kv(overrides));
        PipelineResult res;
        std::ostringstream train_log;
        {
          py::gil_scoped_release release;
          Dataset ds = load_dbp15k(data_dir);
          res = run_pipeline(ds, cfg, &train_log);
        }
        py::dict out;
        out["entity"] = report_dict(res.outcome.entities);
        out["relation"] =
            res.outcome.has_relations ? py::object(report_dict(res.outcome.relations))
                                      : py::object(py::none());
        out["iterations"] = iteration_list(res.outcome.iterations);
        out["train_log"] = train_log.str();
        out["manifest"] = cfg.manifest();
        out["ent_aligned"] = static_cast<int>(res.outcome.sets.ent_fwd.size());
        out["rel_aligned"] = static_cast<int>(res.outcome.sets.rel_fwd.size());
        return out;
      },
      py::arg("data_dir"), py::arg("overrides") = py::dict(),
      "Full pipeline: train, iterate, score. Returns reports and metrics.");

  m.def(
      "eval_state",
      [](const std::string& state_path, const std::string& truth_path, const std::string& task,
         const std::vector<int>& ks, bool folded) {
        LoadedState ls = load_state(state_path);
        RankingReport report;
        if (task == "entity") {
          auto truth = resolve_truth_file(truth_path, ls.ent_src_1, ls.ent_src_2,
                                          static_cast<int>(ls.ent_src_1.size()),
                                          static_cast<int>(ls.ent_src_2.size()),
                                          ls.entity_offset);
          report = rank_entities(ls.state, truth, ks);
        } else if (task == "relation") {
          auto truth =
              resolve_truth_file(truth_path, ls.rel_src_1, ls.rel_src_2, ls.forward_relations_1,
                                 ls.forward_relations_2, ls.relation_offset);
          RelationFolding folding{ls.relation_offset, ls.forward_relations_1,
                                  ls.forward_relations_2, folded};
          report = rank_relations(ls.state, truth, ks, folding);
        } else {
          throw std::invalid_argument("task must be 'entity' or 'relation'");
        }
        return report_dict(report);
      },
      py::arg("state_path"), py::arg("truth_path"), py::arg("task") = "entity",
      py::arg("ks") = std::vector<int>{1, 10}, py::arg("folded") = true,
      "Re-score a state dump against a source-id truth file.");

  m.def(
      "entity_distance",
      [](const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
        return entity_distance(a, b);
      },
      py::arg("a"), py::arg("b"), "L1 distance between two embedding rows.");

  m.def(
      "default_config",
      [] {
        RunConfig cfg;
        return cfg.manifest();
      },
      "The resolved default configuration, one key=value per line.");
}
