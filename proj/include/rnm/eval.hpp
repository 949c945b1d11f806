#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "rnm/iterate.hpp"

namespace rnm {

struct RankingReport {
  std::string task;     // "entity" | "relation"
  std::string variant = "full";
  std::vector<int> ks;
  std::vector<double> hits;  // percent, aligned with ks
  double mrr = 0.0;
  std::vector<int> ranks;    // per query, 1-based
  int queries = 0;
  int missing = 0;           // true target absent from the candidate row

  double hits_at(int k) const;
  std::string summary() const;  // "hits@1=.. hits@10=.. mrr=.."
};

// Ascending-distance rank of each true target within its source's candidate
// row. Training seeds are skipped as queries; a target missing from the row
// ranks row-size + 1.
RankingReport rank_entities(const DistanceState& state,
                            const std::vector<std::pair<int, int>>& truth,
                            const std::vector<int>& ks);

// Maps augmented relation ids onto forward ones so a prediction in either
// orientation counts for the forward pair.
struct RelationFolding {
  int relation_offset = 0;
  int forward_1 = 0;
  int forward_2 = 0;
  bool enabled = true;

  int fold(int global_rel) const;
  static RelationFolding from_pair(const GraphPair& pair, bool enabled);
};

RankingReport rank_relations(const DistanceState& state,
                             const std::vector<std::pair<int, int>>& truth,
                             const std::vector<int>& ks, const RelationFolding& folding);

// One "task variant dataset ratio hits... mrr" record per report; plot-ready
// tab-separated text with a header line.
void write_report_file(const std::string& path, const std::vector<RankingReport>& reports,
                       const std::string& dataset, double ratio);

// Parses a "src_id1<TAB>src_id2" truth file into internal (KG1 id, global KG2
// id) pairs via the source-id tables, consulting only the first limit1/limit2
// table entries. Unknown ids are an error naming the id and line.
std::vector<std::pair<int, int>> resolve_truth_file(const std::string& path,
                                                    const std::vector<long long>& src1,
                                                    const std::vector<long long>& src2,
                                                    int limit1, int limit2, int offset2);

}  // namespace rnm
