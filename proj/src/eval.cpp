#include "rnm/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace rnm {

namespace {

void finish_report(RankingReport& r) {
  if (r.ranks.empty()) throw std::runtime_error("ranking has no usable queries");
  r.queries = static_cast<int>(r.ranks.size());
  r.hits.clear();
  for (int k : r.ks) {
    int hit = 0;
    for (int rank : r.ranks)
      if (rank <= k) ++hit;
    r.hits.push_back(100.0 * hit / r.queries);
  }
  double sum = 0.0;
  for (int rank : r.ranks) sum += 1.0 / rank;
  r.mrr = sum / r.queries;
}

}  // namespace

double RankingReport::hits_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return hits[i];
  throw std::invalid_argument("hits@" + std::to_string(k) + " was not computed");
}

std::string RankingReport::summary() const {
  std::ostringstream out;
  out << std::fixed;
  for (std::size_t i = 0; i < ks.size(); ++i)
    out << "hits@" << ks[i] << "=" << std::setprecision(2) << hits[i] << " ";
  out << "mrr=" << std::setprecision(3) << mrr;
  return out.str();
}

RankingReport rank_entities(const DistanceState& state,
                            const std::vector<std::pair<int, int>>& truth,
                            const std::vector<int>& ks) {
  if (truth.empty()) throw std::invalid_argument("empty ground truth");
  RankingReport r;
  r.task = "entity";
  r.ks = ks;
  for (auto [a, b] : truth) {
    if (state.is_seed(a)) continue;
    const auto& row = state.ent.at(a);
    int rank = static_cast<int>(row.size()) + 1;
    bool found = false;
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i].target == b) {
        rank = static_cast<int>(i) + 1;
        found = true;
        break;
      }
    if (!found) ++r.missing;
    r.ranks.push_back(rank);
  }
  finish_report(r);
  return r;
}

int RelationFolding::fold(int global_rel) const {
  if (!enabled) return global_rel;
  if (global_rel < relation_offset)
    return global_rel >= forward_1 ? global_rel - forward_1 : global_rel;
  int local = global_rel - relation_offset;
  if (local >= forward_2) local -= forward_2;
  return relation_offset + local;
}

RelationFolding RelationFolding::from_pair(const GraphPair& pair, bool enabled) {
  return {pair.relation_offset(), pair.g1.forward_relations, pair.g2.forward_relations, enabled};
}

RankingReport rank_relations(const DistanceState& state,
                             const std::vector<std::pair<int, int>>& truth,
                             const std::vector<int>& ks, const RelationFolding& folding) {
  if (truth.empty()) throw std::invalid_argument("empty ground truth");
  RankingReport r;
  r.task = "relation";
  r.ks = ks;
  for (auto [a, b] : truth) {
    const auto& row = state.rel.at(a);
    const int want = folding.fold(b);
    // Rank among distinct folded targets in row order so a hit in either
    // orientation counts once.
    std::unordered_set<int> seen;
    int rank = 0, position = 0;
    for (const CandEntry& e : row) {
      int folded = folding.fold(e.target);
      if (!seen.insert(folded).second) continue;
      ++position;
      if (folded == want) {
        rank = position;
        break;
      }
    }
    if (rank == 0) {
      rank = static_cast<int>(row.size()) + 1;
      ++r.missing;
    }
    r.ranks.push_back(rank);
  }
  finish_report(r);
  return r;
}

std::vector<std::pair<int, int>> resolve_truth_file(const std::string& path,
                                                    const std::vector<long long>& src1,
                                                    const std::vector<long long>& src2,
                                                    int limit1, int limit2, int offset2) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open truth file: " + path);
  std::unordered_map<long long, int> map1, map2;
  for (int i = 0; i < limit1 && i < static_cast<int>(src1.size()); ++i) map1.emplace(src1[i], i);
  for (int i = 0; i < limit2 && i < static_cast<int>(src2.size()); ++i) map2.emplace(src2[i], i);
  std::vector<std::pair<int, int>> truth;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a >> b))
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two ids");
    auto it1 = map1.find(a);
    if (it1 == map1.end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown KG1 id " +
                               std::to_string(a));
    auto it2 = map2.find(b);
    if (it2 == map2.end())
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unknown KG2 id " +
                               std::to_string(b));
    truth.emplace_back(it1->second, it2->second + offset2);
  }
  return truth;
}

void write_report_file(const std::string& path, const std::vector<RankingReport>& reports,
                       const std::string& dataset, double ratio) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << "task\tvariant\tdataset\tratio";
  if (!reports.empty())
    for (int k : reports.front().ks) out << "\thits@" << k;
  out << "\tmrr\tqueries\tmissing\n";
  out << std::fixed;
  for (const RankingReport& r : reports) {
    out << r.task << '\t' << r.variant << '\t' << dataset << '\t' << std::setprecision(2) << ratio;
    for (double h : r.hits) out << '\t' << std::setprecision(2) << h;
    out << '\t' << std::setprecision(3) << r.mrr << '\t' << r.queries << '\t' << r.missing
        << '\n';
  }
  if (!out) throw std::runtime_error("report write failed: " + path);
}

}  // namespace rnm
