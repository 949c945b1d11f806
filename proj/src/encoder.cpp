#include "rnm/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_set>

namespace rnm {

namespace {

Matrix glorot(int rows, int cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

Matrix sigmoid(const Matrix& m) {
  return m.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite())
    throw std::runtime_error(std::string("non-finite activation in ") + what +
                             " (training divergence)");
}

}  // namespace

SparseMatrix build_adjacency(const GraphPair& pair) {
  const int n = pair.total_entities();
  const int off = pair.entity_offset();

  std::unordered_set<std::uint64_t> edges;
  auto add_edges = [&](const KnowledgeGraph& kg, int shift) {
    for (const Triple& t : kg.triples) {
      int a = t.head + shift, b = t.tail + shift;
      if (a == b) continue;  // self-loops are added uniformly below
      if (a > b) std::swap(a, b);
      edges.insert(pair_key(a, b));
    }
  };
  add_edges(pair.g1, 0);
  add_edges(pair.g2, off);

  std::vector<double> degree(n, 1.0);  // self-loop
  for (std::uint64_t key : edges) {
    degree[key >> 32] += 1.0;
    degree[static_cast<std::uint32_t>(key)] += 1.0;
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 2 + n);
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0 / degree[i]);
  for (std::uint64_t key : edges) {
    int a = static_cast<int>(key >> 32);
    int b = static_cast<int>(static_cast<std::uint32_t>(key));
    double w = 1.0 / std::sqrt(degree[a] * degree[b]);
    triplets.emplace_back(a, b, w);
    triplets.emplace_back(b, a, w);
  }
  SparseMatrix adj(n, n);
  adj.setFromTriplets(triplets.begin(), triplets.end());
  adj.makeCompressed();
  return adj;
}

EncoderParams EncoderParams::init(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.w1 = glorot(dim, dim, rng);
  p.wt1 = glorot(dim, dim, rng);
  p.bt1 = Vector::Constant(dim, -1.0);
  p.w2 = glorot(dim, dim, rng);
  p.wt2 = glorot(dim, dim, rng);
  p.bt2 = Vector::Constant(dim, -1.0);
  p.w_rel = glorot(dim, 2 * dim, rng);
  return p;
}

EncoderGrads EncoderGrads::zero(const EncoderParams& p, int n) {
  EncoderGrads g;
  g.w1 = Matrix::Zero(p.w1.rows(), p.w1.cols());
  g.w2 = Matrix::Zero(p.w2.rows(), p.w2.cols());
  g.wt1 = Matrix::Zero(p.wt1.rows(), p.wt1.cols());
  g.wt2 = Matrix::Zero(p.wt2.rows(), p.wt2.cols());
  g.bt1 = Vector::Zero(p.bt1.size());
  g.bt2 = Vector::Zero(p.bt2.size());
  g.w_rel = Matrix::Zero(p.w_rel.rows(), p.w_rel.cols());
  g.features = Matrix::Zero(n, p.dim());
  return g;
}

ForwardTrace gcn_forward_trace(const SparseMatrix& adj, const Matrix& features,
                               const EncoderParams& params, const EncoderConfig& cfg) {
  if (features.cols() != params.dim())
    throw std::invalid_argument("feature dim does not match encoder dim");
  ForwardTrace tr;
  tr.ah0 = adj * features;
  tr.m1 = tr.ah0 * params.w1;
  tr.t1 = sigmoid((features * params.wt1).rowwise() + params.bt1.transpose());
  tr.h1 = tr.t1.cwiseProduct(tr.m1.cwiseMax(0.0)) +
          (Matrix::Ones(tr.t1.rows(), tr.t1.cols()) - tr.t1).cwiseProduct(features);
  check_finite(tr.h1, "layer 1");

  tr.ah1 = adj * tr.h1;
  tr.m2 = tr.ah1 * params.w2;
  if (cfg.highway_both_layers) {
    tr.t2 = sigmoid((tr.h1 * params.wt2).rowwise() + params.bt2.transpose());
    tr.x = tr.t2.cwiseProduct(tr.m2.cwiseMax(0.0)) +
           (Matrix::Ones(tr.t2.rows(), tr.t2.cols()) - tr.t2).cwiseProduct(tr.h1);
  } else {
    tr.x = tr.m2.cwiseMax(0.0);
  }
  check_finite(tr.x, "layer 2");
  return tr;
}

Matrix gcn_forward(const SparseMatrix& adj, const Matrix& features, const EncoderParams& params,
                   const EncoderConfig& cfg) {
  return gcn_forward_trace(adj, features, params, cfg).x;
}

EncoderGrads gcn_backward(const SparseMatrix& adj, const Matrix& features,
                          const ForwardTrace& trace, const EncoderParams& params,
                          const EncoderConfig& cfg, const Matrix& d_x) {
  EncoderGrads g = EncoderGrads::zero(params, static_cast<int>(features.rows()));

  // Layer 2.
  Matrix d_h1;
  if (cfg.highway_both_layers) {
    Matrix relu2 = trace.m2.cwiseMax(0.0);
    Matrix d_relu2 = d_x.cwiseProduct(trace.t2);
    Matrix d_t2 = d_x.cwiseProduct(relu2 - trace.h1);
    Matrix d_g2 = d_t2.cwiseProduct(trace.t2.cwiseProduct(Matrix::Ones(trace.t2.rows(), trace.t2.cols()) - trace.t2));
    Matrix d_m2 = d_relu2.cwiseProduct(
        trace.m2.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    g.w2 = trace.ah1.transpose() * d_m2;
    g.wt2 = trace.h1.transpose() * d_g2;
    g.bt2 = d_g2.colwise().sum().transpose();
    d_h1 = adj.transpose() * (d_m2 * params.w2.transpose());
    d_h1.noalias() += d_g2 * params.wt2.transpose();
    d_h1 += d_x.cwiseProduct(Matrix::Ones(trace.t2.rows(), trace.t2.cols()) - trace.t2);
  } else {
    Matrix d_m2 = d_x.cwiseProduct(
        trace.m2.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    g.w2 = trace.ah1.transpose() * d_m2;
    d_h1 = adj.transpose() * (d_m2 * params.w2.transpose());
  }

  // Layer 1.
  Matrix relu1 = trace.m1.cwiseMax(0.0);
  Matrix d_relu1 = d_h1.cwiseProduct(trace.t1);
  Matrix d_t1 = d_h1.cwiseProduct(relu1 - features);
  Matrix d_g1 = d_t1.cwiseProduct(trace.t1.cwiseProduct(Matrix::Ones(trace.t1.rows(), trace.t1.cols()) - trace.t1));
  Matrix d_m1 = d_relu1.cwiseProduct(
      trace.m1.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
  g.w1 = trace.ah0.transpose() * d_m1;
  g.wt1 = features.transpose() * d_g1;
  g.bt1 = d_g1.colwise().sum().transpose();

  g.features = adj.transpose() * (d_m1 * params.w1.transpose());
  g.features.noalias() += d_g1 * params.wt1.transpose();
  g.features += d_h1.cwiseProduct(Matrix::Ones(trace.t1.rows(), trace.t1.cols()) - trace.t1);
  return g;
}

RelationIncidence RelationIncidence::build(const GraphPair& pair) {
  RelationIncidence inc;
  const int num_rel = pair.total_relations();
  inc.heads.resize(num_rel);
  inc.tails.resize(num_rel);
  auto ingest = [&](const KnowledgeGraph& kg, int ent_off, int rel_off) {
    for (const Triple& t : kg.triples) {
      inc.heads[t.rel + rel_off].push_back(t.head + ent_off);
      inc.tails[t.rel + rel_off].push_back(t.tail + ent_off);
    }
  };
  ingest(pair.g1, 0, 0);
  ingest(pair.g2, pair.entity_offset(), pair.relation_offset());
  auto dedup = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  for (auto& v : inc.heads) dedup(v);
  for (auto& v : inc.tails) dedup(v);
  return inc;
}

Matrix relation_embeddings(const Matrix& x, const RelationIncidence& incidence) {
  const int num_rel = static_cast<int>(incidence.heads.size());
  const int d = static_cast<int>(x.cols());
  Matrix table = Matrix::Zero(num_rel, 2 * d);
  for (int r = 0; r < num_rel; ++r) {
    const auto& heads = incidence.heads[r];
    const auto& tails = incidence.tails[r];
    if (heads.empty() || tails.empty())
      throw std::runtime_error("relation " + std::to_string(r) + " has no triples");
    for (int h : heads) table.row(r).head(d) += x.row(h);
    for (int t : tails) table.row(r).tail(d) += x.row(t);
    table.row(r).head(d) /= static_cast<double>(heads.size());
    table.row(r).tail(d) /= static_cast<double>(tails.size());
  }
  return table;
}

void relation_embeddings_backward(const Matrix& d_rel, const RelationIncidence& incidence,
                                  Matrix& d_x) {
  const int num_rel = static_cast<int>(incidence.heads.size());
  const int d = static_cast<int>(d_x.cols());
  for (int r = 0; r < num_rel; ++r) {
    const auto& heads = incidence.heads[r];
    const auto& tails = incidence.tails[r];
    if (heads.empty() || tails.empty()) continue;
    auto gh = d_rel.row(r).head(d) / static_cast<double>(heads.size());
    auto gt = d_rel.row(r).tail(d) / static_cast<double>(tails.size());
    for (int h : heads) d_x.row(h) += gh;
    for (int t : tails) d_x.row(t) += gt;
  }
}

}  // namespace rnm
