#include "rnm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rnm {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::RowVectorXd sign_row(const Eigen::RowVectorXd& v) {
  return v.unaryExpr([](double x) { return sgn(x); });
}

// Nearest `pool` same-KG entities to x[replaced] under L1, excluding it;
// ascending distance, ties by lower id.
std::vector<int> nearest_pool(const Matrix& x, int replaced, int lo, int hi, int pool) {
  std::vector<std::pair<double, int>> cand;
  cand.reserve(hi - lo);
  for (int e = lo; e < hi; ++e) {
    if (e == replaced) continue;
    cand.emplace_back((x.row(e) - x.row(replaced)).cwiseAbs().sum(), e);
  }
  int keep = std::min<int>(pool, static_cast<int>(cand.size()));
  std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
  std::vector<int> out(keep);
  for (int i = 0; i < keep; ++i) out[i] = cand[i].second;
  return out;
}

std::vector<int> draw(const std::vector<int>& pool, int k, std::mt19937_64& rng,
                      long long& replacement_draws) {
  if (pool.empty()) throw std::runtime_error("negative sampling: empty candidate pool");
  std::vector<int> out;
  out.reserve(k);
  if (static_cast<int>(pool.size()) >= k) {
    std::vector<int> scratch = pool;
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<int> d(i, static_cast<int>(scratch.size()) - 1);
      std::swap(scratch[i], scratch[d(rng)]);
      out.push_back(scratch[i]);
    }
  } else {
    std::uniform_int_distribution<int> d(0, static_cast<int>(pool.size()) - 1);
    for (int i = 0; i < k; ++i) out.push_back(pool[d(rng)]);
    replacement_draws += k;
  }
  return out;
}

template <typename T>
void adam_update(T& p, const T& g, T& m, T& v, double lr, double b1, double b2, double eps,
                 double bc1, double bc2) {
  m = b1 * m + (1.0 - b1) * g;
  v = (b2 * v.array() + (1.0 - b2) * g.array().square()).matrix();
  p -= (lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps)).matrix();
}

void check_grads_finite(const EncoderGrads& g) {
  if (!(g.w1.allFinite() && g.w2.allFinite() && g.wt1.allFinite() && g.wt2.allFinite() &&
        g.bt1.allFinite() && g.bt2.allFinite() && g.w_rel.allFinite() && g.features.allFinite()))
    throw std::runtime_error("non-finite gradient");
}

template <typename T>
void write_tensor(std::ostream& out, const T& t) {
  std::int64_t rows = t.rows(), cols = t.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double)) * rows * cols);
}

template <typename T>
void read_tensor(std::istream& in, T& t) {
  std::int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || rows != t.rows() || cols != t.cols())
    throw std::runtime_error("checkpoint: tensor shape mismatch");
  in.read(reinterpret_cast<char*>(t.data()),
          static_cast<std::streamsize>(sizeof(double)) * rows * cols);
}

void write_i64(std::ostream& out, std::int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::int64_t read_i64(std::istream& in) {
  std::int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

double entity_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("entity_distance: dim mismatch");
  return (a - b).cwiseAbs().sum();
}

NegativeSet sample_negatives(const std::vector<std::pair<int, int>>& positives, const Matrix& x,
                             const GraphPair& pair, const TrainConfig& cfg, std::mt19937_64& rng) {
  const int off = pair.entity_offset();
  const int n = pair.total_entities();
  int k_right = 0, k_left = 0;
  switch (cfg.neg_mode) {
    case NegativeMode::Right: k_right = cfg.negatives; break;
    case NegativeMode::BothSplit:
      k_right = cfg.negatives - cfg.negatives / 2;
      k_left = cfg.negatives / 2;
      break;
    case NegativeMode::BothFull: k_right = k_left = cfg.negatives; break;
  }

  NegativeSet set;
  set.right.resize(positives.size());
  set.left.resize(positives.size());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    auto [p, q] = positives[i];
    if (k_right > 0)
      set.right[i] = draw(nearest_pool(x, q, off, n, cfg.neg_pool), k_right, rng,
                          set.replacement_draws);
    if (k_left > 0)
      set.left[i] = draw(nearest_pool(x, p, 0, off, cfg.neg_pool), k_left, rng,
                         set.replacement_draws);
  }
  return set;
}

double margin_loss(const std::vector<std::pair<int, int>>& positives,
                   const NegativeSet& negatives, const Matrix& x, double margin) {
  if (negatives.right.size() != positives.size() || negatives.left.size() != positives.size())
    throw std::invalid_argument("margin_loss: negatives do not match positives");
  double loss = 0.0;
  for (std::size_t i = 0; i < positives.size(); ++i) {
    auto [p, q] = positives[i];
    double d_pos = entity_distance(x.row(p), x.row(q));
    for (int neg : negatives.right[i])
      loss += std::max(0.0, d_pos - entity_distance(x.row(p), x.row(neg)) + margin);
    for (int neg : negatives.left[i])
      loss += std::max(0.0, d_pos - entity_distance(x.row(neg), x.row(q)) + margin);
  }
  return loss;
}

double transe_regularizer(const Matrix& x, const Matrix& relations, const Matrix& w_rel,
                          const GraphPair& pair) {
  Matrix trans = relations * w_rel.transpose();  // relations × d
  double total = 0.0;
  auto accumulate = [&](const KnowledgeGraph& kg, int ent_off, int rel_off) {
    for (const Triple& t : kg.triples)
      total += (x.row(t.head + ent_off) + trans.row(t.rel + rel_off) - x.row(t.tail + ent_off))
                   .cwiseAbs()
                   .sum();
  };
  accumulate(pair.g1, 0, 0);
  accumulate(pair.g2, pair.entity_offset(), pair.relation_offset());
  return total;
}

LossGrads loss_backward(const std::vector<std::pair<int, int>>& positives,
                        const NegativeSet& negatives, const Matrix& x, const Matrix& relations,
                        const Matrix& w_rel, const GraphPair& pair, double margin, double lambda,
                        bool include_regularizer) {
  LossGrads g;
  g.d_x = Matrix::Zero(x.rows(), x.cols());
  g.d_rel = Matrix::Zero(relations.rows(), relations.cols());
  g.d_w_rel = Matrix::Zero(w_rel.rows(), w_rel.cols());

  for (std::size_t i = 0; i < positives.size(); ++i) {
    auto [p, q] = positives[i];
    double d_pos = entity_distance(x.row(p), x.row(q));
    Eigen::RowVectorXd sign_pos = sign_row(x.row(p) - x.row(q));
    int active = 0;
    for (int neg : negatives.right[i]) {
      if (d_pos - entity_distance(x.row(p), x.row(neg)) + margin <= 0.0) continue;
      ++active;
      Eigen::RowVectorXd s = sign_row(x.row(p) - x.row(neg));
      g.d_x.row(p) -= s;
      g.d_x.row(neg) += s;
    }
    for (int neg : negatives.left[i]) {
      if (d_pos - entity_distance(x.row(neg), x.row(q)) + margin <= 0.0) continue;
      ++active;
      Eigen::RowVectorXd s = sign_row(x.row(neg) - x.row(q));
      g.d_x.row(neg) -= s;
      g.d_x.row(q) += s;
    }
    if (active > 0) {
      g.d_x.row(p) += active * sign_pos;
      g.d_x.row(q) -= active * sign_pos;
    }
  }

  if (include_regularizer && lambda > 0.0) {
    Matrix trans = relations * w_rel.transpose();
    auto accumulate = [&](const KnowledgeGraph& kg, int ent_off, int rel_off) {
      for (const Triple& t : kg.triples) {
        int h = t.head + ent_off, r = t.rel + rel_off, tl = t.tail + ent_off;
        Eigen::RowVectorXd s =
            lambda * sign_row(x.row(h) + trans.row(r) - x.row(tl));
        g.d_x.row(h) += s;
        g.d_x.row(tl) -= s;
        g.d_rel.row(r) += s * w_rel;
        g.d_w_rel += s.transpose() * relations.row(r);
      }
    };
    accumulate(pair.g1, 0, 0);
    accumulate(pair.g2, pair.entity_offset(), pair.relation_offset());
  }
  return g;
}

AdamState AdamState::zero(const EncoderParams& params, int num_entities) {
  AdamState s;
  s.m = EncoderGrads::zero(params, num_entities);
  s.v = EncoderGrads::zero(params, num_entities);
  s.step = 0;
  return s;
}

void adam_step(EncoderParams& params, Matrix& features, const EncoderGrads& grads,
               AdamState& state, const TrainConfig& cfg) {
  state.step += 1;
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
  auto upd = [&](auto& p, const auto& g, auto& m, auto& v) {
    adam_update(p, g, m, v, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, bc1, bc2);
  };
  upd(params.w1, grads.w1, state.m.w1, state.v.w1);
  upd(params.wt1, grads.wt1, state.m.wt1, state.v.wt1);
  upd(params.bt1, grads.bt1, state.m.bt1, state.v.bt1);
  upd(params.w2, grads.w2, state.m.w2, state.v.w2);
  upd(params.wt2, grads.wt2, state.m.wt2, state.v.wt2);
  upd(params.bt2, grads.bt2, state.m.bt2, state.v.bt2);
  upd(params.w_rel, grads.w_rel, state.m.w_rel, state.v.w_rel);
  if (cfg.train_features) upd(features, grads.features, state.m.features, state.v.features);
}

Trainer::Trainer(const GraphPair& pair, std::vector<std::pair<int, int>> seeds, Matrix features,
                 TrainConfig train_cfg, EncoderConfig enc_cfg, std::uint64_t rng_seed)
    : pair_(pair),
      seeds_(std::move(seeds)),
      features_(std::move(features)),
      cfg_(std::move(train_cfg)),
      enc_cfg_(enc_cfg),
      adj_(build_adjacency(pair)),
      incidence_(RelationIncidence::build(pair)),
      params_(EncoderParams::init(static_cast<int>(features_.cols()), rng_seed)),
      adam_(AdamState::zero(params_, static_cast<int>(features_.rows()))),
      rng_(rng_seed + 1) {
  cfg_.validate();
  if (features_.rows() != pair.total_entities())
    throw std::invalid_argument("feature row count does not match entity count");
  const int off = pair.entity_offset();
  const int n = pair.total_entities();
  for (auto [p, q] : seeds_)
    if (p < 0 || p >= off || q < off || q >= n)
      throw std::invalid_argument("seed pair outside entity id ranges");
}

EpochLog Trainer::step() {
  ForwardTrace trace = gcn_forward_trace(adj_, features_, params_, enc_cfg_);
  if (negatives_.right.size() != seeds_.size() || epoch_ % cfg_.resample_period == 0)
    negatives_ = sample_negatives(seeds_, trace.x, pair_, cfg_, rng_);

  bool joint = epoch_ >= cfg_.pretrain_epochs;
  Matrix rel_table = relation_embeddings(trace.x, incidence_);
  double l_e = margin_loss(seeds_, negatives_, trace.x, cfg_.margin);
  double omega = transe_regularizer(trace.x, rel_table, params_.w_rel, pair_);
  double total = joint ? joint_loss(l_e, omega, cfg_.lambda) : l_e;
  if (!std::isfinite(total))
    throw std::runtime_error("training diverged at epoch " + std::to_string(epoch_) +
                             ": L_E=" + std::to_string(l_e) +
                             " Omega_R=" + std::to_string(omega));

  LossGrads lg = loss_backward(seeds_, negatives_, trace.x, rel_table, params_.w_rel, pair_,
                               cfg_.margin, cfg_.lambda, joint);
  if (joint) relation_embeddings_backward(lg.d_rel, incidence_, lg.d_x);
  EncoderGrads grads = gcn_backward(adj_, features_, trace, params_, enc_cfg_, lg.d_x);
  grads.w_rel = lg.d_w_rel;
  check_grads_finite(grads);
  adam_step(params_, features_, grads, adam_, cfg_);

  EpochLog log{epoch_, l_e, omega, total};
  epoch_ += 1;
  return log;
}

EmbeddingState Trainer::run(std::ostream* log) {
  const int total_epochs = cfg_.pretrain_epochs + cfg_.joint_epochs;
  while (epoch_ < total_epochs) {
    EpochLog el = step();
    if (log)
      *log << el.epoch << ", " << el.l_e << ", " << el.omega_r << ", " << el.total << "\n";
  }
  return embed();
}

EmbeddingState Trainer::embed() const {
  EmbeddingState state;
  state.x = gcn_forward(adj_, features_, params_, enc_cfg_);
  state.relations = relation_embeddings(state.x, incidence_);
  return state;
}

void Trainer::save_checkpoint(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write("RNMT", 4);
  write_i64(out, 1);  // version
  write_i64(out, params_.dim());
  write_i64(out, features_.rows());
  write_i64(out, static_cast<std::int64_t>(incidence_.heads.size()));
  write_i64(out, epoch_);
  write_i64(out, adam_.step);
  write_i64(out, negatives_.replacement_draws);

  auto dump_params = [&](const EncoderParams& p) {
    write_tensor(out, p.w1);
    write_tensor(out, p.wt1);
    write_tensor(out, p.bt1);
    write_tensor(out, p.w2);
    write_tensor(out, p.wt2);
    write_tensor(out, p.bt2);
    write_tensor(out, p.w_rel);
  };
  auto dump_grads = [&](const EncoderGrads& g) {
    write_tensor(out, g.w1);
    write_tensor(out, g.wt1);
    write_tensor(out, g.bt1);
    write_tensor(out, g.w2);
    write_tensor(out, g.wt2);
    write_tensor(out, g.bt2);
    write_tensor(out, g.w_rel);
    write_tensor(out, g.features);
  };
  dump_params(params_);
  dump_grads(adam_.m);
  dump_grads(adam_.v);
  write_tensor(out, features_);

  std::ostringstream rng_text;
  rng_text << rng_;
  std::string rs = rng_text.str();
  write_i64(out, static_cast<std::int64_t>(rs.size()));
  out.write(rs.data(), static_cast<std::streamsize>(rs.size()));

  auto dump_lists = [&](const std::vector<std::vector<int>>& lists) {
    write_i64(out, static_cast<std::int64_t>(lists.size()));
    for (const auto& l : lists) {
      write_i64(out, static_cast<std::int64_t>(l.size()));
      out.write(reinterpret_cast<const char*>(l.data()),
                static_cast<std::streamsize>(sizeof(int)) * l.size());
    }
  };
  dump_lists(negatives_.right);
  dump_lists(negatives_.left);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void Trainer::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "RNMT")
    throw std::runtime_error("not a checkpoint file: " + path);
  if (read_i64(in) != 1) throw std::runtime_error("unsupported checkpoint version");
  if (read_i64(in) != params_.dim() || read_i64(in) != features_.rows() ||
      read_i64(in) != static_cast<std::int64_t>(incidence_.heads.size()))
    throw std::runtime_error("checkpoint does not match this graph/config");
  epoch_ = static_cast<int>(read_i64(in));
  adam_.step = read_i64(in);
  negatives_.replacement_draws = read_i64(in);

  auto load_params = [&](EncoderParams& p) {
    read_tensor(in, p.w1);
    read_tensor(in, p.wt1);
    read_tensor(in, p.bt1);
    read_tensor(in, p.w2);
    read_tensor(in, p.wt2);
    read_tensor(in, p.bt2);
    read_tensor(in, p.w_rel);
  };
  auto load_grads = [&](EncoderGrads& g) {
    read_tensor(in, g.w1);
    read_tensor(in, g.wt1);
    read_tensor(in, g.bt1);
    read_tensor(in, g.w2);
    read_tensor(in, g.wt2);
    read_tensor(in, g.bt2);
    read_tensor(in, g.w_rel);
    read_tensor(in, g.features);
  };
  load_params(params_);
  load_grads(adam_.m);
  load_grads(adam_.v);
  read_tensor(in, features_);

  std::int64_t rng_len = read_i64(in);
  std::string rs(static_cast<std::size_t>(rng_len), '\0');
  in.read(rs.data(), rng_len);
  std::istringstream rng_text(rs);
  rng_text >> rng_;

  auto load_lists = [&](std::vector<std::vector<int>>& lists) {
    lists.resize(static_cast<std::size_t>(read_i64(in)));
    for (auto& l : lists) {
      l.resize(static_cast<std::size_t>(read_i64(in)));
      in.read(reinterpret_cast<char*>(l.data()),
              static_cast<std::streamsize>(sizeof(int)) * l.size());
    }
  };
  load_lists(negatives_.right);
  load_lists(negatives_.left);
  if (!in) throw std::runtime_error("checkpoint read failed: " + path);
}

}  // namespace rnm
