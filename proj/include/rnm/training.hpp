#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rnm/config.hpp"
#include "rnm/encoder.hpp"
#include "rnm/kg.hpp"
#include "rnm/types.hpp"

namespace rnm {

double entity_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                       const Eigen::Ref<const Eigen::RowVectorXd>& b);

// Negatives for seed pair i: (p_i, right[i][k]) and (left[i][k], q_i),
// entity ids in the global space.
struct NegativeSet {
  std::vector<std::vector<int>> right;
  std::vector<std::vector<int>> left;
  long long replacement_draws = 0;
};

// Draws each side's corruptions uniformly from the neg_pool nearest same-KG
// entities of the replaced one (itself excluded). Pools smaller than the
// per-side count fall back to drawing with replacement (counted).
NegativeSet sample_negatives(const std::vector<std::pair<int, int>>& positives, const Matrix& x,
                             const GraphPair& pair, const TrainConfig& cfg, std::mt19937_64& rng);

double margin_loss(const std::vector<std::pair<int, int>>& positives,
                   const NegativeSet& negatives, const Matrix& x, double margin);

double transe_regularizer(const Matrix& x, const Matrix& relations, const Matrix& w_rel,
                          const GraphPair& pair);

inline double joint_loss(double l_e, double omega_r, double lambda) {
  return l_e + lambda * omega_r;
}

struct LossGrads {
  Matrix d_x;      // entities × d
  Matrix d_rel;    // relations × 2d
  Matrix d_w_rel;  // d × 2d
};

LossGrads loss_backward(const std::vector<std::pair<int, int>>& positives,
                        const NegativeSet& negatives, const Matrix& x, const Matrix& relations,
                        const Matrix& w_rel, const GraphPair& pair, double margin, double lambda,
                        bool include_regularizer);

struct AdamState {
  EncoderGrads m;
  EncoderGrads v;
  long long step = 0;
  static AdamState zero(const EncoderParams& params, int num_entities);
};

void adam_step(EncoderParams& params, Matrix& features, const EncoderGrads& grads,
               AdamState& state, const TrainConfig& cfg);

struct EmbeddingState {
  Matrix x;          // entities × d
  Matrix relations;  // relations × 2d
};

struct EpochLog {
  int epoch = 0;
  double l_e = 0.0;
  double omega_r = 0.0;
  double total = 0.0;
};

class Trainer {
 public:
  Trainer(const GraphPair& pair, std::vector<std::pair<int, int>> seeds, Matrix features,
          TrainConfig train_cfg, EncoderConfig enc_cfg, std::uint64_t rng_seed);

  // One full-batch epoch: forward, (periodic) negative resample, loss,
  // backward, Adam. Non-finite loss throws with diagnostics.
  EpochLog step();

  // Pretrain epochs on the margin loss alone, then joint epochs on the full
  // objective. Optional log stream gets one "epoch, L_E, Omega_R, L" line
  // per epoch. Returns the final embeddings.
  EmbeddingState run(std::ostream* log = nullptr);

  // Embeddings under the current parameters, no update.
  EmbeddingState embed() const;

  int epoch() const { return epoch_; }
  bool joint_phase() const { return epoch_ >= cfg_.pretrain_epochs; }
  const EncoderParams& params() const { return params_; }
  EncoderParams& mutable_params() { return params_; }
  const Matrix& features() const { return features_; }
  const NegativeSet& negatives() const { return negatives_; }

  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  const GraphPair& pair_;
  std::vector<std::pair<int, int>> seeds_;
  Matrix features_;
  TrainConfig cfg_;
  EncoderConfig enc_cfg_;
  SparseMatrix adj_;
  RelationIncidence incidence_;
  EncoderParams params_;
  AdamState adam_;
  std::mt19937_64 rng_;
  NegativeSet negatives_;
  int epoch_ = 0;
};

}  // namespace rnm
