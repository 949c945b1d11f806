#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace rnm {

/// Parses a flat "key=value" text config. Blank lines and '#' comments are
/// skipped. Duplicate keys are an error.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text,
                                                 const std::string& origin = "<text>");

enum class NegativeMode { Right, BothSplit, BothFull };
NegativeMode parse_negative_mode(const std::string& s);
std::string to_string(NegativeMode m);

enum class Variant { Full, NoAP, NoIS, NoRM };
Variant parse_variant(const std::string& s);
std::string to_string(Variant v);

struct TrainConfig {
  double margin = 1.0;        // gamma
  double lambda = 0.001;      // trade-off on the translational regularizer
  double lr = 0.001;
  int negatives = 125;        // K per positive
  NegativeMode neg_mode = NegativeMode::BothSplit;
  int neg_pool = 100;         // nearest-neighbor pool negatives are drawn from
  int pretrain_epochs = 50;
  int joint_epochs = 10;
  int resample_period = 10;   // epochs between negative resampling
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool train_features = false;
  void validate() const;
};

struct EncoderConfig {
  bool highway_both_layers = true;  // false gates only the first layer
};

struct MatchConfig {
  double lambda_e = 10.0;
  double lambda_r = 200.0;
  int ent_candidates = 100;
  int rel_candidates = 20;
  // Variant knobs. use_alignment_prob=false is the -AP ablation (every
  // matched tuple counts 1 instead of its alignment probability);
  // relation_aware=false is -RM (neighbor-only matching, no relation
  // condition or probability factor).
  bool use_alignment_prob = true;
  bool relation_aware = true;
  void validate() const;
};

struct IterConfig {
  double delta_e = 5.0;
  double delta_r = 3.0;
  int max_iters = 4;
  void validate() const;
};

/// Every knob of a pipeline run. Defaults are the published configuration
/// where one exists.
struct RunConfig {
  TrainConfig train;
  EncoderConfig encoder;
  MatchConfig match;
  IterConfig iter;

  std::uint64_t seed = 42;
  int threads = 1;
  double seed_ratio = 0.3;          // train share of the reference pairs
  std::vector<int> eval_ks = {1, 10};
  bool folded_relations = true;     // evaluate forward relations only
  Variant variant = Variant::Full;
  int hidden_dim = 300;             // encoder dim when no feature file is given
  std::string feature_fill = "zeros";  // zeros | normal, for missing feature rows
  bool dump_iterations = true;

  void validate() const;
  /// Applies "key=value" entries; unknown keys are an error.
  void apply(const std::map<std::string, std::string>& kv);
  /// Full resolved configuration, one "key=value" per line, sorted.
  std::string manifest() const;
};

/// Parameters of the synthetic bilingual pair generator.
struct SynthSpec {
  int entities = 1000;
  int relations = 20;
  double mean_degree = 6.0;        // base triples = entities * mean_degree
  double one_to_one_fraction = 0.5;
  int n_min = 2;                   // 1-to-N head-count range for the rest
  int n_max = 4;
  double dropout = 0.1;            // per-view triple dropout probability
  int feature_dim = 32;
  double sigma = 0.1;              // per-view feature noise scale
  double seed_ratio = 0.3;
  std::uint64_t rng_seed = 42;

  void validate() const;
  void apply(const std::map<std::string, std::string>& kv);
  static SynthSpec from_file(const std::string& path);
  std::string manifest() const;
};

}  // namespace rnm
