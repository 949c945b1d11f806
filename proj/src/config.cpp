#include "rnm/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rnm {

namespace {

std::map<std::string, std::string> parse_kv_lines(std::istream& in, const std::string& origin) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(val);
    if (key.empty())
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, val).second)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return kv;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not a number: '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw std::runtime_error("config key '" + key + "': not an integer: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("config key '" + key + "': not a boolean: '" + v + "'");
}

}  // namespace

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_kv_lines(in, path);
}

std::map<std::string, std::string> parse_kv_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  return parse_kv_lines(in, origin);
}

NegativeMode parse_negative_mode(const std::string& s) {
  if (s == "right") return NegativeMode::Right;
  if (s == "both_split") return NegativeMode::BothSplit;
  if (s == "both_full") return NegativeMode::BothFull;
  throw std::runtime_error("unknown negative mode: '" + s + "' (right|both_split|both_full)");
}

std::string to_string(NegativeMode m) {
  switch (m) {
    case NegativeMode::Right: return "right";
    case NegativeMode::BothSplit: return "both_split";
    case NegativeMode::BothFull: return "both_full";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "-AP" || s == "AP") return Variant::NoAP;
  if (s == "-IS" || s == "IS") return Variant::NoIS;
  if (s == "-RM" || s == "RM") return Variant::NoRM;
  throw std::runtime_error("unknown variant: '" + s + "' (full|-AP|-IS|-RM)");
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoAP: return "-AP";
    case Variant::NoIS: return "-IS";
    case Variant::NoRM: return "-RM";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (margin <= 0) throw std::runtime_error("margin must be > 0");
  if (lambda < 0) throw std::runtime_error("lambda must be >= 0");
  if (lr <= 0) throw std::runtime_error("lr must be > 0");
  if (negatives < 1) throw std::runtime_error("negatives must be >= 1");
  if (neg_pool < 1) throw std::runtime_error("neg_pool must be >= 1");
  if (pretrain_epochs < 0 || joint_epochs < 0) throw std::runtime_error("epochs must be >= 0");
  if (resample_period < 1) throw std::runtime_error("resample_period must be >= 1");
}

void MatchConfig::validate() const {
  if (lambda_e < 0 || lambda_r < 0) throw std::runtime_error("lambda_e/lambda_r must be >= 0");
  if (ent_candidates < 1 || rel_candidates < 1)
    throw std::runtime_error("candidate counts must be >= 1");
}

void IterConfig::validate() const {
  if (delta_e <= 0 || delta_r <= 0) throw std::runtime_error("thresholds must be > 0");
  if (max_iters < 1) throw std::runtime_error("max_iters must be >= 1");
}

void RunConfig::validate() const {
  train.validate();
  match.validate();
  iter.validate();
  if (threads < 1) throw std::runtime_error("threads must be >= 1");
  if (seed_ratio <= 0.0 || seed_ratio >= 1.0)
    throw std::runtime_error("seed_ratio must be in (0,1)");
  if (eval_ks.empty()) throw std::runtime_error("eval_ks must be nonempty");
  for (int k : eval_ks)
    if (k < 1) throw std::runtime_error("eval k values must be >= 1");
  if (hidden_dim < 1) throw std::runtime_error("hidden_dim must be >= 1");
  if (feature_fill != "zeros" && feature_fill != "normal")
    throw std::runtime_error("feature_fill must be zeros|normal");
}

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key == "margin") train.margin = to_double(key, val);
    else if (key == "lambda") train.lambda = to_double(key, val);
    else if (key == "lr") train.lr = to_double(key, val);
    else if (key == "negatives") train.negatives = static_cast<int>(to_int(key, val));
    else if (key == "neg_mode") train.neg_mode = parse_negative_mode(val);
    else if (key == "neg_pool") train.neg_pool = static_cast<int>(to_int(key, val));
    else if (key == "pretrain_epochs") train.pretrain_epochs = static_cast<int>(to_int(key, val));
    else if (key == "joint_epochs") train.joint_epochs = static_cast<int>(to_int(key, val));
    else if (key == "resample_period") train.resample_period = static_cast<int>(to_int(key, val));
    else if (key == "adam_beta1") train.adam_beta1 = to_double(key, val);
    else if (key == "adam_beta2") train.adam_beta2 = to_double(key, val);
    else if (key == "adam_eps") train.adam_eps = to_double(key, val);
    else if (key == "train_features") train.train_features = to_bool(key, val);
    else if (key == "highway_both_layers") encoder.highway_both_layers = to_bool(key, val);
    else if (key == "lambda_e") match.lambda_e = to_double(key, val);
    else if (key == "lambda_r") match.lambda_r = to_double(key, val);
    else if (key == "ent_candidates") match.ent_candidates = static_cast<int>(to_int(key, val));
    else if (key == "rel_candidates") match.rel_candidates = static_cast<int>(to_int(key, val));
    else if (key == "delta_e") iter.delta_e = to_double(key, val);
    else if (key == "delta_r") iter.delta_r = to_double(key, val);
    else if (key == "max_iters") iter.max_iters = static_cast<int>(to_int(key, val));
    else if (key == "seed") seed = static_cast<std::uint64_t>(to_int(key, val));
    else if (key == "threads") threads = static_cast<int>(to_int(key, val));
    else if (key == "seed_ratio") seed_ratio = to_double(key, val);
    else if (key == "folded_relations") folded_relations = to_bool(key, val);
    else if (key == "variant") variant = parse_variant(val);
    else if (key == "hidden_dim") hidden_dim = static_cast<int>(to_int(key, val));
    else if (key == "feature_fill") feature_fill = val;
    else if (key == "dump_iterations") dump_iterations = to_bool(key, val);
    else if (key == "eval_ks") {
      eval_ks.clear();
      std::stringstream ss(val);
      std::string item;
      while (std::getline(ss, item, ','))
        eval_ks.push_back(static_cast<int>(to_int(key, item)));
    } else {
      throw std::runtime_error("unknown config key: '" + key + "'");
    }
  }
  validate();
}

std::string RunConfig::manifest() const {
  std::ostringstream os;
  os << "adam_beta1=" << train.adam_beta1 << "\n";
  os << "adam_beta2=" << train.adam_beta2 << "\n";
  os << "adam_eps=" << train.adam_eps << "\n";
  os << "delta_e=" << iter.delta_e << "\n";
  os << "delta_r=" << iter.delta_r << "\n";
  os << "dump_iterations=" << (dump_iterations ? "true" : "false") << "\n";
  os << "ent_candidates=" << match.ent_candidates << "\n";
  os << "eval_ks=";
  for (size_t i = 0; i < eval_ks.size(); ++i) os << (i ? "," : "") << eval_ks[i];
  os << "\n";
  os << "feature_fill=" << feature_fill << "\n";
  os << "folded_relations=" << (folded_relations ? "true" : "false") << "\n";
  os << "hidden_dim=" << hidden_dim << "\n";
  os << "highway_both_layers=" << (encoder.highway_both_layers ? "true" : "false") << "\n";
  os << "joint_epochs=" << train.joint_epochs << "\n";
  os << "lambda=" << train.lambda << "\n";
  os << "lambda_e=" << match.lambda_e << "\n";
  os << "lambda_r=" << match.lambda_r << "\n";
  os << "lr=" << train.lr << "\n";
  os << "margin=" << train.margin << "\n";
  os << "max_iters=" << iter.max_iters << "\n";
  os << "neg_mode=" << to_string(train.neg_mode) << "\n";
  os << "neg_pool=" << train.neg_pool << "\n";
  os << "negatives=" << train.negatives << "\n";
  os << "pretrain_epochs=" << train.pretrain_epochs << "\n";
  os << "rel_candidates=" << match.rel_candidates << "\n";
  os << "resample_period=" << train.resample_period << "\n";
  os << "seed=" << seed << "\n";
  os << "seed_ratio=" << seed_ratio << "\n";
  os << "threads=" << threads << "\n";
  os << "train_features=" << (train.train_features ? "true" : "false") << "\n";
  os << "variant=" << to_string(variant) << "\n";
  return os.str();
}

void SynthSpec::validate() const {
  if (entities < 1 || relations < 1) throw std::runtime_error("synth counts must be >= 1");
  if (mean_degree <= 0) throw std::runtime_error("mean_degree must be > 0");
  if (one_to_one_fraction < 0 || one_to_one_fraction > 1)
    throw std::runtime_error("one_to_one_fraction must be in [0,1]");
  if (n_min < 2 || n_max < n_min) throw std::runtime_error("need 2 <= n_min <= n_max");
  if (dropout < 0 || dropout >= 1) throw std::runtime_error("dropout must be in [0,1)");
  if (feature_dim < 1) throw std::runtime_error("feature_dim must be >= 1");
  if (sigma < 0) throw std::runtime_error("sigma must be >= 0");
  if (seed_ratio <= 0 || seed_ratio >= 1) throw std::runtime_error("seed_ratio must be in (0,1)");
}

void SynthSpec::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key == "entities") entities = static_cast<int>(to_int(key, val));
    else if (key == "relations") relations = static_cast<int>(to_int(key, val));
    else if (key == "mean_degree") mean_degree = to_double(key, val);
    else if (key == "one_to_one_fraction") one_to_one_fraction = to_double(key, val);
    else if (key == "n_min") n_min = static_cast<int>(to_int(key, val));
    else if (key == "n_max") n_max = static_cast<int>(to_int(key, val));
    else if (key == "dropout") dropout = to_double(key, val);
    else if (key == "feature_dim") feature_dim = static_cast<int>(to_int(key, val));
    else if (key == "sigma") sigma = to_double(key, val);
    else if (key == "seed_ratio") seed_ratio = to_double(key, val);
    else if (key == "rng_seed") rng_seed = static_cast<std::uint64_t>(to_int(key, val));
    else throw std::runtime_error("unknown synth spec key: '" + key + "'");
  }
  validate();
}

SynthSpec SynthSpec::from_file(const std::string& path) {
  SynthSpec spec;
  spec.apply(parse_kv_file(path));
  return spec;
}

std::string SynthSpec::manifest() const {
  std::ostringstream os;
  os << "dropout=" << dropout << "\n";
  os << "entities=" << entities << "\n";
  os << "feature_dim=" << feature_dim << "\n";
  os << "mean_degree=" << mean_degree << "\n";
  os << "n_max=" << n_max << "\n";
  os << "n_min=" << n_min << "\n";
  os << "one_to_one_fraction=" << one_to_one_fraction << "\n";
  os << "relations=" << relations << "\n";
  os << "rng_seed=" << rng_seed << "\n";
  os << "seed_ratio=" << seed_ratio << "\n";
  os << "sigma=" << sigma << "\n";
  return os.str();
}

}  // namespace rnm
