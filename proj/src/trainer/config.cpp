#include "bidyn/trainer/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "bidyn/common/errors.hpp"

namespace bidyn::trainer {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string normalize_enum(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  return s;
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

long long to_int(const std::string& v) {
  std::size_t pos = 0;
  const long long i = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return i;
}

bool to_bool(const std::string& v) {
  const std::string s = normalize_enum(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected a boolean");
}

std::vector<int> to_sizes(const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const long long n = to_int(trim(item));
    if (n < 1) throw std::invalid_argument("layer sizes must be positive");
    out.push_back(static_cast<int>(n));
  }
  if (out.empty()) throw std::invalid_argument("expected comma-separated layer sizes");
  return out;
}

std::string sizes_text(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

int to_count(const std::string& v) {
  const long long n = to_int(v);
  if (n < 0) throw std::invalid_argument("expected a nonnegative integer");
  return static_cast<int>(n);
}

using Setter = std::function<void(TrainConfig&, const std::string&)>;
using Getter = std::function<std::string(const TrainConfig&)>;

struct Key {
  Setter set;
  Getter get;
};

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void add_schedule(std::map<std::string, Key>& keys, const std::string& name,
                  Schedule TrainConfig::*member) {
  keys[name + ".x"] = {[=](TrainConfig& c, const std::string& v) { (c.*member).x = to_double(v); },
                       [=](const TrainConfig& c) { return num((c.*member).x); }};
  keys[name + ".y"] = {[=](TrainConfig& c, const std::string& v) { (c.*member).y = to_double(v); },
                       [=](const TrainConfig& c) { return num((c.*member).y); }};
  keys[name + ".a"] = {[=](TrainConfig& c, const std::string& v) { (c.*member).a = static_cast<int>(to_int(v)); },
                       [=](const TrainConfig& c) { return std::to_string((c.*member).a); }};
  keys[name + ".b"] = {[=](TrainConfig& c, const std::string& v) { (c.*member).b = static_cast<int>(to_int(v)); },
                       [=](const TrainConfig& c) { return std::to_string((c.*member).b); }};
}

#define BIDYN_INT_KEY(name, field)                                                         \
  keys[name] = {[](TrainConfig& c, const std::string& v) { c.field = to_count(v); },       \
                [](const TrainConfig& c) { return std::to_string(c.field); }}
#define BIDYN_SIZE_KEY(name, field)                                                        \
  keys[name] = {[](TrainConfig& c, const std::string& v) {                                 \
                  c.field = static_cast<std::size_t>(to_count(v));                         \
                },                                                                         \
                [](const TrainConfig& c) { return std::to_string(c.field); }}
#define BIDYN_REAL_KEY(name, field)                                                        \
  keys[name] = {[](TrainConfig& c, const std::string& v) { c.field = to_double(v); },      \
                [](const TrainConfig& c) { return num(c.field); }}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> keys;
    keys["seed"] = {[](TrainConfig& c, const std::string& v) {
                      c.seed = static_cast<std::uint64_t>(std::stoull(v));
                    },
                    [](const TrainConfig& c) { return std::to_string(c.seed); }};
    BIDYN_INT_KEY("n_epochs", n_epochs);
    BIDYN_INT_KEY("env_steps_per_epoch", env_steps_per_epoch);
    BIDYN_INT_KEY("rollouts_per_step", rollouts_per_step);
    BIDYN_INT_KEY("policy_grad_steps", policy_grad_steps);
    BIDYN_INT_KEY("backward_policy_steps", backward_policy_steps);
    BIDYN_INT_KEY("sac_batch_size", sac_batch_size);
    BIDYN_REAL_KEY("real_ratio", real_ratio);
    BIDYN_REAL_KEY("gamma", gamma);
    BIDYN_SIZE_KEY("env_buffer_capacity", env_buffer_capacity);
    BIDYN_SIZE_KEY("model_buffer_capacity", model_buffer_capacity);
    BIDYN_SIZE_KEY("backward_window", backward_window);
    BIDYN_SIZE_KEY("candidate_pool", candidate_pool);
    BIDYN_INT_KEY("value_samples", value_samples);
    BIDYN_INT_KEY("model_max_epochs", model_max_epochs);
    add_schedule(keys, "k1", &TrainConfig::k1);
    add_schedule(keys, "k2", &TrainConfig::k2);
    add_schedule(keys, "beta", &TrainConfig::beta);

    keys["sac.hidden"] = {[](TrainConfig& c, const std::string& v) { c.sac.hidden_sizes = to_sizes(v); },
                          [](const TrainConfig& c) { return sizes_text(c.sac.hidden_sizes); }};
    keys["sac.activation"] = {
        [](TrainConfig& c, const std::string& v) { c.sac.activation = nn::activation_from_string(v); },
        [](const TrainConfig& c) { return nn::to_string(c.sac.activation); }};
    BIDYN_REAL_KEY("sac.actor_lr", sac.actor_lr);
    BIDYN_REAL_KEY("sac.critic_lr", sac.critic_lr);
    BIDYN_REAL_KEY("sac.alpha_lr", sac.alpha_lr);
    BIDYN_REAL_KEY("sac.tau", sac.tau);
    BIDYN_REAL_KEY("sac.init_alpha", sac.init_alpha);
    keys["sac.target_entropy"] = {
        [](TrainConfig& c, const std::string& v) {
          if (normalize_enum(v) == "auto") c.sac.target_entropy.reset();
          else c.sac.target_entropy = to_double(v);
        },
        [](const TrainConfig& c) {
          return c.sac.target_entropy ? num(*c.sac.target_entropy) : std::string("auto");
        }};

    BIDYN_INT_KEY("model.ensemble_size", model.ensemble_size);
    BIDYN_INT_KEY("model.elites", model.elite_count);
    keys["model.hidden"] = {[](TrainConfig& c, const std::string& v) { c.model.hidden_sizes = to_sizes(v); },
                            [](const TrainConfig& c) { return sizes_text(c.model.hidden_sizes); }};
    keys["model.activation"] = {
        [](TrainConfig& c, const std::string& v) { c.model.activation = nn::activation_from_string(v); },
        [](const TrainConfig& c) { return nn::to_string(c.model.activation); }};
    BIDYN_REAL_KEY("model.lr", model.adam.lr);
    BIDYN_REAL_KEY("model.weight_decay", model.adam.weight_decay);
    BIDYN_INT_KEY("model.batch_size", model.batch_size);
    BIDYN_REAL_KEY("model.holdout_ratio", model.holdout_ratio);
    BIDYN_INT_KEY("model.patience", model.patience);

    keys["bpolicy.hidden"] = {
        [](TrainConfig& c, const std::string& v) { c.backward_policy.hidden_sizes = to_sizes(v); },
        [](const TrainConfig& c) { return sizes_text(c.backward_policy.hidden_sizes); }};
    keys["bpolicy.activation"] = {
        [](TrainConfig& c, const std::string& v) {
          c.backward_policy.activation = nn::activation_from_string(v);
        },
        [](const TrainConfig& c) { return nn::to_string(c.backward_policy.activation); }};
    BIDYN_REAL_KEY("bpolicy.lr", backward_policy.lr);
    BIDYN_INT_KEY("bpolicy.batch_size", backward_policy.batch_size);
    keys["bpolicy.loss"] = {
        [](TrainConfig& c, const std::string& v) { c.backward_loss = backward_loss_from_string(v); },
        [](const TrainConfig& c) { return to_string(c.backward_loss); }};
    BIDYN_REAL_KEY("bpolicy.discriminator_lr", discriminator_lr);

    BIDYN_INT_KEY("mpc.horizon", mpc.horizon);
    BIDYN_INT_KEY("mpc.candidates", mpc.n_candidates);
    BIDYN_INT_KEY("mpc.value_samples", mpc.value_samples);
    keys["mpc.enabled"] = {[](TrainConfig& c, const std::string& v) { c.mpc.enabled = to_bool(v); },
                           [](const TrainConfig& c) { return std::string(c.mpc.enabled ? "true" : "false"); }};

    keys["ablation"] = {[](TrainConfig& c, const std::string& v) { c.ablation = ablation_from_string(v); },
                        [](const TrainConfig& c) { return to_string(c.ablation); }};
    BIDYN_INT_KEY("eval_episodes", eval_episodes);
    keys["eval_seed"] = {[](TrainConfig& c, const std::string& v) {
                           c.eval_seed = static_cast<std::uint64_t>(std::stoull(v));
                         },
                         [](const TrainConfig& c) { return std::to_string(c.eval_seed); }};
    keys["stop_return"] = {
        [](TrainConfig& c, const std::string& v) {
          if (normalize_enum(v) == "none") c.stop_return.reset();
          else c.stop_return = to_double(v);
        },
        [](const TrainConfig& c) { return c.stop_return ? num(*c.stop_return) : std::string("none"); }};
    return keys;
  }();
  return table;
}

#undef BIDYN_INT_KEY
#undef BIDYN_SIZE_KEY
#undef BIDYN_REAL_KEY

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kForwardOnly: return "forward-only";
    case Ablation::kBackwardOnly: return "backward-only";
    case Ablation::kNoMpc: return "no-mpc";
  }
  return "unknown";
}

std::string to_string(BackwardLoss l) { return l == BackwardLoss::kMle ? "mle" : "gan"; }

Ablation ablation_from_string(const std::string& s) {
  const std::string n = normalize_enum(s);
  if (n == "full") return Ablation::kFull;
  if (n == "forward-only") return Ablation::kForwardOnly;
  if (n == "backward-only") return Ablation::kBackwardOnly;
  if (n == "no-mpc") return Ablation::kNoMpc;
  throw InputError("unknown ablation '" + s + "'");
}

BackwardLoss backward_loss_from_string(const std::string& s) {
  const std::string n = normalize_enum(s);
  if (n == "mle") return BackwardLoss::kMle;
  if (n == "gan") return BackwardLoss::kGan;
  throw InputError("unknown backward-policy loss '" + s + "'");
}

void TrainConfig::finalize() {
  if (n_epochs < 1) throw InputError("n_epochs must be >= 1");
  if (env_steps_per_epoch < 1) throw InputError("env_steps_per_epoch must be >= 1");
  if (sac_batch_size < 1) throw InputError("sac_batch_size must be >= 1");
  if (!(real_ratio >= 0.0 && real_ratio <= 1.0)) throw InputError("real_ratio must be in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InputError("gamma must be in [0, 1)");
  if (backward_window == 0) throw InputError("backward_window must be positive");
  if (candidate_pool == 0) throw InputError("candidate_pool must be positive");
  if (value_samples < 1) throw InputError("value_samples must be >= 1");
  if (model_max_epochs < 1) throw InputError("model_max_epochs must be >= 1");
  if (eval_episodes < 1) throw InputError("eval_episodes must be >= 1");
  k1.validate();
  k2.validate();
  beta.validate();
  if (beta.x < 0.0 || beta.y < 0.0) throw InputError("beta schedule must be nonnegative");
  sac.gamma = gamma;
  mpc.gamma = gamma;
  sac.validate();
  model.validate();
  mpc.validate();
}

TrainConfig pendulum_preset() {
  TrainConfig c;
  c.finalize();
  return c;
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  const auto& keys = key_table();
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end())
      throw InputError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->second.set(base, value);
    } catch (const InputError& e) {
      throw InputError("config line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception&) {
      throw InputError("config line " + std::to_string(line_no) + ": bad value '" + value +
                       "' for '" + key + "'");
    }
  }
  base.finalize();
  return base;
}

TrainConfig load_config(const std::string& path, TrainConfig base) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_text(const TrainConfig& config) {
  std::string out;
  for (const auto& [name, key] : key_table()) out += name + " = " + key.get(config) + "\n";
  return out;
}

}  // namespace bidyn::trainer
