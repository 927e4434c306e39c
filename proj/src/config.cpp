#include "dfta/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

namespace dfta::cli {

EvalMode eval_mode_from_string(const std::string& s) {
  if (s == "none") return EvalMode::none;
  if (s == "random") return EvalMode::random;
  if (s == "learned") return EvalMode::learned;
  throw ConfigError("mode must be none, random, or learned (got '" + s + "')");
}

const char* to_string(EvalMode m) {
  switch (m) {
    case EvalMode::none: return "none";
    case EvalMode::random: return "random";
    case EvalMode::learned: return "learned";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("split must be val or test (got '" + s + "')");
}

const char* to_string(Split s) { return s == Split::val ? "val" : "test"; }

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::uint64_t> to_seed_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' expects comma-separated seeds, got '" + v + "'");
    }
  }
  if (out.empty()) throw ConfigError("key '" + key + "' lists no seeds");
  return out;
}

synthdata::DomainSpec::Texture texture_from(const std::string& key, const std::string& v) {
  if (v == "gradient") return synthdata::DomainSpec::Texture::gradient;
  if (v == "noise") return synthdata::DomainSpec::Texture::noise;
  throw ConfigError("key '" + key + "' expects gradient or noise, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

void add_domain_keys(std::map<std::string, Setter>& set, const std::string& section,
                     synthdata::DomainSpec RunConfig::* member) {
  set[section + ".background"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).background = texture_from(k, v);
  };
  set[section + ".blur_radius"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).blur_radius = to_double(k, v);
  };
  set[section + ".blur_jitter"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).blur_jitter = to_double(k, v);
  };
  set[section + ".noise_sigma"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).noise_sigma = to_double(k, v);
  };
  set[section + ".quantize_step"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).quantize_step = to_int(k, v);
  };
  set[section + ".seam_softness"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).seam_softness = to_double(k, v);
  };
  set[section + ".brightness_lo"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).brightness_lo = to_double(k, v);
  };
  set[section + ".brightness_hi"] = [member](RunConfig& c, const std::string& k, const std::string& v) {
    (c.*member).brightness_hi = to_double(k, v);
  };
}

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> set = [] {
    std::map<std::string, Setter> s;
    s["out_dir"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; };
    s["seeds"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.seeds = to_seed_list(k, v);
    };
    s["bank_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.bank_size = to_int(k, v);
    };

    s["data.n_real"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.n_real = to_int(k, v);
    };
    s["data.n_fake"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.n_fake = to_int(k, v);
    };
    s["data.width"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.width = to_int(k, v);
    };
    s["data.height"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.height = to_int(k, v);
    };
    s["data.channels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.channels = to_int(k, v);
    };
    s["data.train_frac"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.train_frac = to_double(k, v);
    };
    s["data.val_frac"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.val_frac = to_double(k, v);
    };
    s["data.test_frac"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.test_frac = to_double(k, v);
    };
    s["data.path_a"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.data_path_a = v;
    };
    s["data.path_b"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.data_path_b = v;
    };

    add_domain_keys(s, "domain_a", &RunConfig::domain_a);
    add_domain_keys(s, "domain_b", &RunConfig::domain_b);

    s["classifier.epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.epochs = to_int(k, v);
    };
    s["classifier.batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.batch_size = to_int(k, v);
    };
    s["classifier.lr"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.lr = static_cast<float>(to_double(k, v));
    };
    s["classifier.weight_decay"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.weight_decay = static_cast<float>(to_double(k, v));
    };
    s["classifier.feature_dim"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.feature_dim = to_int(k, v);
    };
    s["classifier.conv1_ch"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.conv1_ch = to_int(k, v);
    };
    s["classifier.conv2_ch"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.cls.conv2_ch = to_int(k, v);
    };

    s["agent.kind"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v != "dqn" && v != "ppo") throw ConfigError("key '" + k + "' expects dqn or ppo");
      c.agent.kind = v;
    };
    s["agent.episodes"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.episodes = to_int(k, v);
    };
    s["agent.horizon"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.horizon = to_int(k, v);
    };
    s["agent.hidden"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.hidden = to_int(k, v);
    };
    s["agent.lr"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.lr = static_cast<float>(to_double(k, v));
    };
    s["agent.gamma"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.gamma = static_cast<float>(to_double(k, v));
    };
    s["agent.replay_capacity"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.replay_capacity = to_int(k, v);
    };
    s["agent.batch_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.batch_size = to_int(k, v);
    };
    s["agent.target_refresh"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.target_refresh = to_int(k, v);
    };
    s["agent.eps_start"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.eps_start = static_cast<float>(to_double(k, v));
    };
    s["agent.eps_end"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.eps_end = static_cast<float>(to_double(k, v));
    };
    s["agent.clip_eps"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.clip_eps = static_cast<float>(to_double(k, v));
    };
    s["agent.entropy_weight"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.entropy_weight = static_cast<float>(to_double(k, v));
    };
    s["agent.rollout_size"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.rollout_size = to_int(k, v);
    };
    s["agent.ppo_epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.agent.ppo_epochs = to_int(k, v);
    };

    s["tta.k"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.tta.k = to_int(k, v);
    };
    s["tta.include_original"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.tta.include_original = to_bool(k, v);
    };

    s["eval.split"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.eval_split = split_from_string(v);
    };
    s["eval.fpr_ceiling"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.fpr_ceiling = to_double(k, v);
    };
    return s;
  }();
  return set;
}

void validate(const RunConfig& c) {
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.bank_size < 1 || c.bank_size > augment::kOpCount)
    throw ConfigError("bank_size must be in [1," + std::to_string(augment::kOpCount) + "]");
  if (c.tta.k < 1 || c.tta.k > c.bank_size)
    throw ConfigError("tta.k must be in [1,bank_size]");
  if (!(c.fpr_ceiling > 0.0 && c.fpr_ceiling <= 1.0))
    throw ConfigError("eval.fpr_ceiling must be in (0,1]");
  if (c.agent.episodes < 1 || c.agent.horizon < 1 || c.agent.horizon > 5)
    throw ConfigError("agent.episodes must be positive and horizon in [1,5]");
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  cfg.data.n_real = 400;
  cfg.data.n_fake = 400;
  cfg.domain_a = synthdata::default_domain_a();
  cfg.domain_b = synthdata::default_domain_b();

  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;
    auto it = schema().find(key);
    if (it == schema().end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifact("config file not found: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

std::string default_config_text() {
  return R"(# experiment configuration (key = value; # starts a comment)
out_dir = runs/out
seeds = 1,2,3,4,5
bank_size = 14

[data]
n_real = 400
n_fake = 400
width = 32
height = 32
channels = 3
train_frac = 0.55
val_frac = 0.05
test_frac = 0.40
# path_a / path_b: load existing .dfta files instead of generating

[domain_a]
background = gradient
blur_radius = 0.0
blur_jitter = 1.4
noise_sigma = 2.0
quantize_step = 1
seam_softness = 0.5
brightness_lo = 0.70
brightness_hi = 1.06

[domain_b]
background = noise
blur_radius = 1.0
blur_jitter = 0.7
noise_sigma = 3.5
quantize_step = 6
seam_softness = 1.0
brightness_lo = 0.60
brightness_hi = 0.88

[classifier]
epochs = 16
batch_size = 32
lr = 0.001
weight_decay = 0.000001
feature_dim = 64
conv1_ch = 12
conv2_ch = 24

[agent]
kind = ppo
episodes = 8000
horizon = 1
hidden = 64
lr = 0.003
gamma = 0.5
replay_capacity = 10000
batch_size = 64
target_refresh = 100
eps_start = 1.0
eps_end = 0.05
clip_eps = 0.2
entropy_weight = 0.01
rollout_size = 128
ppo_epochs = 4

[tta]
k = 3
include_original = false

[eval]
split = test
fpr_ceiling = 0.1
)";
}

}  // namespace dfta::cli
