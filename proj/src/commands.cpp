#include "dfta/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dfta/rng.hpp"
#include "dfta/tta.hpp"

namespace dfta::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// paths

static std::string join(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

std::string dataset_path(const RunConfig& cfg, char domain, std::uint64_t seed) {
  return join(cfg, std::string("data_") + domain + "_seed" + std::to_string(seed) + ".dfta");
}
std::string classifier_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "classifier_seed" + std::to_string(seed) + ".agp");
}
std::string agent_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "agent_" + cfg.agent.kind + "_seed" + std::to_string(seed) + ".agp");
}
std::string train_log_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "train_log_seed" + std::to_string(seed) + ".csv");
}
std::string val_metrics_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "val_metrics_seed" + std::to_string(seed) + ".json");
}
std::string reward_log_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "reward_" + cfg.agent.kind + "_seed" + std::to_string(seed) + ".csv");
}
std::string eval_csv_path(const RunConfig& cfg, EvalMode mode, int k, std::uint64_t seed) {
  return join(cfg, std::string("eval_") + to_string(mode) + "_k" + std::to_string(k) + "_seed" +
                       std::to_string(seed) + ".csv");
}
std::string audit_path(const RunConfig& cfg, EvalMode mode, int k, std::uint64_t seed) {
  return join(cfg, std::string("audit_") + to_string(mode) + "_k" + std::to_string(k) + "_seed" +
                       std::to_string(seed) + ".jsonl");
}
std::string ablate_csv_path(const RunConfig& cfg, std::uint64_t seed) {
  return join(cfg, "ablate_" + cfg.agent.kind + "_seed" + std::to_string(seed) + ".csv");
}

// ---------------------------------------------------------------------------
// small file helpers

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path);
}

// timestamps live here and only here
void append_run_manifest(const RunConfig& cfg, const std::string& command) {
  std::string path = join(cfg, "run_manifest.json");
  json manifest = json::array();
  if (fs::exists(path)) {
    std::ifstream is(path);
    try {
      is >> manifest;
      if (!manifest.is_array()) manifest = json::array();
    } catch (...) {
      manifest = json::array();
    }
  }
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%FT%TZ", std::gmtime(&t));
  json entry;
  entry["command"] = command;
  entry["timestamp"] = stamp;
  json seeds = json::array();
  for (auto s : cfg.seeds) seeds.push_back(s);
  entry["seeds"] = seeds;
  manifest.push_back(entry);
  write_text(path, manifest.dump(2) + "\n");
}

synthdata::Dataset load_domain(const RunConfig& cfg, char domain, std::uint64_t seed) {
  const std::string& override_path = domain == 'a' ? cfg.data_path_a : cfg.data_path_b;
  std::string path = override_path.empty() ? dataset_path(cfg, domain, seed) : override_path;
  if (!fs::exists(path))
    throw MissingArtifact("dataset not found: " + path + " (run `dfta gen` first)");
  if (fs::is_directory(path)) return synthdata::import_png_dir(path);
  return synthdata::load_dataset(path);
}

classifier::ClassifierModel load_classifier(const RunConfig& cfg, std::uint64_t seed) {
  std::string path = classifier_path(cfg, seed);
  if (!fs::exists(path))
    throw MissingArtifact("classifier checkpoint not found: " + path + " (run `dfta train` first)");
  return classifier::load(path);
}

std::unique_ptr<rl::Agent> load_agent_checked(const RunConfig& cfg, std::uint64_t seed) {
  std::string path = agent_path(cfg, seed);
  if (!fs::exists(path))
    throw MissingArtifact("agent checkpoint not found: " + path + " (run `dfta train-agent` first)");
  return rl::load_agent(path);
}

const std::vector<int>& split_of(const synthdata::SplitIndices& s, Split which) {
  return which == Split::val ? s.val : s.test;
}

// ---------------------------------------------------------------------------
// plots

std::string svg_header(int w, int h) {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                w, h, w, h);
  return buf;
}

void svg_line_chart(const std::string& path, const std::vector<double>& ys,
                    const std::string& title, const std::string& ylabel) {
  const int w = 640, h = 400, ml = 60, mr = 20, mt = 40, mb = 40;
  double ymin = 0.0, ymax = 1.0;
  if (!ys.empty()) {
    ymin = *std::min_element(ys.begin(), ys.end());
    ymax = *std::max_element(ys.begin(), ys.end());
    if (ymax - ymin < 1e-12) {
      ymin -= 0.5;
      ymax += 0.5;
    }
  }
  std::string svg = svg_header(w, h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">%s</text>\n",
                ml, title.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                ml, mt, w - ml - mr, h - mt - mb);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"8\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\" "
                "transform=\"rotate(-90 8 %d)\">%s</text>\n",
                h / 2, h / 2, ylabel.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\">%.4f</text>\n",
                4, mt + 12, ymax);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-family=\"sans-serif\" font-size=\"12\">%.4f</text>\n",
                4, h - mb, ymin);
  svg += buf;
  if (ys.size() > 1) {
    svg += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      double x = ml + (w - ml - mr) * static_cast<double>(i) / (ys.size() - 1);
      double y = h - mb - (h - mt - mb) * (ys[i] - ymin) / (ymax - ymin);
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x, y);
      svg += buf;
    }
    svg += "\"/>\n";
  }
  svg += "</svg>\n";
  write_text(path, svg);
}

std::vector<std::pair<double, double>> roc_points(const std::vector<metrics::LabeledScore>& scores) {
  std::vector<metrics::LabeledScore> s = scores;
  std::sort(s.begin(), s.end(), [](const metrics::LabeledScore& a, const metrics::LabeledScore& b) {
    return a.score > b.score;
  });
  long n_real = 0, n_fake = 0;
  for (const auto& x : s) (x.label == 1 ? n_fake : n_real)++;
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) {
      (s[j].label == 1 ? tp : fp)++;
      ++j;
    }
    pts.emplace_back(static_cast<double>(fp) / n_real, static_cast<double>(tp) / n_fake);
    i = j;
  }
  return pts;
}

void svg_roc(const std::string& path, const std::vector<metrics::LabeledScore>& scores,
             const std::string& title) {
  const int w = 420, h = 420, m = 50;
  std::string svg = svg_header(w, h);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">%s</text>\n", m,
                title.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"none\" "
                "stroke=\"black\"/>\n",
                m, m, w - 2 * m, h - 2 * m);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"gray\" "
                "stroke-dasharray=\"4\"/>\n",
                m, h - m, w - m, m);
  svg += buf;
  svg += "<polyline fill=\"none\" stroke=\"crimson\" stroke-width=\"1.5\" points=\"";
  for (auto [fpr, tpr] : roc_points(scores)) {
    std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", m + (w - 2 * m) * fpr, h - m - (h - 2 * m) * tpr);
    svg += buf;
  }
  svg += "\"/>\n</svg>\n";
  write_text(path, svg);
}

// ---------------------------------------------------------------------------
// evaluation core

struct DomainEval {
  std::vector<metrics::LabeledScore> scores;
  std::vector<std::string> audit_lines;
};

DomainEval evaluate_domain(const RunConfig& cfg, const classifier::ClassifierModel& model,
                           rl::Agent* agent, const synthdata::Dataset& ds,
                           const std::vector<int>& indices, char domain, EvalMode mode, int k,
                           std::uint64_t seed) {
  auto bank = cfg.bank();
  DomainEval out;
  char idbuf[48];
  for (int idx : indices) {
    const auto& item = ds.items[static_cast<std::size_t>(idx)];
    std::snprintf(idbuf, sizeof(idbuf), "%c_%05d", domain, idx);
    if (mode == EvalMode::none) {
      double p = classifier::predict_proba(model, item.image);
      out.scores.push_back({p, item.label});
      char line[160];
      std::snprintf(line, sizeof(line),
                    "{\"image\":\"%s\",\"actions\":[],\"fused\":%.9f,\"label\":%d}", idbuf, p,
                    item.label);
      out.audit_lines.push_back(line);
    } else if (mode == EvalMode::random) {
      // k distinct actions, seeded per image
      Rng rng(Rng::mix(Rng::mix(seed, 0x52ADULL + static_cast<unsigned char>(domain)),
                       static_cast<std::uint64_t>(idx)));
      auto picks = rng.sample_without_replacement(static_cast<int>(bank.size()), k);
      double sum = 0.0;
      std::string actions;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        sum += classifier::predict_proba(
            model, augment::apply(bank[static_cast<std::size_t>(picks[i])], item.image));
        if (i) actions += ",";
        actions += "\"" + augment::op_name(bank[static_cast<std::size_t>(picks[i])].op) + "\"";
      }
      double p = sum / k;
      out.scores.push_back({p, item.label});
      std::string line = "{\"image\":\"" + std::string(idbuf) + "\",\"actions\":[" + actions + "]";
      char tail[64];
      std::snprintf(tail, sizeof(tail), ",\"fused\":%.9f,\"label\":%d}", p, item.label);
      out.audit_lines.push_back(line + tail);
    } else {
      tta::TTAConfig tc = cfg.tta;
      tc.k = k;
      auto state = classifier::feature_map(model, item.image);
      auto action_scores = agent->action_scores(state);
      auto res = tta::classify_with_tta(model, *agent, item.image, tc, bank);
      out.scores.push_back({res.fused, item.label});
      out.audit_lines.push_back(tta::audit_record(idbuf, res, action_scores, bank, item.label));
    }
  }
  return out;
}

int guarded(const std::string& what, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << what << ": " << e.what() << "\n";
    return 2;
  } catch (const MissingArtifact& e) {
    std::cerr << what << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << what << ": " << e.what() << "\n";
    return 4;
  }
}

}  // namespace

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = "mode,domain,k,seed," + metrics::MetricReport::csv_header() + "\n";
  for (const auto& r : rows) {
    out += r.mode + "," + r.domain + "," + std::to_string(r.k) + "," + std::to_string(r.seed) +
           "," + r.report.csv_row() + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen(const RunConfig& cfg, bool force) {
  return guarded("gen", [&] {
    fs::create_directories(cfg.out_dir);
    for (auto seed : cfg.seeds) {
      for (char d : {'a', 'b'}) {
        std::string path = dataset_path(cfg, d, seed);
        if (fs::exists(path) && !force)
          throw ConfigError(path + " already exists (pass --force to overwrite)");
      }
    }
    for (auto seed : cfg.seeds) {
      auto a = synthdata::generate(cfg.domain_a, cfg.data, seed, 0);
      auto b = synthdata::generate(cfg.domain_b, cfg.data, seed, 1);
      synthdata::save_dataset(a, dataset_path(cfg, 'a', seed));
      synthdata::save_dataset(b, dataset_path(cfg, 'b', seed));
      std::cout << "gen: wrote " << dataset_path(cfg, 'a', seed) << " and "
                << dataset_path(cfg, 'b', seed) << "\n";
    }
    json m;
    m["n_real"] = cfg.data.n_real;
    m["n_fake"] = cfg.data.n_fake;
    m["width"] = cfg.data.width;
    m["height"] = cfg.data.height;
    m["channels"] = cfg.data.channels;
    m["train_frac"] = cfg.data.train_frac;
    m["val_frac"] = cfg.data.val_frac;
    m["test_frac"] = cfg.data.test_frac;
    json seeds = json::array();
    for (auto s : cfg.seeds) seeds.push_back(s);
    m["seeds"] = seeds;
    m["domain_a"] = cfg.domain_a.name;
    m["domain_b"] = cfg.domain_b.name;
    write_text(join(cfg, "data_manifest.json"), m.dump(2) + "\n");
    append_run_manifest(cfg, "gen");
  });
}

int cmd_train(const RunConfig& cfg) {
  return guarded("train", [&] {
    fs::create_directories(cfg.out_dir);
    for (auto seed : cfg.seeds) {
      auto ds = load_domain(cfg, 'a', seed);
      auto splits = synthdata::split(ds, cfg.data);
      std::vector<LabeledImage> train_set;
      for (int i : splits.train) train_set.push_back(ds.items[static_cast<std::size_t>(i)]);

      classifier::Hyperparams hp = cfg.cls;
      hp.input_w = cfg.data.width;
      hp.input_h = cfg.data.height;
      hp.input_c = cfg.data.channels;
      auto model = classifier::build(hp, Rng::mix(seed, 0xC1A55ULL));
      auto log = classifier::train(model, train_set, hp.epochs, hp.batch_size,
                                   Rng::mix(seed, 0x7EA1ULL));
      classifier::save(model, classifier_path(cfg, seed));
      write_text(train_log_path(cfg, seed), classifier::training_log_csv(log));

      // validation metrics on the plain (no TTA) scores
      std::vector<metrics::LabeledScore> val_scores;
      for (int i : splits.val) {
        const auto& item = ds.items[static_cast<std::size_t>(i)];
        val_scores.push_back({classifier::predict_proba(model, item.image), item.label});
      }
      auto report = metrics::evaluate(val_scores, cfg.fpr_ceiling);
      write_text(val_metrics_path(cfg, seed), report.to_json() + "\n");
      std::cout << "train: seed " << seed << " train_acc="
                << (log.empty() ? 0.0 : log.back().accuracy) << " val_auc=" << report.auc << "\n";
    }
    append_run_manifest(cfg, "train");
  });
}

int cmd_train_agent(const RunConfig& cfg) {
  return guarded("train-agent", [&] {
    fs::create_directories(cfg.out_dir);
    for (auto seed : cfg.seeds) {
      auto model = load_classifier(cfg, seed);
      auto ds = load_domain(cfg, 'a', seed);
      auto splits = synthdata::split(ds, cfg.data);
      std::vector<LabeledImage> train_set;
      for (int i : splits.train) train_set.push_back(ds.items[static_cast<std::size_t>(i)]);

      auto bank = cfg.bank();
      std::unique_ptr<rl::Agent> agent;
      if (cfg.agent.kind == "dqn") {
        rl::DqnConfig dc;
        dc.state_dim = model.hp.feature_dim;
        dc.n_actions = static_cast<int>(bank.size());
        dc.hidden = cfg.agent.hidden;
        dc.gamma = cfg.agent.gamma;
        dc.lr = cfg.agent.lr;
        dc.replay_capacity = cfg.agent.replay_capacity;
        dc.batch_size = cfg.agent.batch_size;
        dc.target_refresh = cfg.agent.target_refresh;
        dc.eps_start = cfg.agent.eps_start;
        dc.eps_end = cfg.agent.eps_end;
        agent = std::make_unique<rl::DqnAgent>(dc, Rng::mix(seed, 0xA9E27ULL));
      } else {
        rl::PpoConfig pc;
        pc.state_dim = model.hp.feature_dim;
        pc.n_actions = static_cast<int>(bank.size());
        pc.hidden = cfg.agent.hidden;
        pc.lr = cfg.agent.lr;
        pc.clip_eps = cfg.agent.clip_eps;
        pc.entropy_weight = cfg.agent.entropy_weight;
        pc.rollout_size = cfg.agent.rollout_size;
        pc.epochs = cfg.agent.ppo_epochs;
        agent = std::make_unique<rl::PpoAgent>(pc, Rng::mix(seed, 0xA9E27ULL));
      }

      auto log = rl::train_agent(*agent, model, train_set, bank, cfg.agent.episodes,
                                 cfg.agent.horizon, Rng::mix(seed, 0x5EEDULL));
      agent->save(agent_path(cfg, seed));
      write_text(reward_log_path(cfg, seed), rl::reward_log_csv(log));

      std::vector<double> curve;
      for (const auto& e : log) curve.push_back(e.moving_avg);
      svg_line_chart(join(cfg, "reward_" + cfg.agent.kind + "_seed" + std::to_string(seed) + ".svg"),
                     curve, cfg.agent.kind + " reward (moving average)", "mean reward");
      std::cout << "train-agent: seed " << seed << " kind=" << cfg.agent.kind
                << " final_avg_reward=" << (log.empty() ? 0.0 : log.back().moving_avg) << "\n";
    }
    append_run_manifest(cfg, "train-agent");
  });
}

int cmd_eval(const RunConfig& cfg, EvalMode mode, int k) {
  return guarded("eval", [&] {
    if (k < 1 || k > cfg.bank_size) throw ConfigError("k must be in [1,bank_size]");
    fs::create_directories(cfg.out_dir);
    for (auto seed : cfg.seeds) {
      auto model = load_classifier(cfg, seed);
      std::unique_ptr<rl::Agent> agent;
      if (mode == EvalMode::learned) agent = load_agent_checked(cfg, seed);

      std::vector<EvalRow> rows;
      std::string audit;
      for (char d : {'a', 'b'}) {
        auto ds = load_domain(cfg, d, seed);
        auto splits = synthdata::split(ds, cfg.data);
        auto cell = evaluate_domain(cfg, model, agent.get(), ds, split_of(splits, cfg.eval_split),
                                    d, mode, k, seed);
        EvalRow row;
        row.mode = to_string(mode);
        row.domain = std::string(1, d);
        row.k = k;
        row.seed = seed;
        row.report = metrics::evaluate(cell.scores, cfg.fpr_ceiling);
        rows.push_back(row);
        for (const auto& line : cell.audit_lines) audit += line + "\n";
        svg_roc(join(cfg, std::string("roc_") + to_string(mode) + "_" + d + "_k" +
                              std::to_string(k) + "_seed" + std::to_string(seed) + ".svg"),
                cell.scores, std::string("ROC ") + to_string(mode) + " domain " + d);
        std::cout << "eval: seed " << seed << " mode=" << to_string(mode) << " domain=" << d
                  << " auc=" << row.report.auc << " pauc=" << row.report.pauc
                  << " eer=" << row.report.eer << "\n";
      }
      write_text(eval_csv_path(cfg, mode, k, seed), eval_csv(rows));
      write_text(audit_path(cfg, mode, k, seed), audit);
    }
    append_run_manifest(cfg, std::string("eval-") + to_string(mode));
  });
}

int cmd_ablate(const RunConfig& cfg, int k_min, int k_max) {
  return guarded("ablate", [&] {
    if (k_min < 1 || k_max < k_min || k_max > cfg.bank_size)
      throw ConfigError("ablate k range must satisfy 1 <= k_min <= k_max <= bank_size");
    fs::create_directories(cfg.out_dir);
    for (auto seed : cfg.seeds) {
      auto model = load_classifier(cfg, seed);
      auto agent = load_agent_checked(cfg, seed);

      std::vector<EvalRow> rows;
      std::map<char, std::pair<int, double>> best;  // domain -> (k, auc)
      for (char d : {'a', 'b'}) {
        auto ds = load_domain(cfg, d, seed);
        auto splits = synthdata::split(ds, cfg.data);
        const auto& indices = split_of(splits, cfg.eval_split);
        for (int k = k_min; k <= k_max; ++k) {
          auto cell =
              evaluate_domain(cfg, model, agent.get(), ds, indices, d, EvalMode::learned, k, seed);
          EvalRow row;
          row.mode = "learned";
          row.domain = std::string(1, d);
          row.k = k;
          row.seed = seed;
          row.report = metrics::evaluate(cell.scores, cfg.fpr_ceiling);
          rows.push_back(row);
          auto it = best.find(d);
          if (it == best.end() || row.report.auc > it->second.second)
            best[d] = {k, row.report.auc};
        }
      }
      write_text(ablate_csv_path(cfg, seed), eval_csv(rows));

      std::printf("ablation (seed %llu, %s, split %s)\n",
                  static_cast<unsigned long long>(seed), cfg.agent.kind.c_str(),
                  to_string(cfg.eval_split));
      std::printf("  %-8s %-4s %-10s %-10s %-10s\n", "domain", "k", "auc", "pauc", "eer");
      for (const auto& r : rows)
        std::printf("  %-8s %-4d %-10.4f %-10.4f %-10.4f\n", r.domain.c_str(), r.k, r.report.auc,
                    r.report.pauc, r.report.eer);
      for (auto [d, kv] : best)
        std::printf("  best k for domain %c: %d (auc %.4f)\n", d, kv.first, kv.second);
    }
    append_run_manifest(cfg, "ablate");
  });
}

int cmd_report(const RunConfig& cfg) {
  return guarded("report", [&] {
    if (!fs::exists(cfg.out_dir)) throw MissingArtifact("output directory not found: " + cfg.out_dir);
    // (mode, domain, k) -> list of auc/pauc/eer across seeds
    struct Cell {
      std::vector<double> auc, pauc, eer;
    };
    std::map<std::string, Cell> cells;
    int files = 0;
    for (const auto& entry : fs::directory_iterator(cfg.out_dir)) {
      auto name = entry.path().filename().string();
      bool is_eval = name.rfind("eval_", 0) == 0 && name.find(".csv") != std::string::npos;
      bool is_ablate = name.rfind("ablate_", 0) == 0 && name.find(".csv") != std::string::npos;
      if (!is_eval && !is_ablate) continue;
      files++;
      std::ifstream is(entry.path());
      std::string line;
      std::getline(is, line);  // header
      while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string mode, domain, k, seed, auc, pauc, eer;
        std::getline(ss, mode, ',');
        std::getline(ss, domain, ',');
        std::getline(ss, k, ',');
        std::getline(ss, seed, ',');
        std::getline(ss, auc, ',');
        std::getline(ss, pauc, ',');
        std::getline(ss, eer, ',');
        auto& cell = cells[mode + " " + domain + " k=" + k];
        cell.auc.push_back(std::stod(auc));
        cell.pauc.push_back(std::stod(pauc));
        cell.eer.push_back(std::stod(eer));
      }
    }
    if (files == 0) throw MissingArtifact("no eval/ablate csv files in " + cfg.out_dir);

    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    std::string text = "configuration        seeds  auc       pauc      eer\n";
    char buf[160];
    for (const auto& [key, cell] : cells) {
      std::snprintf(buf, sizeof(buf), "%-20s %-6zu %-9.4f %-9.4f %-9.4f\n", key.c_str(),
                    cell.auc.size(), mean(cell.auc), mean(cell.pauc), mean(cell.eer));
      text += buf;
    }
    std::cout << text;
    write_text(join(cfg, "report.txt"), text);
  });
}

}  // namespace dfta::cli
