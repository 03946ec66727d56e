// Copyright 2026 The GCBR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gcbr/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gcbr/parallel.hpp"
#include "gcbr/report.hpp"

namespace gcbr {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

Graph GraphSource::load() const {
  return path.empty() ? generate_sbm(sbm, graph_seed) : load_graph(path);
}

ExperimentConfig::ExperimentConfig() {
  source.sbm.num_nodes = 500;
  source.graph_seed = 1;
  source.valid_size = 100;
  source.test_size = 100;
  source.split_seed = 11;
  target.sbm.num_nodes = 1000;
  target.graph_seed = 2;
  target.valid_size = 200;
  target.test_size = 300;
  target.split_seed = 12;
  // Desk-scale suite: degree independent of block size, so centrality alone
  // does not reveal the class.
  for (GraphSource* g : {&source, &target}) {
    g->sbm.degree_balanced = true;
  }
}

std::vector<std::uint64_t> ExperimentConfig::evaluation_seeds() const {
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < eval_seeds; ++r) seeds.push_back(derive_seed(seed, {0xe7a1, static_cast<std::uint64_t>(r)}));
  return seeds;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig t = train;
  t.seed = derive_seed(seed, {0x7a1});
  t.workers = workers;
  return t;
}

// ---------------------------------------------------------------------------
// Key/value mapping

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError(field + ": " + why);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

template <typename T>
T parse_num(const std::string& field, const std::string& text) {
  const std::string s = trim(text);
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) bad(field, "invalid number '" + text + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
std::string str(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

struct Field {
  std::string key;  // "section.name"
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
Field num_field(std::string key, T& ref) {
  return {key, [key, &ref](const std::string& s) { ref = parse_num<T>(key, s); }, [&ref] { return str(ref); }};
}

void add_graph_fields(std::vector<Field>& f, const std::string& sec, GraphSource& g) {
  f.push_back({sec + ".path", [&g](const std::string& s) { g.path = trim(s); }, [&g] { return g.path; }});
  f.push_back(num_field(sec + ".num_nodes", g.sbm.num_nodes));
  f.push_back({sec + ".proportions",
               [&g, sec](const std::string& s) {
                 g.sbm.class_proportions.clear();
                 for (const auto& item : split_list(s)) {
                   g.sbm.class_proportions.push_back(parse_num<double>(sec + ".proportions", item));
                 }
               },
               [&g] {
                 std::string out;
                 for (std::size_t i = 0; i < g.sbm.class_proportions.size(); ++i) {
                   out += (i ? "," : "") + format_double(g.sbm.class_proportions[i]);
                 }
                 return out;
               }});
  f.push_back(num_field(sec + ".intra_prob", g.sbm.intra_edge_prob));
  f.push_back(num_field(sec + ".inter_prob", g.sbm.inter_edge_prob));
  f.push_back({sec + ".degree_balanced",
               [&g, sec](const std::string& s) {
                 const std::string t = trim(s);
                 if (t != "true" && t != "false") bad(sec + ".degree_balanced", "expected true or false");
                 g.sbm.degree_balanced = t == "true";
               },
               [&g] { return std::string(g.sbm.degree_balanced ? "true" : "false"); }});
  f.push_back(num_field(sec + ".feature_dim", g.sbm.feature_dim));
  f.push_back(num_field(sec + ".feature_signal", g.sbm.feature_signal));
  f.push_back(num_field(sec + ".graph_seed", g.graph_seed));
  f.push_back(num_field(sec + ".valid_size", g.valid_size));
  f.push_back(num_field(sec + ".test_size", g.test_size));
  f.push_back(num_field(sec + ".split_seed", g.split_seed));
}

std::vector<Field> fields(ExperimentConfig& c) {
  std::vector<Field> f;
  f.push_back(num_field("experiment.seed", c.seed));
  f.push_back(num_field("experiment.workers", c.workers));
  f.push_back({"experiment.out", [&c](const std::string& s) { c.out_dir = trim(s); },
               [&c] { return c.out_dir.string(); }});
  f.push_back({"experiment.test_budget",
               [&c](const std::string& s) {
                 const std::string t = trim(s);
                 c.test_budget = (t == "20x" || t == "auto") ? 0 : parse_num<int>("experiment.test_budget", t);
               },
               [&c] { return c.test_budget > 0 ? std::to_string(c.test_budget) : std::string("20x"); }});
  f.push_back(num_field("experiment.eval_seeds", c.eval_seeds));
  f.push_back(num_field("experiment.pagerank_damping", c.pagerank_damping));
  add_graph_fields(f, "source", c.source);
  add_graph_fields(f, "target", c.target);
  f.push_back({"reward.variant", [&c](const std::string& s) {
                 try {
                   c.reward.variant = parse_variant(trim(s));
                 } catch (const std::invalid_argument& e) {
                   bad("reward.variant", e.what());
                 }
               },
               [&c] { return std::string(variant_name(c.reward.variant)); }});
  f.push_back(num_field("reward.alpha", c.reward.alpha));
  f.push_back(num_field("reward.eta", c.reward.eta));
  f.push_back(num_field("classifier.hidden", c.classifier.hidden));
  f.push_back(num_field("classifier.lr", c.classifier.lr));
  f.push_back(num_field("classifier.max_epochs", c.classifier.max_epochs));
  f.push_back(num_field("classifier.patience", c.classifier.patience));
  f.push_back(num_field("policy.hidden", c.train.hidden));
  f.push_back(num_field("policy.actor_lr", c.train.actor_lr));
  f.push_back(num_field("policy.critic_lr", c.train.critic_lr));
  f.push_back(num_field("policy.gamma", c.train.gamma));
  f.push_back(num_field("policy.budget", c.train.budget));
  f.push_back(num_field("policy.update_freq", c.train.update_freq));
  f.push_back(num_field("policy.episodes", c.train.max_episodes));
  f.push_back(num_field("policy.parallel", c.train.parallel_episodes));
  f.push_back({"ablation.drop",
               [&c](const std::string& s) {
                 c.dropped.reset();
                 for (const auto& name : split_list(s)) {
                   try {
                     c.dropped.set(static_cast<std::size_t>(parse_feature(name)));
                   } catch (const std::invalid_argument& e) {
                     bad("ablation.drop", e.what());
                   }
                 }
               },
               [&c] {
                 std::string out;
                 for (StateFeature feat : kAllFeatures) {
                   if (c.dropped.test(static_cast<std::size_t>(feat))) {
                     out += (out.empty() ? "" : ",") + std::string(feature_name(feat));
                   }
                 }
                 return out;
               }});
  return f;
}

}  // namespace

std::string ExperimentConfig::to_ini() const {
  ExperimentConfig copy = *this;
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields(copy)) {
    const auto dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    out << f.key.substr(dot + 1) << " = " << f.get() << '\n';
  }
  return out.str();
}

ExperimentConfig ExperimentConfig::from_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  auto table = fields(c);
  std::map<std::string, Field*> by_key;
  for (auto& f : table) by_key[f.key] = &f;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) bad(section, "keys must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = by_key.find(full);
      if (it == by_key.end()) bad(full, "unknown configuration key");
      it->second->set(value.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("config: cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_ini(ss.str());
}

void ExperimentConfig::validate() const {
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    bad("policy", e.what());
  }
  if (!(reward.alpha >= 0.0 && reward.alpha <= 1.0)) bad("reward.alpha", "must be in [0, 1]");
  if (!(reward.eta >= 0.0)) bad("reward.eta", "must be non-negative");
  if (classifier.hidden <= 0) bad("classifier.hidden", "must be positive");
  if (!(classifier.lr > 0.0)) bad("classifier.lr", "must be positive");
  if (classifier.max_epochs < 0) bad("classifier.max_epochs", "must be non-negative");
  if (classifier.patience < 0) bad("classifier.patience", "must be non-negative");
  if (test_budget < 0) bad("experiment.test_budget", "must be positive or 20x");
  if (eval_seeds <= 0) bad("experiment.eval_seeds", "must be positive");
  if (workers <= 0) bad("experiment.workers", "must be positive");
  if (!(pagerank_damping > 0.0 && pagerank_damping < 1.0)) bad("experiment.pagerank_damping", "must be in (0, 1)");
  if (columns().empty()) bad("ablation.drop", "removes every state feature");
  for (const auto& [name, g] : {std::pair<const char*, const GraphSource*>{"source", &source}, {"target", &target}}) {
    if (g->path.empty()) {
      try {
        g->sbm.validate();
      } catch (const GraphError& e) {
        bad(name, e.what());
      }
      const int train_pool = g->sbm.num_nodes - g->valid_size - g->test_size;
      if (g->valid_size <= 0 || g->test_size <= 0 || train_pool <= 0) {
        bad(std::string(name) + ".valid_size", "valid and test sizes must be positive and leave a train pool");
      }
      if (std::string(name) == "source" && train.budget > train_pool) {
        bad("policy.budget", "exceeds the source train pool of " + std::to_string(train_pool));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct LoadedGraph {
  Graph graph;
  DataSplit split;
};

LoadedGraph load_with_split(const GraphSource& src) {
  Graph g = src.load();
  DataSplit split = make_split(g, src.split_seed, src.valid_size, src.test_size);
  return {std::move(g), std::move(split)};
}

void say(const ProgressFn& p, const std::string& msg) {
  if (p) p(msg);
}

void write_config(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream(cfg.out_dir / "config.ini") << cfg.to_ini();
}

TrainResult train_on_source(const ExperimentConfig& cfg, const ProgressFn& progress) {
  const LoadedGraph src = load_with_split(cfg.source);
  const Environment env(src.graph, src.split, cfg.classifier, cfg.pagerank_damping);
  const int report_every = std::max(1, cfg.train.max_episodes / 20);
  return train_policy(env, cfg.reward, cfg.train_config(), cfg.columns(),
                      [&](int episode, std::span<const TrainLogRow> rows) {
                        if (!progress || (episode + 1) % report_every != 0) return;
                        double r = 0.0;
                        for (const auto& row : rows) r += row.cumulative_reward / static_cast<double>(rows.size());
                        say(progress, "episode " + std::to_string(episode + 1) + "/" +
                                          std::to_string(cfg.train.max_episodes) + " mean reward " + format_double(r));
                      });
}

}  // namespace

TrainOutput cmd_train(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  write_config(cfg);
  TrainOutput out;
  out.result = train_on_source(cfg, progress);
  out.checkpoint = cfg.out_dir / "policy.json";
  out.result.policy.save(out.checkpoint);
  write_train_log_csv(cfg.out_dir / "train_log.csv", out.result.log);
  say(progress, "wrote " + out.checkpoint.string());
  return out;
}

EvaluationResult cmd_evaluate(const ExperimentConfig& cfg, const fs::path& checkpoint, const ProgressFn& progress) {
  cfg.validate();
  const Policy policy = Policy::load(checkpoint);
  policy.check_compatible(cfg.columns(), cfg.reward.variant);
  write_config(cfg);
  const LoadedGraph tgt = load_with_split(cfg.target);
  const Environment env(tgt.graph, tgt.split, cfg.classifier, cfg.pagerank_damping);
  const int budget = cfg.resolve_test_budget(tgt.graph.num_classes());
  say(progress, "evaluating " + std::to_string(cfg.eval_seeds) + " seeds at budget " + std::to_string(budget));
  EvaluationResult result = evaluate_policy(policy, env, cfg.reward, budget, cfg.evaluation_seeds(), cfg.workers);
  write_metrics_csv(cfg.out_dir / "metrics.csv", std::span<const EvaluationResult>(&result, 1));
  write_trace_csv(cfg.out_dir / "trace.csv", std::span<const EvaluationResult>(&result, 1));
  return result;
}

EvaluationResult cmd_baseline(const ExperimentConfig& cfg, BaselineKind kind, const ProgressFn& progress) {
  cfg.validate();
  write_config(cfg);
  const LoadedGraph tgt = load_with_split(cfg.target);
  const Environment env(tgt.graph, tgt.split, cfg.classifier, cfg.pagerank_damping);
  const int budget = cfg.resolve_test_budget(tgt.graph.num_classes());
  say(progress, std::string(baseline_name(kind)) + ": " + std::to_string(cfg.eval_seeds) + " seeds at budget " +
                    std::to_string(budget));
  EvaluationResult result = run_baseline(kind, env, cfg.reward, budget, cfg.evaluation_seeds(), cfg.workers);
  write_metrics_csv(cfg.out_dir / "metrics.csv", std::span<const EvaluationResult>(&result, 1));
  write_trace_csv(cfg.out_dir / "trace.csv", std::span<const EvaluationResult>(&result, 1));
  return result;
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::TestBudget: return "test_budget";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Eta: return "eta";
    case SweepAxis::TrainBudget: return "train_budget";
  }
  return "?";
}

SweepAxis parse_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::TestBudget, SweepAxis::Alpha, SweepAxis::Eta, SweepAxis::TrainBudget}) {
    if (axis_name(a) == name) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(name) + "'");
}

std::vector<SweepPoint> cmd_sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                                  const ProgressFn& progress) {
  cfg.validate();
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  // Validate every point before any training starts.
  std::vector<ExperimentConfig> point_cfgs;
  for (double v : sorted) {
    ExperimentConfig c = cfg;
    switch (axis) {
      case SweepAxis::TestBudget:
        if (v < 1 || v != std::floor(v)) bad("sweep.test_budget", "values must be positive integers");
        c.test_budget = static_cast<int>(v);
        break;
      case SweepAxis::Alpha:
        c.reward.alpha = v;
        break;
      case SweepAxis::Eta:
        c.reward.eta = v;
        c.reward.variant = RewardVariant::GcbrPlusPlus;
        break;
      case SweepAxis::TrainBudget:
        if (v < 1 || v != std::floor(v)) bad("sweep.train_budget", "values must be positive integers");
        c.train.budget = static_cast<int>(v);
        break;
    }
    c.validate();
    point_cfgs.push_back(std::move(c));
  }
  write_config(cfg);

  const LoadedGraph tgt = load_with_split(cfg.target);
  const Environment env(tgt.graph, tgt.split, cfg.classifier, cfg.pagerank_damping);
  const auto seeds = cfg.evaluation_seeds();

  std::vector<SweepPoint> points(sorted.size());
  if (axis == SweepAxis::TestBudget) {
    say(progress, "training one policy for the budget sweep");
    const TrainResult trained = train_on_source(cfg, progress);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const int budget = point_cfgs[i].test_budget;
      say(progress, "test_budget = " + std::to_string(budget));
      points[i].value = sorted[i];
      points[i].methods.push_back(evaluate_policy(trained.policy, env, cfg.reward, budget, seeds, cfg.workers));
      points[i].methods.push_back(run_baseline(BaselineKind::Random, env, cfg.reward, budget, seeds, cfg.workers));
      points[i].methods.push_back(run_baseline(BaselineKind::MaxEntropy, env, cfg.reward, budget, seeds, cfg.workers));
    }
  } else {
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const ExperimentConfig& c = point_cfgs[i];
      say(progress, std::string(axis_name(axis)) + " = " + format_double(sorted[i]));
      const TrainResult trained = train_on_source(c, progress);
      const int budget = c.resolve_test_budget(tgt.graph.num_classes());
      points[i].value = sorted[i];
      points[i].methods.push_back(evaluate_policy(trained.policy, env, c.reward, budget, seeds, cfg.workers));
    }
  }

  const fs::path csv = cfg.out_dir / "sweep.csv";
  {
    std::ofstream out(csv);
    out << kSweepHeader << '\n';
    for (const auto& p : points) {
      for (const auto& m : p.methods) {
        for (const auto& run : m.runs) {
          out << axis_name(axis) << ',' << format_double(p.value) << ',' << m.method << ',' << run.seed << ','
              << format_double(run.final.micro_f1) << ',' << format_double(run.final.macro_f1) << ','
              << format_double(run.final.imbalance_ratio) << '\n';
        }
      }
    }
  }
  for (const auto& f : render_sweep_charts(csv, cfg.out_dir / "charts")) say(progress, "wrote " + f.string());
  return points;
}

namespace {

std::string ablation_label(StateFeature f) {
  switch (f) {
    case StateFeature::Centrality: return "NoCentr";
    case StateFeature::Uncertainty: return "NoUncer";
    case StateFeature::ClassDiversity: return "NoCDiv";
    case StateFeature::Selectivity: return "NoSelec";
    case StateFeature::CriteriaSimilarity: return "NoCSim";
    case StateFeature::MajorityScore: return "NoMajor";
  }
  return "?";
}

}  // namespace

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  write_config(cfg);
  const LoadedGraph tgt = load_with_split(cfg.target);
  const Environment env(tgt.graph, tgt.split, cfg.classifier, cfg.pagerank_damping);
  const int budget = cfg.resolve_test_budget(tgt.graph.num_classes());
  const auto seeds = cfg.evaluation_seeds();

  std::vector<std::pair<std::string, ExperimentConfig>> variants;
  ExperimentConfig full = cfg;
  full.dropped.reset();
  std::string full_name(variant_name(cfg.reward.variant));
  std::transform(full_name.begin(), full_name.end(), full_name.begin(), ::toupper);
  variants.emplace_back(full_name, full);
  for (StateFeature f : full.columns()) {
    ExperimentConfig c = full;
    c.dropped.set(static_cast<std::size_t>(f));
    variants.emplace_back(ablation_label(f), c);
  }

  std::vector<AblationRow> rows;
  for (const auto& [name, c] : variants) {
    say(progress, "ablation row " + name);
    const TrainResult trained = train_on_source(c, progress);
    AblationRow row;
    row.method = name;
    for (StateFeature f : kAllFeatures) {
      if (c.dropped.test(static_cast<std::size_t>(f))) row.removed = std::string(feature_name(f));
    }
    row.result = evaluate_policy(trained.policy, env, c.reward, budget, seeds, cfg.workers);
    row.result.method = name;
    rows.push_back(std::move(row));
  }

  std::ofstream out(cfg.out_dir / "ablation.csv");
  out << kAblationHeader << '\n';
  for (const auto& r : rows) {
    const auto mi = r.result.micro_f1(), ma = r.result.macro_f1(), ib = r.result.imbalance_ratio();
    out << r.method << ',' << r.removed << ',' << format_double(mi.mean) << ',' << format_double(ma.mean) << ','
        << format_double(ib.mean) << ',' << format_double(mi.stddev) << ',' << format_double(ma.stddev) << ','
        << format_double(ib.stddev) << '\n';
  }
  return rows;
}

void cmd_gen_sbm(const GraphSource& src, const fs::path& out) {
  const Graph g = src.load();
  if (out.extension() == ".json") {
    save_json_bundle(g, out);
  } else {
    save_edge_list_csv(g, out);
  }
}

}  // namespace gcbr
