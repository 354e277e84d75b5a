// Copyright 2026 The cfdrive Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfdrive/pipeline.hpp"

#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cfdrive {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  T v{};
  is >> v;
  if (is.fail() || !(is >> std::ws).eof()) throw Error(ErrorCode::kParse, "config key " + key + ": bad value '" + text + "'");
  return v;
}

/// Reads typed keys from an INI tree and remembers which ones were used.
class IniReader {
 public:
  explicit IniReader(const pt::ptree& tree) : tree_(tree) {}

  template <typename T>
  void get(const std::string& key, T& target) {
    seen_.insert(key);
    const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (node) target = parse_value<T>(key, trim(*node));
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(key, '.'));
    if (!node) return std::nullopt;
    return trim(*node);
  }

  void reject_unknown() const {
    for (const auto& [section, body] : tree_) {
      if (body.empty()) throw Error(ErrorCode::kParse, "config key outside a section: " + section);
      for (const auto& [key, value] : body) {
        const std::string full = section + "." + key;
        if (!seen_.count(full)) throw Error(ErrorCode::kParse, "unknown config key " + full);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kParse, "config: " + what);
}

std::string hex(const unsigned char* data, unsigned len) {
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(data[i]);
  return os.str();
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

AugmentedDataset originals_only(const AugmentedDataset& d) {
  AugmentedDataset out;
  for (const DemoRecord& r : d.records)
    if (!r.is_cf) out.records.push_back(r);
  out.recount();
  return out;
}

bool held_out(const PipelineConfig& cfg, const DemoRecord& r) {
  const std::uint64_t h = derive_seed(cfg.seed, static_cast<std::uint64_t>(r.scenario_id), r.seed);
  return static_cast<double>(h % 1000000ULL) < cfg.holdout_fraction * 1e6;
}

void write_json_file(const std::string& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string eval_csv(const std::string& method, const EvalReport& report) {
  return table_csv_header() + "\n" + table_csv_row(method, report) + "\n";
}

}  // namespace

AblationConfig PipelineConfig::ablation(std::uint64_t s) const {
  AblationConfig a;
  a.train_mix = train_mix;
  a.eval_templates = eval_templates;
  a.train_episodes = train_episodes;
  a.holdout_episodes = holdout_episodes;
  a.eval_routes_per_template = eval_routes_per_template;
  a.max_steps = max_steps;
  a.seed = s;
  a.tree = tree;
  a.augment = augment;
  a.train = train;
  a.penalties = penalties;
  a.workers = workers;
  return a;
}

PipelineConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  PipelineConfig c;
  IniReader r(tree);

  r.get("run.seed", c.seed);
  r.get("run.workers", c.workers);
  r.get("run.max_steps", c.max_steps);

  r.get("collect.episodes", c.train_episodes);
  if (auto mix = r.raw("collect.mix")) {
    TemplateMix m;
    for (const std::string& item : split_list(*mix)) {
      const auto colon = item.find(':');
      m.templates.push_back(parse_template(trim(item.substr(0, colon))));
      m.weights.push_back(colon == std::string::npos ? 1.0 : parse_value<double>("collect.mix", trim(item.substr(colon + 1))));
    }
    require(!m.templates.empty(), "collect.mix is empty");
    for (double w : m.weights) require(w >= 0.0 && std::isfinite(w), "collect.mix weights must be >= 0");
    c.train_mix = std::move(m);
  }

  r.get("distill.rounds", c.tree.n_rounds);
  r.get("distill.max_depth", c.tree.max_depth);
  r.get("distill.learning_rate", c.tree.learning_rate);
  r.get("distill.min_leaf", c.tree.min_leaf);
  r.get("distill.l2", c.tree.l2);
  r.get("distill.holdout_fraction", c.holdout_fraction);
  r.get("distill.holdout_episodes", c.holdout_episodes);

  CFConfig& cf = c.augment.cf;
  r.get("augment.target_fraction", c.augment.target_cf_fraction);
  r.get("augment.batch", c.augment.batch);
  r.get("augment.lambda_init", cf.lambda_init);
  r.get("augment.lambda_growth", cf.lambda_growth);
  r.get("augment.lambda_max", cf.lambda_max);
  r.get("augment.max_search_iters", cf.max_search_iters);
  r.get("augment.iters_per_lambda", cf.iters_per_lambda);
  r.get("augment.population", cf.population);
  r.get("augment.m_diverse", cf.m_diverse);
  r.get("augment.diversity_weight", cf.diversity_weight);
  r.get("augment.min_diverse_distance", cf.min_diverse_distance);

  r.get("train.epochs", c.train.epochs);
  r.get("train.batch_size", c.train.batch_size);
  r.get("train.learning_rate", c.train.learning_rate);
  r.get("train.lambda_pt", c.train.lambda_pt);
  r.get("train.lambda_map", c.train.lambda_map);
  r.get("train.lambda_tf", c.train.lambda_tf);
  if (auto hidden = r.raw("train.hidden")) {
    c.train.hidden.clear();
    for (const std::string& h : split_list(*hidden)) c.train.hidden.push_back(parse_value<int>("train.hidden", h));
  }

  r.get("evaluate.routes_per_template", c.eval_routes_per_template);
  if (auto t = r.raw("evaluate.templates"); t && *t != "all") {
    c.eval_templates.clear();
    for (const std::string& name : split_list(*t)) c.eval_templates.push_back(parse_template(name));
  }
  for (int k = 0; k < kInfractionKinds; ++k) {
    const auto kind = static_cast<InfractionKind>(k);
    std::string key = "penalties.";
    for (char ch : infraction_name(kind)) key += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    r.get(key, c.penalties.coefficient[static_cast<std::size_t>(k)]);
  }

  if (auto seeds = r.raw("ablate.seeds")) {
    c.ablation_seeds.clear();
    for (const std::string& s : split_list(*seeds)) c.ablation_seeds.push_back(parse_value<std::uint64_t>("ablate.seeds", s));
  }

  r.reject_unknown();

  require(c.workers >= 1, "run.workers must be >= 1");
  require(c.max_steps >= 1, "run.max_steps must be >= 1");
  require(c.train_episodes >= 1, "collect.episodes must be >= 1");
  require(c.holdout_fraction >= 0.0 && c.holdout_fraction < 1.0, "distill.holdout_fraction must be in [0, 1)");
  require(c.tree.n_rounds >= 1 && c.tree.max_depth >= 1 && c.tree.min_leaf >= 1, "distill settings must be >= 1");
  require(c.augment.target_cf_fraction >= 0.0 && c.augment.target_cf_fraction <= 0.5,
          "augment.target_fraction must be in [0, 0.5]");
  require(c.augment.batch >= 1, "augment.batch must be >= 1");
  require(c.train.epochs >= 1 && c.train.batch_size >= 1, "train.epochs and train.batch_size must be >= 1");
  require(c.train.lambda_pt >= 0 && c.train.lambda_map >= 0 && c.train.lambda_tf >= 0, "train lambdas must be >= 0");
  require(!c.train.hidden.empty(), "train.hidden must list at least one layer");
  for (int h : c.train.hidden) require(h >= 1, "train.hidden sizes must be >= 1");
  require(c.eval_routes_per_template >= 1, "evaluate.routes_per_template must be >= 1");
  require(!c.eval_templates.empty(), "evaluate.templates is empty");
  for (double p : c.penalties.coefficient) require(p > 0.0 && p <= 1.0, "penalties must be in (0, 1]");
  require(!c.ablation_seeds.empty(), "ablate.seeds is empty");
  try {
    c.augment.cf.validate(kFeatureCount);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

Json config_to_json(const PipelineConfig& c) {
  Json mix = Json::array();
  for (std::size_t i = 0; i < c.train_mix.templates.size(); ++i)
    mix.push_back({{"template", template_name(c.train_mix.templates[i])}, {"weight", c.train_mix.weights[i]}});
  Json eval_templates = Json::array();
  for (ScenarioTemplate t : c.eval_templates) eval_templates.push_back(template_name(t));
  Json penalties = Json::object();
  for (int k = 0; k < kInfractionKinds; ++k)
    penalties[std::string(infraction_name(static_cast<InfractionKind>(k)))] = c.penalties.coefficient[static_cast<std::size_t>(k)];
  const CFConfig& cf = c.augment.cf;
  return Json{
      {"run", {{"seed", c.seed}, {"workers", c.workers}, {"max_steps", c.max_steps}}},
      {"collect", {{"episodes", c.train_episodes}, {"mix", mix}}},
      {"distill",
       {{"rounds", c.tree.n_rounds},
        {"max_depth", c.tree.max_depth},
        {"learning_rate", c.tree.learning_rate},
        {"min_leaf", c.tree.min_leaf},
        {"l2", c.tree.l2},
        {"holdout_fraction", c.holdout_fraction},
        {"holdout_episodes", c.holdout_episodes}}},
      {"augment",
       {{"target_fraction", c.augment.target_cf_fraction},
        {"batch", c.augment.batch},
        {"lambda_init", cf.lambda_init},
        {"lambda_growth", cf.lambda_growth},
        {"lambda_max", cf.lambda_max},
        {"max_search_iters", cf.max_search_iters},
        {"iters_per_lambda", cf.iters_per_lambda},
        {"population", cf.population},
        {"m_diverse", cf.m_diverse},
        {"diversity_weight", cf.diversity_weight},
        {"min_diverse_distance", cf.min_diverse_distance}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"learning_rate", c.train.learning_rate},
        {"lambda_pt", c.train.lambda_pt},
        {"lambda_map", c.train.lambda_map},
        {"lambda_tf", c.train.lambda_tf},
        {"hidden", c.train.hidden}}},
      {"evaluate", {{"routes_per_template", c.eval_routes_per_template}, {"templates", eval_templates}}},
      {"penalties", penalties},
      {"ablate", {{"seeds", c.ablation_seeds}}}};
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIo, "SHA-256 digest failed");
  return hex(digest, len);
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::kIo, "short write to " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot write " + path + ": " + ec.message());
}

Manifest::Manifest(std::string stage, const PipelineConfig& cfg) {
  doc_ = Json{{"format", "cfdrive.manifest"},
              {"version", 1},
              {"stage", std::move(stage)},
              {"seed", cfg.seed},
              {"workers", cfg.workers},
              {"config", config_to_json(cfg)},
              {"inputs", Json::array()},
              {"outputs", Json::array()},
              {"timings_s", Json::object()}};
}

void Manifest::add_input(const std::string& role, const std::string& path) {
  doc_["inputs"].push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
}

void Manifest::add_output(const std::string& role, const std::string& path) {
  doc_["outputs"].push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
}

void Manifest::set(const std::string& key, Json value) { doc_[key] = std::move(value); }

void Manifest::timing(const std::string& step, double seconds) { doc_["timings_s"][step] = seconds; }

void Manifest::write(const std::string& path) const { write_json_file(path, doc_); }

std::string manifest_path_for(const std::string& artifact_path) { return artifact_path + ".manifest.json"; }

std::vector<std::string> verify_manifest(const std::string& manifest_path) {
  Json doc;
  try {
    doc = Json::parse(read_file(manifest_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, manifest_path + ": " + e.what());
  }
  std::vector<std::string> bad;
  for (const char* list : {"inputs", "outputs"}) {
    for (const Json& a : doc.at(list)) {
      const std::string path = a.at("path").get<std::string>();
      if (!std::filesystem::exists(path) || sha256_file(path) != a.at("sha256").get<std::string>())
        bad.push_back(a.at("role").get<std::string>());
    }
  }
  return bad;
}

StageOutcome stage_collect(const PipelineConfig& cfg, const std::string& out_path) {
  Stopwatch clock;
  Manifest m("collect", cfg);
  AugmentedDataset d;
  d.records = collect_demonstrations(cfg.train_mix, cfg.train_episodes, cfg.seed, cfg.max_steps, cfg.sim, cfg.workers);
  d.recount();
  if (d.records.empty()) throw Error(ErrorCode::kEmptyDataset, "collect: no records produced");
  m.timing("collect", clock.lap());
  write_dataset(out_path, d);
  m.add_output("dataset", out_path);
  m.add_output("schema", schema_path_for(out_path));
  m.set("counts", {{"episodes", cfg.train_episodes}, {"n_original", d.n_original}, {"n_cf", d.n_cf}});
  m.write(manifest_path_for(out_path));
  return {m.json(), false, {}};
}

StageOutcome stage_distill(const PipelineConfig& cfg, const std::string& dataset_path, const std::string& out_path) {
  Stopwatch clock;
  Manifest m("distill", cfg);
  const AugmentedDataset d = originals_only(read_dataset(dataset_path));
  m.add_input("dataset", dataset_path);
  std::vector<DemoRecord> fit_part, hold_part;
  for (const DemoRecord& r : d.records) (held_out(cfg, r) ? hold_part : fit_part).push_back(r);
  if (fit_part.empty()) fit_part = hold_part;
  if (fit_part.empty()) throw Error(ErrorCode::kEmptyDataset, "distill: dataset has no original records");
  const TreeModel model = fit(labeled_observations(fit_part), cfg.tree);
  m.timing("fit", clock.lap());
  const std::vector<LabeledObs> train_obs = labeled_observations(fit_part);
  const double train_agreement = agreement(model, train_obs);
  Json counts = {{"fit_records", fit_part.size()}, {"holdout_records", hold_part.size()}};
  Json agreement_doc = {{"train", train_agreement}};
  if (!hold_part.empty()) agreement_doc["holdout"] = agreement(model, labeled_observations(hold_part));
  else agreement_doc["holdout"] = nullptr;
  write_json_file(out_path, model.to_json());
  m.add_output("model", out_path);
  m.set("counts", counts);
  m.set("tree_agreement", agreement_doc);
  m.write(manifest_path_for(out_path));
  return {m.json(), false, {}};
}

StageOutcome stage_augment(const PipelineConfig& cfg, const std::string& dataset_path, const std::string& model_path,
                           const std::string& out_path) {
  Stopwatch clock;
  Manifest m("augment", cfg);
  const AugmentedDataset d = originals_only(read_dataset(dataset_path));
  m.add_input("dataset", dataset_path);
  Json model_doc;
  try {
    model_doc = Json::parse(read_file(model_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, model_path + ": " + e.what());
  }
  const TreeModel tree = TreeModel::from_json(model_doc);
  m.add_input("model", model_path);
  if (d.records.empty()) throw Error(ErrorCode::kEmptyDataset, "augment: dataset has no original records");
  AugmentConfig ac = cfg.augment;
  ac.seed = cfg.seed;
  ac.workers = cfg.workers;
  const AugmentResult res = augment(d.records, tree, ac, cfg.max_steps, cfg.sim);
  m.timing("augment", clock.lap());
  write_dataset(out_path, res.dataset);
  m.add_output("dataset", out_path);
  m.add_output("schema", schema_path_for(out_path));
  const AugmentStats& s = res.stats;
  const double success = s.searches ? static_cast<double>(s.searches - s.search_failures) / s.searches : 0.0;
  m.set("counts", {{"n_original", res.dataset.n_original},
                   {"n_cf", res.dataset.n_cf},
                   {"cf_fraction", s.cf_fraction},
                   {"cf_shortfall", res.dataset.cf_shortfall}});
  m.set("cf_search", {{"seeds_tried", s.seeds_tried},
                      {"searches", s.searches},
                      {"search_failures", s.search_failures},
                      {"search_success_rate", success},
                      {"cfs_found", s.cfs_found},
                      {"implausible", s.implausible},
                      {"realized", s.realized},
                      {"expert_agreement_rate", s.expert_agreement_rate()}});
  m.write(manifest_path_for(out_path));
  StageOutcome out{m.json(), false, {}};
  if (res.dataset.cf_shortfall > 0) {
    out.warning = true;
    out.message = "augment: " + std::to_string(res.dataset.cf_shortfall) +
                  " counterfactual records short of the target fraction (" + to_string(ErrorCode::kInsufficientCFs) + ")";
  }
  return out;
}

StageOutcome stage_train(const PipelineConfig& cfg, const std::string& dataset_path, const std::string& out_path) {
  Stopwatch clock;
  Manifest m("train", cfg);
  const AugmentedDataset d = read_dataset(dataset_path);
  m.add_input("dataset", dataset_path);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  const LearnerModel model = train(d.records, tc, cfg.sim);
  m.timing("train", clock.lap());
  write_json_file(out_path, model.to_json());
  const std::string curve = out_path + ".loss.csv";
  write_file_atomic(curve, loss_curve_csv(model));
  m.add_output("model", out_path);
  m.add_output("loss_curve", curve);
  const LossTerms& last = model.loss_curve().back().terms;
  m.set("counts", {{"n_original", d.n_original}, {"n_cf", d.n_cf}});
  m.set("final_loss", {{"total", last.total}, {"l_pt", last.l_pt}, {"l_map", last.l_map}, {"l_tf", last.l_tf}});
  m.write(manifest_path_for(out_path));
  return {m.json(), false, {}};
}

StageOutcome stage_evaluate(const PipelineConfig& cfg, const std::string& policy, const std::string& out_prefix) {
  Stopwatch clock;
  Manifest m("evaluate", cfg);
  const std::vector<EvalCase> cases = evaluation_cases(cfg.eval_templates, cfg.eval_routes_per_template, cfg.seed);
  std::vector<EpisodeResult> results;
  std::string method;
  if (policy == "expert") {
    method = "expert";
    results = run_suite([&] { return std::make_unique<ExpertPolicy>(cfg.sim); }, cases, cfg.max_steps, cfg.sim,
                        cfg.workers);
  } else {
    Json doc;
    try {
      doc = Json::parse(read_file(policy));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, policy + ": " + e.what());
    }
    const LearnerModel model = LearnerModel::from_json(doc);
    m.add_input("model", policy);
    method = "learner";
    results = run_suite([&] { return std::make_unique<LearnerPolicy>(model, cfg.sim); }, cases, cfg.max_steps,
                        cfg.sim, cfg.workers);
  }
  const EvalReport report = driving_score(results, cfg.penalties);
  m.timing("evaluate", clock.lap());
  write_file_atomic(out_prefix + ".json", report_to_json(report, method));
  write_file_atomic(out_prefix + ".csv", eval_csv(method, report));
  m.add_output("report", out_prefix + ".json");
  m.add_output("table", out_prefix + ".csv");
  m.set("policy", method);
  m.set("routes", results.size());
  m.set("driving_score", report.driving_score);
  m.write(manifest_path_for(out_prefix));
  return {m.json(), false, {}};
}

StageOutcome stage_ablate(const PipelineConfig& cfg, const std::string& out_prefix) {
  Stopwatch clock;
  Manifest m("ablate", cfg);
  Json runs = Json::array();
  std::string csv = "seed," + table_csv_header() + "\n";
  for (std::uint64_t s : cfg.ablation_seeds) {
    const AblationReport rep = run_ablation(cfg.ablation(s), cfg.sim);
    runs.push_back(ablation_to_json(rep));
    for (const ArmResult& a : rep.arms) csv += std::to_string(s) + "," + table_csv_row(a.name, a.report) + "\n";
    m.timing("seed_" + std::to_string(s), clock.lap());
  }
  Json doc = {{"format", "cfdrive.ablation"}, {"version", 1}, {"runs", runs}};
  const AblationSummary sum = summarize_ablation(doc);
  doc["summary"] = {{"seeds", sum.seeds},
                    {"mean_original_n", sum.mean_original_n},
                    {"mean_original_matched", sum.mean_matched},
                    {"mean_cf_augmented", sum.mean_cf},
                    {"mean_expert", sum.mean_expert},
                    {"gaps", sum.gaps},
                    {"positive_gaps", sum.positive_gaps}};
  write_json_file(out_prefix + ".json", doc);
  write_file_atomic(out_prefix + ".csv", csv);
  m.add_output("report", out_prefix + ".json");
  m.add_output("table", out_prefix + ".csv");
  m.set("summary", doc["summary"]);
  m.write(manifest_path_for(out_prefix));
  return {m.json(), false, {}};
}

AblationSummary summarize_ablation(const Json& doc) {
  AblationSummary s;
  s.min_expert = 100.0;
  for (const Json& run : doc.at("runs")) {
    double cf = 0, matched = 0;
    for (const Json& arm : run.at("arms")) {
      const std::string name = arm.at("name").get<std::string>();
      const double ds = arm.at("driving_score").get<double>();
      if (name == "expert") {
        s.mean_expert += ds;
        s.min_expert = std::min(s.min_expert, ds);
        continue;
      }
      s.max_learner = std::max(s.max_learner, ds);
      if (name == "cf_augmented") cf = ds;
      if (name == "original_matched") matched = ds;
      if (name == "original_n") s.mean_original_n += ds;
    }
    s.mean_cf += cf;
    s.mean_matched += matched;
    s.gaps.push_back(cf - matched);
    if (cf - matched > 0) ++s.positive_gaps;
    ++s.seeds;
  }
  if (s.seeds > 0) {
    const double n = s.seeds;
    s.mean_cf /= n;
    s.mean_matched /= n;
    s.mean_original_n /= n;
    s.mean_expert /= n;
  }
  return s;
}

std::string stage_report(const std::string& ablation_json_path) {
  Json doc;
  try {
    doc = Json::parse(read_file(ablation_json_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, ablation_json_path + ": " + e.what());
  }
  const AblationSummary s = summarize_ablation(doc);
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "seeds            " << s.seeds << "\n";
  os << "original_n       " << s.mean_original_n << "\n";
  os << "original_matched " << s.mean_matched << "\n";
  os << "cf_augmented     " << s.mean_cf << "\n";
  os << "expert           " << s.mean_expert << "\n";
  os << "gap per seed    ";
  for (double g : s.gaps) os << ' ' << g;
  os << "\n";
  os << "mean gap         " << s.mean_cf - s.mean_matched << "\n";
  os << "positive gaps    " << s.positive_gaps << "/" << s.seeds << "\n";
  return os.str();
}

}  // namespace cfdrive
