// tools/xva.cpp
//
// Copyright 2026 The xva Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Command-line front end: synth, train-plda, cluster, anonymize, evaluate,
// report. Exit codes: 0 success, 2 usage error, 1 runtime error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xva/xva.hpp"

namespace {

// Usage problems detected after flag parsing (missing companion flags,
// contradictory settings) exit with code 2 like parser errors do.
class UsageError : public xva::Error {
 public:
  using xva::Error::Error;
};

struct SynthArgs {
  std::string out;
  int dim = 0;
  int speakers = 0;
  int utts = 0;
  double between_scale = 1.0;
  double within_scale = 0.1;
  double gender_balance = 0.5;
  std::uint64_t seed = 0;
};

int run_synth(const SynthArgs& args) {
  xva::PopulationSpec spec;
  spec.dim = args.dim;
  spec.n_speakers = args.speakers;
  spec.utterances_per_speaker = args.utts;
  spec.between_scale = args.between_scale;
  spec.within_scale = args.within_scale;
  spec.gender_balance = args.gender_balance;
  spec.seed = args.seed;
  xva::Dataset ds = xva::generate_population(spec);
  xva::save_dataset(ds, args.out);
  std::cout << "wrote " << ds.size() << " records (" << spec.n_speakers
            << " speakers, dim " << spec.dim << ") to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string train;
  std::string out;
  int rank_q = 0;
  int rank_r = 0;
  int max_iters = 20;
  double tolerance = 1e-6;
  double sigma_floor = 1e-6;
  bool center = true;
  bool lennorm = true;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& args) {
  xva::Dataset ds = xva::load_dataset(args.train);
  std::vector<xva::Embedding> embeddings;
  std::vector<std::string> labels;
  embeddings.reserve(ds.size());
  labels.reserve(ds.size());
  for (const xva::UtteranceRecord& rec : ds.records) {
    embeddings.push_back(rec.embedding);
    labels.push_back(rec.speaker_id);
  }
  xva::TrainingOptions options;
  options.rank_q = args.rank_q;
  options.rank_r = args.rank_r;
  options.max_iterations = args.max_iters;
  options.log_likelihood_tolerance = args.tolerance;
  options.sigma_floor = args.sigma_floor;
  options.center = args.center;
  options.length_normalize = args.lennorm;
  options.seed = args.seed;
  xva::TrainingStats stats;
  xva::PldaModel model = xva::train_plda(embeddings, labels, options, &stats);
  xva::save_plda(model, args.out);
  std::cout << "trained plda d=" << model.dim() << " q=" << model.rank_q()
            << " r=" << model.rank_r() << ": log-likelihood "
            << stats.log_likelihoods.back() << " after " << stats.iterations
            << " iteration(s)"
            << (stats.converged ? " (converged)" : " (max iterations)")
            << "; model written to " << args.out << "\n";
  return 0;
}

struct ClusterArgs {
  std::string pool;
  std::string out;
  std::string distance = "cosine";
  std::string model;
  double damping = 0.5;
  std::optional<double> preference;
  int max_iters = 500;
  int conv_iters = 15;
  std::uint64_t seed = 0;
};

xva::DistanceMetric make_metric(const std::string& name,
                                const std::string& model_path,
                                std::optional<xva::PldaModel>& model_storage) {
  if (name == "cosine") return xva::DistanceMetric::cosine();
  if (name == "plda") {
    if (model_path.empty()) {
      throw UsageError("--distance plda requires --model");
    }
    model_storage = xva::load_plda(model_path);
    return xva::DistanceMetric::plda(*model_storage);
  }
  throw UsageError("unknown distance '" + name + "' (expected cosine|plda)");
}

int run_cluster(const ClusterArgs& args) {
  xva::SpeakerPool pool = xva::load_speaker_pool(args.pool);
  std::optional<xva::PldaModel> model;
  xva::DistanceMetric metric = make_metric(args.distance, args.model, model);
  xva::ClusteringParams params;
  params.damping = args.damping;
  params.max_iterations = args.max_iters;
  params.convergence_iterations = args.conv_iters;
  if (args.preference.has_value()) {
    params.preference_mode = xva::ClusteringParams::PreferenceMode::kFixed;
    params.preference_value = *args.preference;
  }
  xva::ClusterAssignment assignment =
      xva::cluster_pool(pool, metric, params, args.seed);
  xva::save_clusters(assignment, args.out);
  std::cout << "found " << assignment.cluster_count() << " cluster(s) over "
            << pool.size() << " speakers in " << assignment.iterations_run
            << " iteration(s)"
            << (assignment.converged ? " (converged)" : " (not converged)")
            << "; written to " << args.out << "\n";
  return 0;
}

struct AnonymizeArgs {
  std::string in;
  std::string pool;
  std::string out;
  std::string report;
  std::string clusters;
  std::string save_clusters;
  std::string distance = "cosine";
  std::string model;
  std::string proximity = "random";
  std::string gender = "same";
  int n = 200;
  int n_star = 100;
  int top_k = 10;
  double fraction = 0.5;
  std::uint64_t seed = 0;
};

xva::AnonymizationConfig make_anon_config(const std::string& distance,
                                          const std::string& proximity,
                                          const std::string& gender, int n,
                                          int n_star, int top_k,
                                          double fraction,
                                          std::uint64_t seed) {
  xva::AnonymizationConfig config;
  if (distance == "cosine") {
    config.metric = xva::DistanceMetric::Kind::kCosine;
  } else if (distance == "plda") {
    config.metric = xva::DistanceMetric::Kind::kPlda;
  } else {
    throw UsageError("unknown distance '" + distance +
                     "' (expected cosine|plda)");
  }
  config.proximity = xva::parse_proximity(proximity);
  config.gender_selection = xva::parse_gender_selection(gender);
  config.pool_rank_n = n;
  config.candidate_count = n_star;
  config.cluster_top_k = top_k;
  config.cluster_member_fraction = fraction;
  config.seed = seed;
  xva::validate(config);
  return config;
}

int run_anonymize(const AnonymizeArgs& args) {
  xva::Dataset ds = xva::load_dataset(args.in);
  xva::SpeakerPool pool = xva::load_speaker_pool(args.pool);
  std::optional<xva::PldaModel> model;
  xva::DistanceMetric metric = make_metric(args.distance, args.model, model);
  xva::AnonymizationConfig config =
      make_anon_config(args.distance, args.proximity, args.gender, args.n,
                       args.n_star, args.top_k, args.fraction, args.seed);

  std::optional<xva::ClusterAssignment> assignment;
  if (config.proximity == xva::Proximity::kSparse ||
      config.proximity == xva::Proximity::kDense) {
    if (!args.clusters.empty()) {
      assignment = xva::load_clusters(args.clusters);
    } else {
      assignment = xva::cluster_pool(pool, metric, xva::ClusteringParams{},
                                     config.seed);
      std::cout << "clustered pool into " << assignment->cluster_count()
                << " cluster(s)\n";
      if (!args.save_clusters.empty()) {
        xva::save_clusters(*assignment, args.save_clusters);
      }
    }
  }

  xva::AnonymizationOutput output = xva::anonymize_dataset(
      ds, pool, metric, config, assignment ? &*assignment : nullptr);
  xva::save_dataset(output.dataset, args.out);
  if (!args.report.empty()) {
    xva::save_mapping_report(output.mapping, args.report);
  }
  std::cout << "anonymized " << output.dataset.size() << " utterances of "
            << output.mapping.size() << " speakers (config "
            << xva::config_digest(config) << ") to " << args.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string config_file;
  std::string model;
  std::string enroll;
  std::string trial;
  std::string trials;
  std::string pool;
  std::string clusters;
  std::string out;
  std::string scenarios = "baseline,ignorant,semi_ignorant";
  // user anonymization config
  std::string distance = "plda";
  std::string proximity = "far";
  std::string gender = "same";
  int n = 200;
  int n_star = 100;
  int top_k = 10;
  double fraction = 0.5;
  std::uint64_t seed = 0;
  // attacker anonymization config (defaults mirror the user with seed + 1)
  std::string atk_distance;
  std::string atk_proximity;
  std::string atk_gender;
  std::optional<int> atk_n;
  std::optional<int> atk_n_star;
  std::optional<int> atk_top_k;
  std::optional<double> atk_fraction;
  std::optional<std::uint64_t> atk_seed;
};

// Flat 'key = value' config file; '#' starts a comment. Flags given on the
// command line take precedence over file values.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  xva::require(in.good(), "cannot open '", path, "' for reading");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    std::size_t b = s.find_first_not_of(" \t");
    std::size_t e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    xva::require(eq != std::string::npos, "config '", path, "' line ",
                 line_no, ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    xva::require(!key.empty(), "config '", path, "' line ", line_no,
                 ": empty key");
    kv[key] = value;
  }
  return kv;
}

std::vector<std::string> split_csv(const std::string& csv) {
  std::vector<std::string> out;
  std::string token;
  for (char c : csv) {
    if (c == ',') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += c;
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

int run_evaluate(EvaluateArgs& args, CLI::App* cmd) {
  if (!args.config_file.empty()) {
    std::map<std::string, std::string> kv =
        parse_config_file(args.config_file);
    auto apply = [&](const char* key, const char* flag, auto& target) {
      auto it = kv.find(key);
      if (it == kv.end()) return;
      if (cmd->count(flag) > 0) return;  // explicit flag wins
      std::istringstream is(it->second);
      is >> target;
      xva::require(!is.fail(), "config value for '", key, "' is invalid: '",
                   it->second, "'");
    };
    apply("model", "--model", args.model);
    apply("enroll", "--enroll", args.enroll);
    apply("trial", "--trial", args.trial);
    apply("trials", "--trials", args.trials);
    apply("pool", "--pool", args.pool);
    apply("clusters", "--clusters", args.clusters);
    apply("out", "--out", args.out);
    apply("scenarios", "--scenarios", args.scenarios);
    apply("user.distance", "--distance", args.distance);
    apply("user.proximity", "--proximity", args.proximity);
    apply("user.gender", "--gender", args.gender);
    apply("user.n", "--n", args.n);
    apply("user.n_star", "--n-star", args.n_star);
    apply("user.top_k", "--top-k", args.top_k);
    apply("user.fraction", "--fraction", args.fraction);
    apply("user.seed", "--seed", args.seed);
    auto apply_opt = [&](const char* key, const char* flag, auto& target) {
      auto it = kv.find(key);
      if (it == kv.end()) return;
      if (cmd->count(flag) > 0) return;
      typename std::decay_t<decltype(target)>::value_type value{};
      std::istringstream is(it->second);
      is >> value;
      xva::require(!is.fail(), "config value for '", key, "' is invalid: '",
                   it->second, "'");
      target = value;
    };
    auto apply_str = [&](const char* key, const char* flag,
                         std::string& target) {
      auto it = kv.find(key);
      if (it != kv.end() && cmd->count(flag) == 0) target = it->second;
    };
    apply_str("attacker.distance", "--attacker-distance", args.atk_distance);
    apply_str("attacker.proximity", "--attacker-proximity",
              args.atk_proximity);
    apply_str("attacker.gender", "--attacker-gender", args.atk_gender);
    apply_opt("attacker.n", "--attacker-n", args.atk_n);
    apply_opt("attacker.n_star", "--attacker-n-star", args.atk_n_star);
    apply_opt("attacker.top_k", "--attacker-top-k", args.atk_top_k);
    apply_opt("attacker.fraction", "--attacker-fraction", args.atk_fraction);
    apply_opt("attacker.seed", "--attacker-seed", args.atk_seed);
  }

  if (args.model.empty() || args.enroll.empty() || args.trial.empty() ||
      args.pool.empty()) {
    throw UsageError(
        "evaluate needs --model, --enroll, --trial and --pool (from flags or "
        "the config file)");
  }

  xva::PldaModel model = xva::load_plda(args.model);
  xva::Dataset enroll = xva::load_dataset(args.enroll);
  xva::Dataset trial = xva::load_dataset(args.trial);
  xva::SpeakerPool pool = xva::load_speaker_pool(args.pool);
  std::vector<xva::Trial> trials =
      args.trials.empty() ? xva::make_exhaustive_trials(enroll, trial)
                          : xva::load_trials(args.trials);

  xva::AnonymizationConfig user =
      make_anon_config(args.distance, args.proximity, args.gender, args.n,
                       args.n_star, args.top_k, args.fraction, args.seed);
  xva::AnonymizationConfig attacker = make_anon_config(
      args.atk_distance.empty() ? args.distance : args.atk_distance,
      args.atk_proximity.empty() ? args.proximity : args.atk_proximity,
      args.atk_gender.empty() ? args.gender : args.atk_gender,
      args.atk_n.value_or(args.n), args.atk_n_star.value_or(args.n_star),
      args.atk_top_k.value_or(args.top_k),
      args.atk_fraction.value_or(args.fraction),
      args.atk_seed.value_or(args.seed + 1));

  std::vector<std::string> scenario_names = split_csv(args.scenarios);
  xva::require(!scenario_names.empty(), "no scenarios requested");

  bool needs_clusters = false;
  for (const std::string& name : scenario_names) {
    xva::ScenarioKind kind = xva::parse_scenario(name);
    auto cluster_mode = [](const xva::AnonymizationConfig& c) {
      return c.proximity == xva::Proximity::kSparse ||
             c.proximity == xva::Proximity::kDense;
    };
    if (kind != xva::ScenarioKind::kBaseline && cluster_mode(user)) {
      needs_clusters = true;
    }
    if (kind == xva::ScenarioKind::kSemiIgnorant && cluster_mode(attacker)) {
      needs_clusters = true;
    }
  }
  std::optional<xva::ClusterAssignment> assignment;
  if (needs_clusters) {
    if (!args.clusters.empty()) {
      assignment = xva::load_clusters(args.clusters);
    } else {
      xva::DistanceMetric metric =
          user.metric == xva::DistanceMetric::Kind::kCosine
              ? xva::DistanceMetric::cosine()
              : xva::DistanceMetric::plda(model);
      assignment = xva::cluster_pool(pool, metric, xva::ClusteringParams{},
                                     user.seed);
      std::cerr << "xva: clustered pool into " << assignment->cluster_count()
                << " cluster(s)\n";
    }
  }

  std::ofstream out_stream;
  if (!args.out.empty()) {
    out_stream.open(args.out);
    xva::require(out_stream.good(), "cannot open '", args.out,
                 "' for writing");
  }

  for (const std::string& name : scenario_names) {
    xva::AttackScenario scenario;
    scenario.kind = xva::parse_scenario(name);
    if (scenario.kind != xva::ScenarioKind::kBaseline) {
      scenario.user_config = user;
    }
    if (scenario.kind == xva::ScenarioKind::kSemiIgnorant) {
      scenario.attacker_config = attacker;
    }
    xva::ScenarioReport report =
        xva::run_scenario(scenario, enroll, trial, trials, pool, model,
                          assignment ? &*assignment : nullptr);
    std::string line = xva::report_json_line(report);
    std::cout << line << "\n";
    if (out_stream.is_open()) out_stream << line << "\n";
  }
  if (out_stream.is_open()) {
    out_stream.flush();
    xva::require(out_stream.good(), "I/O error while writing '", args.out,
                 "'");
  }
  return 0;
}

int run_report(const std::string& in_path) {
  std::ifstream in(in_path);
  xva::require(in.good(), "cannot open '", in_path, "' for reading");
  std::printf("%-14s %8s %10s %10s %14s %8s %8s  %-16s %-16s\n", "scenario",
              "EER%", "Cllr", "minCllr", "avgPLDAdist", "#target", "#nontar",
              "user", "attacker");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      xva::raise("report '", in_path, "' line ", line_no, ": ", e.what());
    }
    auto digest = [&j](const char* key) {
      return j.contains(key) && !j[key].is_null()
                 ? j[key].get<std::string>()
                 : std::string("-");
    };
    std::printf("%-14s %8.2f %10.4f %10.4f %14.4f %8zu %8zu  %-16s %-16s\n",
                j["scenario"].get<std::string>().c_str(),
                100.0 * j["eer"].get<double>(), j["cllr"].get<double>(),
                j["min_cllr"].get<double>(),
                j["avg_plda_distance"].get<double>(),
                j["n_target_trials"].get<std::size_t>(),
                j["n_nontarget_trials"].get<std::size_t>(),
                digest("user_config_digest").c_str(),
                digest("attacker_config_digest").c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"x-vector pseudo-speaker anonymization toolkit"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic speaker population");
  synth->add_option("--out", synth_args.out, "output dataset file")
      ->required();
  synth->add_option("--dim", synth_args.dim, "embedding dimension")
      ->required();
  synth->add_option("--speakers", synth_args.speakers, "number of speakers")
      ->required();
  synth->add_option("--utts", synth_args.utts, "utterances per speaker")
      ->required();
  synth->add_option("--between-scale", synth_args.between_scale,
                    "between-speaker standard deviation");
  synth->add_option("--within-scale", synth_args.within_scale,
                    "within-speaker standard deviation");
  synth->add_option("--gender-balance", synth_args.gender_balance,
                    "probability that a speaker is male");
  synth->add_option("--seed", synth_args.seed, "random seed");

  TrainArgs train_args;
  CLI::App* train =
      app.add_subcommand("train-plda", "Train a PLDA model on a dataset");
  train->add_option("--train", train_args.train, "training dataset file")
      ->required();
  train->add_option("--out", train_args.out, "output model file")->required();
  train->add_option("--rank-q", train_args.rank_q,
                    "speaker-factor rank (0 = min(dim, 100))");
  train->add_option("--rank-r", train_args.rank_r,
                    "channel-factor rank (0 = dim)");
  train->add_option("--max-iters", train_args.max_iters, "EM iteration cap");
  train->add_option("--tolerance", train_args.tolerance,
                    "log-likelihood convergence tolerance");
  train->add_option("--sigma-floor", train_args.sigma_floor,
                    "isotropic noise floor");
  train->add_flag("--center,!--no-center", train_args.center,
                  "subtract the training mean");
  train->add_flag("--lennorm,!--no-lennorm", train_args.lennorm,
                  "length-normalize embeddings");
  train->add_option("--seed", train_args.seed, "initialization seed");

  ClusterArgs cluster_args;
  CLI::App* cluster = app.add_subcommand(
      "cluster", "Cluster a speaker pool with affinity propagation");
  cluster->add_option("--pool", cluster_args.pool, "speaker pool file")
      ->required();
  cluster->add_option("--out", cluster_args.out, "output cluster file")
      ->required();
  cluster->add_option("--distance", cluster_args.distance,
                      "similarity metric: cosine|plda");
  cluster->add_option("--model", cluster_args.model,
                      "plda model file (with --distance plda)");
  cluster->add_option("--damping", cluster_args.damping,
                      "message damping in [0.5, 1)");
  double preference_value = 0.0;
  CLI::Option* pref_opt =
      cluster->add_option("--preference", preference_value,
                          "fixed preference (default: median similarity)");
  cluster->add_option("--max-iters", cluster_args.max_iters,
                      "iteration cap");
  cluster->add_option("--conv-iters", cluster_args.conv_iters,
                      "stable sweeps required for convergence");
  cluster->add_option("--seed", cluster_args.seed, "tie-break jitter seed");

  AnonymizeArgs anon_args;
  CLI::App* anonymize = app.add_subcommand(
      "anonymize", "Replace speakers in a dataset with pseudo-speakers");
  anonymize->add_option("--in", anon_args.in, "dataset to anonymize")
      ->required();
  anonymize->add_option("--pool", anon_args.pool, "anonymization pool file")
      ->required();
  anonymize->add_option("--out", anon_args.out, "output dataset file")
      ->required();
  anonymize->add_option("--report", anon_args.report,
                        "mapping report output file");
  anonymize->add_option("--clusters", anon_args.clusters,
                        "precomputed cluster file (sparse/dense)");
  anonymize->add_option("--save-clusters", anon_args.save_clusters,
                        "write computed clusters to this file");
  anonymize->add_option("--distance", anon_args.distance, "cosine|plda");
  anonymize->add_option("--model", anon_args.model,
                        "plda model file (with --distance plda)");
  anonymize->add_option("--proximity", anon_args.proximity,
                        "random|near|far|sparse|dense");
  anonymize->add_option("--gender", anon_args.gender,
                        "same|opposite|random");
  anonymize->add_option("--n", anon_args.n, "rank window size N");
  anonymize->add_option("--n-star", anon_args.n_star,
                        "candidates averaged N*");
  anonymize->add_option("--top-k", anon_args.top_k,
                        "clusters kept by sparse/dense");
  anonymize->add_option("--fraction", anon_args.fraction,
                        "fraction of cluster members used");
  anonymize->add_option("--seed", anon_args.seed, "random seed");

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Run attack scenarios and report privacy metrics");
  evaluate->add_option("--config", eval_args.config_file,
                       "key = value config file (flags override)");
  evaluate->add_option("--model", eval_args.model, "plda model file");
  evaluate->add_option("--enroll", eval_args.enroll, "enrollment dataset");
  evaluate->add_option("--trial", eval_args.trial, "trial dataset");
  evaluate->add_option("--trials", eval_args.trials,
                       "trial list file (default: exhaustive)");
  evaluate->add_option("--pool", eval_args.pool, "anonymization pool file");
  evaluate->add_option("--clusters", eval_args.clusters,
                       "precomputed cluster file");
  evaluate->add_option("--out", eval_args.out, "report output file (JSONL)");
  evaluate->add_option("--scenarios", eval_args.scenarios,
                       "comma-separated scenario list");
  evaluate->add_option("--distance", eval_args.distance,
                       "user metric: cosine|plda");
  evaluate->add_option("--proximity", eval_args.proximity, "user proximity");
  evaluate->add_option("--gender", eval_args.gender, "user gender selection");
  evaluate->add_option("--n", eval_args.n, "user rank window N");
  evaluate->add_option("--n-star", eval_args.n_star, "user candidates N*");
  evaluate->add_option("--top-k", eval_args.top_k, "user cluster top-k");
  evaluate->add_option("--fraction", eval_args.fraction,
                       "user cluster member fraction");
  evaluate->add_option("--seed", eval_args.seed, "user seed");
  evaluate->add_option("--attacker-distance", eval_args.atk_distance,
                       "attacker metric (default: user's)");
  evaluate->add_option("--attacker-proximity", eval_args.atk_proximity,
                       "attacker proximity (default: user's)");
  evaluate->add_option("--attacker-gender", eval_args.atk_gender,
                       "attacker gender selection (default: user's)");
  int atk_n = 0, atk_n_star = 0, atk_top_k = 0;
  double atk_fraction = 0.0;
  std::uint64_t atk_seed = 0;
  CLI::Option* atk_n_opt =
      evaluate->add_option("--attacker-n", atk_n, "attacker rank window N");
  CLI::Option* atk_n_star_opt = evaluate->add_option(
      "--attacker-n-star", atk_n_star, "attacker candidates N*");
  CLI::Option* atk_top_k_opt = evaluate->add_option(
      "--attacker-top-k", atk_top_k, "attacker cluster top-k");
  CLI::Option* atk_fraction_opt = evaluate->add_option(
      "--attacker-fraction", atk_fraction, "attacker member fraction");
  CLI::Option* atk_seed_opt = evaluate->add_option(
      "--attacker-seed", atk_seed, "attacker seed (default: user seed + 1)");

  std::string report_in;
  CLI::App* report =
      app.add_subcommand("report", "Render a JSONL report as a table");
  report->add_option("--in", report_in, "report file (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (train->parsed()) return run_train(train_args);
    if (cluster->parsed()) {
      if (pref_opt->count() > 0) cluster_args.preference = preference_value;
      return run_cluster(cluster_args);
    }
    if (anonymize->parsed()) return run_anonymize(anon_args);
    if (evaluate->parsed()) {
      if (atk_n_opt->count() > 0) eval_args.atk_n = atk_n;
      if (atk_n_star_opt->count() > 0) eval_args.atk_n_star = atk_n_star;
      if (atk_top_k_opt->count() > 0) eval_args.atk_top_k = atk_top_k;
      if (atk_fraction_opt->count() > 0) eval_args.atk_fraction = atk_fraction;
      if (atk_seed_opt->count() > 0) eval_args.atk_seed = atk_seed;
      return run_evaluate(eval_args, evaluate);
    }
    if (report->parsed()) return run_report(report_in);
  } catch (const UsageError& e) {
    std::cerr << "xva: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xva error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
