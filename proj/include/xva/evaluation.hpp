// xva/evaluation.hpp
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
// Privacy evaluation: speaker-verification trials scored with a PLDA model,
// summarized by ROCCH-EER, Cllr and min-Cllr, plus the average PLDA distance
// between original and anonymized embeddings. The ROC convex hull and the
// min-Cllr calibration share one pool-adjacent-violators pass.

#ifndef XVA_EVALUATION_HPP_
#define XVA_EVALUATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "xva/anonymizer.hpp"
#include "xva/dataset.hpp"
#include "xva/parallel.hpp"
#include "xva/plda.hpp"
#include "xva/types.hpp"

namespace xva {

struct Trial {
  std::string enroll_speaker_id;
  std::string test_utterance_id;
  bool is_target = false;
};

struct ScoreSet {
  std::vector<double> target_scores;
  std::vector<double> nontarget_scores;
};

inline void validate(const ScoreSet& scores) {
  require(!scores.target_scores.empty(), "score set has no target scores");
  require(!scores.nontarget_scores.empty(),
          "score set has no nontarget scores");
  for (double s : scores.target_scores) {
    require(std::isfinite(s), "score set contains a non-finite target score");
  }
  for (double s : scores.nontarget_scores) {
    require(std::isfinite(s),
            "score set contains a non-finite nontarget score");
  }
}

enum class ScenarioKind { kBaseline, kIgnorant, kSemiIgnorant };

inline std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kBaseline: return "baseline";
    case ScenarioKind::kIgnorant: return "ignorant";
    case ScenarioKind::kSemiIgnorant: return "semi_ignorant";
  }
  return "?";
}

inline ScenarioKind parse_scenario(const std::string& name) {
  if (name == "baseline") return ScenarioKind::kBaseline;
  if (name == "ignorant") return ScenarioKind::kIgnorant;
  if (name == "semi_ignorant") return ScenarioKind::kSemiIgnorant;
  raise("unknown scenario '", name,
        "' (expected baseline|ignorant|semi_ignorant)");
}

// Baseline: nobody anonymizes. Ignorant: the user publishes anonymized
// trial data but the attacker enrolls on original data. Semi-ignorant: the
// attacker also enrolls on anonymized data, under parameters that may differ
// from the user's.
struct AttackScenario {
  ScenarioKind kind = ScenarioKind::kBaseline;
  std::optional<AnonymizationConfig> user_config;
  std::optional<AnonymizationConfig> attacker_config;
};

inline void validate(const AttackScenario& scenario) {
  switch (scenario.kind) {
    case ScenarioKind::kBaseline:
      require(!scenario.user_config && !scenario.attacker_config,
              "baseline scenario takes no anonymization configs");
      break;
    case ScenarioKind::kIgnorant:
      require(scenario.user_config.has_value(),
              "ignorant scenario needs a user config");
      require(!scenario.attacker_config,
              "ignorant scenario takes no attacker config");
      break;
    case ScenarioKind::kSemiIgnorant:
      require(scenario.user_config.has_value() &&
                  scenario.attacker_config.has_value(),
              "semi_ignorant scenario needs user and attacker configs");
      break;
  }
}

// One vertex of the ROC convex hull.
struct RocchPoint {
  double pfa = 0.0;
  double pmiss = 0.0;
};

namespace internal {

// One pool-adjacent-violators block over scores sorted ascending: tied
// scores are merged up front, then adjacent blocks merge while the fitted
// target proportion fails to increase strictly. Counts stay integral so the
// hull vertices are exact rationals.
struct PavBlock {
  std::int64_t targets = 0;
  std::int64_t nontargets = 0;
  std::size_t items = 0;

  double value() const {
    return static_cast<double>(targets) /
           static_cast<double>(targets + nontargets);
  }
};

struct PavResult {
  std::vector<PavBlock> blocks;        // ascending score order
  std::vector<double> sorted_scores;   // merged-sort order
  std::vector<bool> sorted_labels;     // aligned with sorted_scores
  std::vector<std::size_t> block_of;   // item -> block index
  std::int64_t total_targets = 0;
  std::int64_t total_nontargets = 0;
};

inline PavResult pav_fit(const ScoreSet& scores) {
  validate(scores);
  PavResult r;
  r.total_targets = static_cast<std::int64_t>(scores.target_scores.size());
  r.total_nontargets =
      static_cast<std::int64_t>(scores.nontarget_scores.size());

  std::vector<std::pair<double, bool>> items;
  items.reserve(scores.target_scores.size() + scores.nontarget_scores.size());
  for (double s : scores.target_scores) items.emplace_back(s, true);
  for (double s : scores.nontarget_scores) items.emplace_back(s, false);
  std::sort(items.begin(), items.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [score, label] : items) {
    r.sorted_scores.push_back(score);
    r.sorted_labels.push_back(label);
  }

  // Tied scores are fused into one seed block before any pooling: a
  // threshold cannot separate equal scores, and pooling half a tie first
  // would bake that impossible split into the fit.
  std::size_t i = 0;
  while (i < items.size()) {
    PavBlock block;
    std::size_t j = i;
    while (j < items.size() && items[j].first == items[i].first) {
      (items[j].second ? block.targets : block.nontargets) += 1;
      block.items += 1;
      ++j;
    }
    i = j;
    r.blocks.push_back(block);
    while (r.blocks.size() >= 2 &&
           r.blocks[r.blocks.size() - 2].value() >= r.blocks.back().value()) {
      PavBlock top = r.blocks.back();
      r.blocks.pop_back();
      r.blocks.back().targets += top.targets;
      r.blocks.back().nontargets += top.nontargets;
      r.blocks.back().items += top.items;
    }
  }

  r.block_of.resize(items.size());
  std::size_t item = 0;
  for (std::size_t b = 0; b < r.blocks.size(); ++b) {
    for (std::size_t k = 0; k < r.blocks[b].items; ++k) {
      r.block_of[item++] = b;
    }
  }
  return r;
}

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace internal

// Vertices of the convex hull of the empirical ROC, from (0, 1) down to
// (1, 0): one vertex per PAV block boundary, pfa nondecreasing and pmiss
// nonincreasing. Because blocks merge on ties of the fitted proportion, no
// three vertices are collinear.
inline std::vector<RocchPoint> rocch(const ScoreSet& scores) {
  internal::PavResult pav = internal::pav_fit(scores);
  std::vector<RocchPoint> points;
  points.reserve(pav.blocks.size() + 1);
  points.push_back({0.0, 1.0});
  std::int64_t accepted_nontargets = 0;
  std::int64_t missed_targets = pav.total_targets;
  for (std::size_t k = pav.blocks.size(); k-- > 0;) {
    accepted_nontargets += pav.blocks[k].nontargets;
    missed_targets -= pav.blocks[k].targets;
    points.push_back({static_cast<double>(accepted_nontargets) /
                          static_cast<double>(pav.total_nontargets),
                      static_cast<double>(missed_targets) /
                          static_cast<double>(pav.total_targets)});
  }
  return points;
}

// Equal error rate read off the hull: the crossing of the hull with
// pmiss == pfa, by linear interpolation on the unique crossing segment.
inline double rocch_eer(const ScoreSet& scores) {
  std::vector<RocchPoint> hull = rocch(scores);
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const RocchPoint& a = hull[i];
    const RocchPoint& b = hull[i + 1];
    double da = a.pmiss - a.pfa;  // >= 0 before the crossing
    double db = b.pmiss - b.pfa;
    if (da == 0.0) return a.pfa;
    if (db > 0.0) continue;
    double t = da / (da - db);
    return a.pfa + t * (b.pfa - a.pfa);
  }
  return hull.back().pfa == hull.back().pmiss ? hull.back().pfa : 0.5;
}

// Cllr in bits: 1/2 [ mean over targets of log2(1 + e^-s)
//                   + mean over nontargets of log2(1 + e^s) ].
inline double cllr(const ScoreSet& scores) {
  validate(scores);
  const double ln2 = std::numbers::ln2;
  double target_sum = 0.0;
  for (double s : scores.target_scores) {
    target_sum += internal::softplus(-s) / ln2;
  }
  double nontarget_sum = 0.0;
  for (double s : scores.nontarget_scores) {
    nontarget_sum += internal::softplus(s) / ln2;
  }
  return 0.5 * (target_sum / static_cast<double>(scores.target_scores.size()) +
                nontarget_sum /
                    static_cast<double>(scores.nontarget_scores.size()));
}

// Cllr after optimal calibration: scores are replaced by the PAV-calibrated
// log-likelihood ratios (block posterior log-odds minus the empirical prior
// log-odds) and Cllr is evaluated on those. Depends on score order only, so
// it is invariant under strictly increasing transforms, and never exceeds
// cllr() on the same set.
inline double min_cllr(const ScoreSet& scores) {
  internal::PavResult pav = internal::pav_fit(scores);
  const double ln2 = std::numbers::ln2;
  const double prior_log_odds =
      std::log(static_cast<double>(pav.total_targets) /
               static_cast<double>(pav.total_nontargets));
  double target_sum = 0.0;
  double nontarget_sum = 0.0;
  for (std::size_t i = 0; i < pav.sorted_scores.size(); ++i) {
    const internal::PavBlock& block = pav.blocks[pav.block_of[i]];
    double llr;
    if (block.nontargets == 0) {
      llr = std::numeric_limits<double>::infinity();
    } else if (block.targets == 0) {
      llr = -std::numeric_limits<double>::infinity();
    } else {
      llr = std::log(static_cast<double>(block.targets) /
                     static_cast<double>(block.nontargets)) -
            prior_log_odds;
    }
    if (pav.sorted_labels[i]) {
      target_sum += std::isinf(llr) && llr > 0.0
                        ? 0.0
                        : internal::softplus(-llr) / ln2;
    } else {
      nontarget_sum += std::isinf(llr) && llr < 0.0
                           ? 0.0
                           : internal::softplus(llr) / ln2;
    }
  }
  return 0.5 *
         (target_sum / static_cast<double>(pav.total_targets) +
          nontarget_sum / static_cast<double>(pav.total_nontargets));
}

// Per-speaker mean embedding, keyed by speaker id.
inline std::map<std::string, Embedding> enrollment_models(
    const Dataset& dataset) {
  require(!dataset.empty(), "enrollment_models: empty dataset");
  std::map<std::string, Embedding> means;
  std::map<std::string, std::size_t> counts;
  for (const UtteranceRecord& rec : dataset.records) {
    auto [it, inserted] = means.emplace(rec.speaker_id, rec.embedding);
    if (!inserted) it->second += rec.embedding;
    ++counts[rec.speaker_id];
  }
  for (auto& [speaker, mean] : means) {
    mean /= static_cast<double>(counts[speaker]);
  }
  return means;
}

// Scores every trial as plda_llr(enrollment mean, test embedding) after
// putting both sides through the model's recorded conditioning (each list
// centered on its own mean). Scores are partitioned by trial label; results
// do not depend on trial order.
inline ScoreSet score_trials(const PldaModel& model,
                             const std::map<std::string, Embedding>& enrollments,
                             const std::vector<Trial>& trials,
                             const Dataset& test_data) {
  require(!trials.empty(), "score_trials: empty trial list");
  require(!enrollments.empty(), "score_trials: no enrollments");
  require(!test_data.empty(), "score_trials: empty test data");

  std::vector<std::string> enroll_ids;
  std::vector<Embedding> enroll_embs;
  for (const auto& [speaker, emb] : enrollments) {
    enroll_ids.push_back(speaker);
    enroll_embs.push_back(emb);
  }
  std::vector<Embedding> cond_enroll = condition_embeddings(model, enroll_embs);
  std::unordered_map<std::string, std::size_t> enroll_index;
  for (std::size_t i = 0; i < enroll_ids.size(); ++i) {
    enroll_index.emplace(enroll_ids[i], i);
  }

  std::vector<Embedding> test_embs;
  test_embs.reserve(test_data.size());
  for (const UtteranceRecord& rec : test_data.records) {
    test_embs.push_back(rec.embedding);
  }
  std::vector<Embedding> cond_test = condition_embeddings(model, test_embs);
  std::unordered_map<std::string, std::size_t> test_index;
  for (std::size_t i = 0; i < test_data.records.size(); ++i) {
    test_index.emplace(test_data.records[i].utterance_id, i);
  }

  std::vector<double> values(trials.size());
  parallel_for(trials.size(), [&](std::size_t i) {
    const Trial& trial = trials[i];
    auto e = enroll_index.find(trial.enroll_speaker_id);
    require(e != enroll_index.end(), "score_trials: unknown enroll speaker '",
            trial.enroll_speaker_id, "'");
    auto t = test_index.find(trial.test_utterance_id);
    require(t != test_index.end(), "score_trials: unknown test utterance '",
            trial.test_utterance_id, "'");
    values[i] = plda_llr(model, cond_enroll[e->second], cond_test[t->second]);
  });

  ScoreSet scores;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    (trials[i].is_target ? scores.target_scores : scores.nontarget_scores)
        .push_back(values[i]);
  }
  return scores;
}

// Mean minus-LLR displacement between aligned datasets (matched by
// utterance_id). Both sides are conditioned in a common frame anchored at
// the original dataset's mean, so the displacement geometry is preserved.
inline double average_plda_distance(const PldaModel& model,
                                    const Dataset& original,
                                    const Dataset& anonymized) {
  require(!original.empty(), "average_plda_distance: empty dataset");
  require(original.size() == anonymized.size(),
          "average_plda_distance: datasets differ in size (", original.size(),
          " vs ", anonymized.size(), ")");
  std::unordered_map<std::string, std::size_t> anon_index;
  for (std::size_t i = 0; i < anonymized.records.size(); ++i) {
    anon_index.emplace(anonymized.records[i].utterance_id, i);
  }

  std::vector<Embedding> orig_embs, anon_embs;
  orig_embs.reserve(original.size());
  anon_embs.reserve(original.size());
  Embedding reference = Embedding::Zero(original.dim);
  for (const UtteranceRecord& rec : original.records) {
    auto it = anon_index.find(rec.utterance_id);
    require(it != anon_index.end(),
            "average_plda_distance: utterance '", rec.utterance_id,
            "' missing from the anonymized dataset");
    orig_embs.push_back(rec.embedding);
    anon_embs.push_back(anonymized.records[it->second].embedding);
    reference += rec.embedding;
  }
  reference /= static_cast<double>(original.size());

  std::vector<Embedding> cond_orig =
      condition_embeddings(model, orig_embs, &reference);
  std::vector<Embedding> cond_anon =
      condition_embeddings(model, anon_embs, &reference);

  double sum = 0.0;
  for (std::size_t i = 0; i < cond_orig.size(); ++i) {
    sum += plda_distance(model, cond_orig[i], cond_anon[i]);
  }
  return sum / static_cast<double>(cond_orig.size());
}

struct ScenarioReport {
  ScenarioKind kind = ScenarioKind::kBaseline;
  double eer = 0.0;
  double cllr = 0.0;
  double min_cllr = 0.0;
  double avg_plda_distance = 0.0;
  std::size_t n_target_trials = 0;
  std::size_t n_nontarget_trials = 0;
  std::string user_config_digest;      // empty when no user config
  std::string attacker_config_digest;  // empty when no attacker config
};

// Runs one attack scenario end to end. The trial side is anonymized with the
// user config (ignorant and semi-ignorant); the enrollment side with the
// attacker config (semi-ignorant only). Anonymization metrics that need a
// model reuse the verifier's PLDA model, and the reported average PLDA
// distance always compares the original trial data with whatever the
// attacker actually scored on the trial side.
inline ScenarioReport run_scenario(const AttackScenario& scenario,
                                   const Dataset& enroll, const Dataset& trial,
                                   const std::vector<Trial>& trials,
                                   const SpeakerPool& pool,
                                   const PldaModel& model,
                                   const ClusterAssignment* assignment = nullptr) {
  validate(scenario);

  auto metric_for = [&model](const AnonymizationConfig& config) {
    return config.metric == DistanceMetric::Kind::kCosine
               ? DistanceMetric::cosine()
               : DistanceMetric::plda(model);
  };

  Dataset enroll_side = enroll;
  Dataset trial_side = trial;
  if (scenario.user_config.has_value()) {
    trial_side = anonymize_dataset(trial, pool,
                                   metric_for(*scenario.user_config),
                                   *scenario.user_config, assignment)
                     .dataset;
  }
  if (scenario.attacker_config.has_value()) {
    enroll_side = anonymize_dataset(enroll, pool,
                                    metric_for(*scenario.attacker_config),
                                    *scenario.attacker_config, assignment)
                      .dataset;
  }

  std::map<std::string, Embedding> enrollments = enrollment_models(enroll_side);
  ScoreSet scores = score_trials(model, enrollments, trials, trial_side);

  ScenarioReport report;
  report.kind = scenario.kind;
  report.eer = rocch_eer(scores);
  report.cllr = xva::cllr(scores);
  report.min_cllr = xva::min_cllr(scores);
  report.avg_plda_distance = average_plda_distance(model, trial, trial_side);
  report.n_target_trials = scores.target_scores.size();
  report.n_nontarget_trials = scores.nontarget_scores.size();
  if (scenario.user_config.has_value()) {
    report.user_config_digest = config_digest(*scenario.user_config);
  }
  if (scenario.attacker_config.has_value()) {
    report.attacker_config_digest = config_digest(*scenario.attacker_config);
  }
  return report;
}

// Trial list file: '<enroll_speaker_id> <test_utterance_id> <target|nontarget>'.
inline std::vector<Trial> load_trials(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '", path, "' for reading");
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = internal::split_fields(line);
    require(fields.size() == 3, "trial file '", path, "' line ", line_no,
            ": expected '<speaker> <utterance> <target|nontarget>'");
    Trial t;
    t.enroll_speaker_id = fields[0];
    t.test_utterance_id = fields[1];
    if (fields[2] == "target") {
      t.is_target = true;
    } else if (fields[2] == "nontarget") {
      t.is_target = false;
    } else {
      raise("trial file '", path, "' line ", line_no, ": bad label '",
            fields[2], "'");
    }
    trials.push_back(std::move(t));
  }
  require(!trials.empty(), "trial file '", path, "' has no trials");
  return trials;
}

inline void save_trials(const std::vector<Trial>& trials,
                        const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open '", path, "' for writing");
  for (const Trial& t : trials) {
    out << t.enroll_speaker_id << ' ' << t.test_utterance_id << ' '
        << (t.is_target ? "target" : "nontarget") << '\n';
  }
  out.flush();
  require(out.good(), "I/O error while writing '", path, "'");
}

// Every enrolled speaker against every test utterance; a trial is a target
// when the underlying speakers match.
inline std::vector<Trial> make_exhaustive_trials(const Dataset& enroll,
                                                 const Dataset& trial) {
  std::vector<std::string> speakers;
  std::map<std::string, bool> seen;
  for (const UtteranceRecord& rec : enroll.records) {
    if (seen.emplace(rec.speaker_id, true).second) {
      speakers.push_back(rec.speaker_id);
    }
  }
  std::vector<Trial> trials;
  trials.reserve(speakers.size() * trial.size());
  for (const std::string& speaker : speakers) {
    for (const UtteranceRecord& rec : trial.records) {
      trials.push_back({speaker, rec.utterance_id, rec.speaker_id == speaker});
    }
  }
  return trials;
}

// One JSON object per scenario, emitted as a single line.
inline std::string report_json_line(const ScenarioReport& report) {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_name(report.kind);
  j["eer"] = report.eer;
  j["cllr"] = report.cllr;
  j["min_cllr"] = report.min_cllr;
  j["avg_plda_distance"] = report.avg_plda_distance;
  j["n_target_trials"] = report.n_target_trials;
  j["n_nontarget_trials"] = report.n_nontarget_trials;
  if (report.user_config_digest.empty()) {
    j["user_config_digest"] = nullptr;
  } else {
    j["user_config_digest"] = report.user_config_digest;
  }
  if (report.attacker_config_digest.empty()) {
    j["attacker_config_digest"] = nullptr;
  } else {
    j["attacker_config_digest"] = report.attacker_config_digest;
  }
  return j.dump();
}

}  // namespace xva

#endif  // XVA_EVALUATION_HPP_
