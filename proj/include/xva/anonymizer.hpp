// xva/anonymizer.hpp
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
// Pseudo-speaker construction: pick candidate target speakers from a pool by
// a proximity rule and a gender rule, then average their embeddings. Every
// utterance of a source speaker maps to the speaker's single pseudo-speaker
// target, and each speaker draws from an RNG stream keyed by
// (seed, speaker_id), so results do not depend on processing order.

#ifndef XVA_ANONYMIZER_HPP_
#define XVA_ANONYMIZER_HPP_

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xva/clustering.hpp"
#include "xva/distance.hpp"
#include "xva/parallel.hpp"
#include "xva/rng.hpp"
#include "xva/types.hpp"

namespace xva {

enum class Proximity { kRandom, kNear, kFar, kSparse, kDense };
enum class GenderSelection { kSame, kOpposite, kRandom };

inline std::string proximity_name(Proximity p) {
  switch (p) {
    case Proximity::kRandom: return "random";
    case Proximity::kNear: return "near";
    case Proximity::kFar: return "far";
    case Proximity::kSparse: return "sparse";
    case Proximity::kDense: return "dense";
  }
  return "?";
}

inline Proximity parse_proximity(const std::string& name) {
  if (name == "random") return Proximity::kRandom;
  if (name == "near") return Proximity::kNear;
  if (name == "far") return Proximity::kFar;
  if (name == "sparse") return Proximity::kSparse;
  if (name == "dense") return Proximity::kDense;
  raise("unknown proximity '", name,
        "' (expected random|near|far|sparse|dense)");
}

inline std::string gender_selection_name(GenderSelection g) {
  switch (g) {
    case GenderSelection::kSame: return "same";
    case GenderSelection::kOpposite: return "opposite";
    case GenderSelection::kRandom: return "random";
  }
  return "?";
}

inline GenderSelection parse_gender_selection(const std::string& name) {
  if (name == "same") return GenderSelection::kSame;
  if (name == "opposite") return GenderSelection::kOpposite;
  if (name == "random") return GenderSelection::kRandom;
  raise("unknown gender selection '", name,
        "' (expected same|opposite|random)");
}

struct AnonymizationConfig {
  DistanceMetric::Kind metric = DistanceMetric::Kind::kCosine;
  Proximity proximity = Proximity::kRandom;
  GenderSelection gender_selection = GenderSelection::kSame;
  int pool_rank_n = 200;     // N: size of the near/far rank window
  int candidate_count = 100; // N*: candidates averaged into the target
  int cluster_top_k = 10;    // clusters kept by the sparse/dense rules
  double cluster_member_fraction = 0.5;
  std::uint64_t seed = 0;
};

inline void validate(const AnonymizationConfig& config) {
  require(config.pool_rank_n >= 1, "anonymizer: N must be >= 1");
  require(config.candidate_count >= 1, "anonymizer: N* must be >= 1");
  require(config.candidate_count <= config.pool_rank_n,
          "anonymizer: N* (", config.candidate_count,
          ") must not exceed N (", config.pool_rank_n, ")");
  require(config.cluster_top_k >= 1, "anonymizer: top-k must be >= 1");
  require(config.cluster_member_fraction > 0.0 &&
              config.cluster_member_fraction <= 1.0,
          "anonymizer: cluster member fraction must lie in (0, 1]");
}

// Short stable digest of a config, for report provenance.
inline std::string config_digest(const AnonymizationConfig& config) {
  char fraction[32];
  std::snprintf(fraction, sizeof(fraction), "%.17g",
                config.cluster_member_fraction);
  std::string canon = "metric=" + metric_name(config.metric) +
                      ";proximity=" + proximity_name(config.proximity) +
                      ";gender=" + gender_selection_name(config.gender_selection) +
                      ";n=" + std::to_string(config.pool_rank_n) +
                      ";n_star=" + std::to_string(config.candidate_count) +
                      ";top_k=" + std::to_string(config.cluster_top_k) +
                      ";fraction=" + fraction +
                      ";seed=" + std::to_string(config.seed);
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(hash_bytes(canon)));
  return out;
}

struct PseudoSpeakerResult {
  std::string source_speaker_id;
  Embedding target_embedding;
  std::vector<std::string> candidate_ids;
  Gender chosen_gender = Gender::kMale;
  std::optional<int> chosen_cluster;
};

// Same keeps the source gender, opposite flips it, random draws a fair coin
// from the caller's stream (resolved once per speaker, before candidates).
inline Gender resolve_target_gender(Gender source, GenderSelection strategy,
                                    Rng& rng) {
  switch (strategy) {
    case GenderSelection::kSame:
      return source;
    case GenderSelection::kOpposite:
      return opposite(source);
    case GenderSelection::kRandom:
      return rng.uniform() < 0.5 ? Gender::kMale : Gender::kFemale;
  }
  raise("resolve_target_gender: invalid strategy");
}

namespace internal {

inline std::vector<int> gender_matching_indices(const SpeakerPool& pool,
                                                Gender gender) {
  std::vector<int> idx;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool.entries[i].gender == gender) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

}  // namespace internal

// n_star distinct speakers of the requested gender, uniform without
// replacement. A pool with fewer matching entries degrades to all of them.
inline std::vector<std::string> candidates_random(const SpeakerPool& pool,
                                                  Gender gender, int n_star,
                                                  Rng& rng) {
  require(n_star >= 1, "candidates_random: N* must be >= 1");
  std::vector<int> matching = internal::gender_matching_indices(pool, gender);
  require(!matching.empty(), "candidates_random: pool has no ",
          gender_char(gender), " entries");
  std::size_t take = static_cast<std::size_t>(n_star);
  if (matching.size() < take) {
    warn("pool has only ", matching.size(), " ", gender_char(gender),
         " entries, fewer than N*=", n_star, "; using all of them");
    take = matching.size();
  }
  std::vector<std::size_t> picks =
      sample_without_replacement(matching.size(), take, rng);
  std::vector<std::string> ids;
  ids.reserve(take);
  for (std::size_t p : picks) {
    ids.push_back(pool.entries[matching[p]].speaker_id);
  }
  return ids;
}

// Ranks the gender-matching pool by distance from the source (ties broken by
// speaker id), keeps the top N (near) or bottom N (far), and samples N* of
// the window uniformly without replacement.
inline std::vector<std::string> candidates_near_far(
    const SpeakerPool& pool, const Embedding& source,
    const DistanceMetric& metric, Gender gender, Proximity mode, int n,
    int n_star, Rng& rng) {
  require(mode == Proximity::kNear || mode == Proximity::kFar,
          "candidates_near_far: proximity must be near or far");
  require(n >= 1 && n_star >= 1, "candidates_near_far: N and N* must be >= 1");
  require(n_star <= n, "candidates_near_far: N* (", n_star,
          ") must not exceed N (", n, ")");
  std::vector<int> matching = internal::gender_matching_indices(pool, gender);
  require(!matching.empty(), "candidates_near_far: pool has no ",
          gender_char(gender), " entries");

  std::vector<std::pair<double, int>> ranked;
  ranked.reserve(matching.size());
  for (int idx : matching) {
    ranked.emplace_back(distance(metric, source, pool.entries[idx].embedding),
                        idx);
  }
  std::sort(ranked.begin(), ranked.end(),
            [&pool](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first < b.first;
              return pool.entries[a.second].speaker_id <
                     pool.entries[b.second].speaker_id;
            });

  std::size_t window = static_cast<std::size_t>(n);
  if (ranked.size() < window) {
    warn("pool has only ", ranked.size(), " ", gender_char(gender),
         " entries, fewer than N=", n, "; shrinking the rank window");
    window = ranked.size();
  }
  std::size_t offset = mode == Proximity::kNear ? 0 : ranked.size() - window;
  std::size_t take = static_cast<std::size_t>(n_star);
  if (take > window) {
    warn("rank window holds ", window, " entries, fewer than N*=", n_star,
         "; using all of them");
    take = window;
  }
  std::vector<std::size_t> picks = sample_without_replacement(window, take, rng);
  std::vector<std::string> ids;
  ids.reserve(take);
  for (std::size_t p : picks) {
    ids.push_back(pool.entries[ranked[offset + p].second].speaker_id);
  }
  return ids;
}

// Ranks gender-matching clusters by member count, keeps the top_k smallest
// (sparse) or largest (dense), picks one uniformly from the caller's stream,
// and returns ceil(fraction * members) of its gender-matching members. The
// member subset is drawn from a stream keyed by (config seed, exemplar
// index), so it is identical for every speaker mapped to that cluster.
inline std::pair<std::vector<std::string>, int> candidates_cluster(
    const SpeakerPool& pool, const ClusterAssignment& assignment,
    Gender gender, Proximity mode, int top_k, double fraction,
    std::uint64_t config_seed, Rng& rng) {
  require(mode == Proximity::kSparse || mode == Proximity::kDense,
          "candidates_cluster: proximity must be sparse or dense");
  require(top_k >= 1, "candidates_cluster: top-k must be >= 1");
  require(fraction > 0.0 && fraction <= 1.0,
          "candidates_cluster: fraction must lie in (0, 1]");

  std::vector<std::pair<int, int>> ranked = rank_clusters_by_size(assignment);
  std::vector<std::pair<int, int>> matching;  // (exemplar index, size)
  for (const auto& [exemplar, size] : ranked) {
    if (cluster_gender(assignment, exemplar, pool) == gender) {
      matching.emplace_back(exemplar, size);
    }
  }
  require(!matching.empty(), "candidates_cluster: no ",
          gender_char(gender), " clusters");
  if (mode == Proximity::kSparse) {
    // Ascending by size, ties toward the lower exemplar index.
    std::sort(matching.begin(), matching.end(),
              [](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second < b.second;
                return a.first < b.first;
              });
  }
  std::size_t keep = static_cast<std::size_t>(top_k);
  if (matching.size() < keep) {
    warn("only ", matching.size(), " ", gender_char(gender),
         " clusters available, fewer than top-k=", top_k,
         "; using all of them");
    keep = matching.size();
  }
  int exemplar = matching[rng.below(keep)].first;

  std::vector<std::string> eligible;
  for (const auto& [speaker, idx] : assignment.membership) {
    if (idx != exemplar) continue;
    int pidx = pool.index_of(speaker);
    require(pidx >= 0, "candidates_cluster: member '", speaker,
            "' is not in the pool");
    if (pool.entries[pidx].gender == gender) eligible.push_back(speaker);
  }
  require(!eligible.empty(), "candidates_cluster: cluster ", exemplar,
          " has no ", gender_char(gender), " members");

  std::size_t count = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(eligible.size())));
  if (count == 0) count = 1;
  Rng subset_rng = substream(config_seed ^ 0x636c757374657201ULL,
                             static_cast<std::uint64_t>(exemplar));
  std::vector<std::size_t> picks =
      sample_without_replacement(eligible.size(), count, subset_rng);
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::size_t p : picks) ids.push_back(eligible[p]);
  return {std::move(ids), exemplar};
}

// Component-wise mean of the candidates' pool embeddings.
inline Embedding pseudo_speaker(const SpeakerPool& pool,
                                const std::vector<std::string>& candidate_ids) {
  require(!candidate_ids.empty(), "pseudo_speaker: empty candidate list");
  require(pool.dim >= 1, "pseudo_speaker: pool has no dimension set");
  Embedding sum = Embedding::Zero(pool.dim);
  for (const std::string& id : candidate_ids) {
    int idx = pool.index_of(id);
    require(idx >= 0, "pseudo_speaker: unknown candidate id '", id, "'");
    sum += pool.entries[idx].embedding;
  }
  return sum / static_cast<double>(candidate_ids.size());
}

namespace internal {

struct CandidateSelection {
  std::vector<std::string> ids;
  std::optional<int> cluster;
};

inline CandidateSelection select_candidates(
    const SpeakerPool& ranking_pool, const Embedding& ranking_source,
    const DistanceMetric& metric, Gender target_gender,
    const AnonymizationConfig& config, const ClusterAssignment* assignment,
    Rng& rng) {
  CandidateSelection sel;
  switch (config.proximity) {
    case Proximity::kRandom:
      sel.ids = candidates_random(ranking_pool, target_gender,
                                  config.candidate_count, rng);
      break;
    case Proximity::kNear:
    case Proximity::kFar:
      sel.ids = candidates_near_far(ranking_pool, ranking_source, metric,
                                    target_gender, config.proximity,
                                    config.pool_rank_n,
                                    config.candidate_count, rng);
      break;
    case Proximity::kSparse:
    case Proximity::kDense: {
      require(assignment != nullptr,
              "anonymizer: sparse/dense proximity needs a cluster assignment");
      auto [ids, exemplar] = candidates_cluster(
          ranking_pool, *assignment, target_gender, config.proximity,
          config.cluster_top_k, config.cluster_member_fraction, config.seed,
          rng);
      sel.ids = std::move(ids);
      sel.cluster = exemplar;
      break;
    }
  }
  return sel;
}

constexpr std::uint64_t kSpeakerStreamTag = 0x737065616b657201ULL;

}  // namespace internal

// Anonymizes one speaker: resolves the target gender, selects candidates by
// the configured proximity rule, and averages them into the pseudo-speaker.
inline PseudoSpeakerResult anonymize_speaker(
    const std::string& source_id, const Embedding& source_embedding,
    Gender source_gender, const SpeakerPool& pool,
    const DistanceMetric& metric, const AnonymizationConfig& config,
    const ClusterAssignment* assignment = nullptr) {
  validate(config);
  Rng rng = substream(config.seed ^ internal::kSpeakerStreamTag, source_id);
  Gender target_gender =
      resolve_target_gender(source_gender, config.gender_selection, rng);
  internal::CandidateSelection sel = internal::select_candidates(
      pool, source_embedding, metric, target_gender, config, assignment, rng);
  PseudoSpeakerResult result;
  result.source_speaker_id = source_id;
  result.target_embedding = pseudo_speaker(pool, sel.ids);
  result.candidate_ids = std::move(sel.ids);
  result.chosen_gender = target_gender;
  result.chosen_cluster = sel.cluster;
  return result;
}

struct AnonymizationOutput {
  Dataset dataset;
  std::map<std::string, PseudoSpeakerResult> mapping;
};

// Anonymizes a whole dataset under the perm rule: one pseudo-speaker per
// source speaker, every utterance of that speaker mapped to the identical
// target embedding. Proximity is measured from the speaker-level mean of the
// source's utterances. When the metric is plda and the model records
// conditioning, candidate ranking runs on conditioned copies (pool and
// sources centered on the pool mean) while the returned pseudo-speakers stay
// averages of the raw pool embeddings.
inline AnonymizationOutput anonymize_dataset(
    const Dataset& dataset, const SpeakerPool& pool,
    const DistanceMetric& metric, const AnonymizationConfig& config,
    const ClusterAssignment* assignment = nullptr) {
  validate(config);
  require(!dataset.empty(), "anonymize_dataset: empty dataset");
  require(dataset.dim == pool.dim, "anonymize_dataset: dataset dim ",
          dataset.dim, " does not match pool dim ", pool.dim);

  // Speaker-level view of the sources, in order of first appearance.
  std::map<std::string, std::size_t> speaker_slot;
  std::vector<std::string> speaker_ids;
  std::vector<Gender> speaker_genders;
  std::vector<Embedding> speaker_means;
  std::vector<std::size_t> counts;
  for (const UtteranceRecord& rec : dataset.records) {
    auto [it, inserted] = speaker_slot.emplace(rec.speaker_id,
                                               speaker_ids.size());
    if (inserted) {
      speaker_ids.push_back(rec.speaker_id);
      speaker_genders.push_back(rec.gender);
      speaker_means.push_back(Embedding::Zero(dataset.dim));
      counts.push_back(0);
    }
    speaker_means[it->second] += rec.embedding;
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < speaker_means.size(); ++i) {
    speaker_means[i] /= static_cast<double>(counts[i]);
  }

  // Ranking views; identical to the raw data unless the plda model records
  // conditioning.
  const SpeakerPool* ranking_pool = &pool;
  SpeakerPool conditioned_pool;
  std::vector<Embedding> ranking_sources = speaker_means;
  if (metric.kind() == DistanceMetric::Kind::kPlda &&
      (metric.model().center() || metric.model().length_normalize())) {
    Embedding pool_mean = Embedding::Zero(pool.dim);
    std::vector<Embedding> pool_embs;
    pool_embs.reserve(pool.size());
    for (const PoolEntry& e : pool.entries) {
      pool_mean += e.embedding;
      pool_embs.push_back(e.embedding);
    }
    pool_mean /= static_cast<double>(pool.size());
    std::vector<Embedding> cond_pool =
        condition_embeddings(metric.model(), pool_embs, &pool_mean);
    conditioned_pool = pool;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      conditioned_pool.entries[i].embedding = cond_pool[i];
    }
    ranking_pool = &conditioned_pool;
    ranking_sources =
        condition_embeddings(metric.model(), speaker_means, &pool_mean);
  }

  std::vector<PseudoSpeakerResult> results(speaker_ids.size());
  parallel_for(speaker_ids.size(), [&](std::size_t i) {
    Rng rng = substream(config.seed ^ internal::kSpeakerStreamTag,
                        speaker_ids[i]);
    Gender target_gender = resolve_target_gender(
        speaker_genders[i], config.gender_selection, rng);
    internal::CandidateSelection sel = internal::select_candidates(
        *ranking_pool, ranking_sources[i], metric, target_gender, config,
        assignment, rng);
    PseudoSpeakerResult r;
    r.source_speaker_id = speaker_ids[i];
    r.target_embedding = pseudo_speaker(pool, sel.ids);
    r.candidate_ids = std::move(sel.ids);
    r.chosen_gender = target_gender;
    r.chosen_cluster = sel.cluster;
    results[i] = std::move(r);
  });

  AnonymizationOutput out;
  out.dataset.dim = dataset.dim;
  out.dataset.records.reserve(dataset.size());
  for (const UtteranceRecord& rec : dataset.records) {
    const PseudoSpeakerResult& r = results[speaker_slot.at(rec.speaker_id)];
    out.dataset.records.push_back({rec.utterance_id, rec.speaker_id,
                                   r.chosen_gender, r.target_embedding});
  }
  for (PseudoSpeakerResult& r : results) {
    std::string id = r.source_speaker_id;
    out.mapping.emplace(std::move(id), std::move(r));
  }
  return out;
}

// Report line per speaker:
//   <speaker_id> <chosen_gender> <n_candidates> <candidate_id_1,...>
inline void save_mapping_report(
    const std::map<std::string, PseudoSpeakerResult>& mapping,
    const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open '", path, "' for writing");
  for (const auto& [speaker, result] : mapping) {
    out << speaker << ' ' << gender_char(result.chosen_gender) << ' '
        << result.candidate_ids.size() << ' ';
    for (std::size_t i = 0; i < result.candidate_ids.size(); ++i) {
      if (i > 0) out << ',';
      out << result.candidate_ids[i];
    }
    out << '\n';
  }
  out.flush();
  require(out.good(), "I/O error while writing '", path, "'");
}

}  // namespace xva

#endif  // XVA_ANONYMIZER_HPP_
