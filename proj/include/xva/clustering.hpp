// xva/clustering.hpp
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
// Affinity propagation over pool similarities. Cluster count is not chosen
// up front; it emerges from the preference put on the similarity-matrix
// diagonal and from damped responsibility/availability message passing.

#ifndef XVA_CLUSTERING_HPP_
#define XVA_CLUSTERING_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xva/distance.hpp"
#include "xva/parallel.hpp"
#include "xva/rng.hpp"
#include "xva/types.hpp"

namespace xva {

struct ClusteringParams {
  enum class PreferenceMode { kMedianSimilarity, kFixed };
  PreferenceMode preference_mode = PreferenceMode::kMedianSimilarity;
  double preference_value = 0.0;  // used with kFixed
  double damping = 0.5;
  int max_iterations = 500;
  int convergence_iterations = 15;
};

inline void validate(const ClusteringParams& params) {
  require(params.damping >= 0.5 && params.damping < 1.0,
          "clustering: damping must lie in [0.5, 1)");
  require(params.max_iterations >= 1,
          "clustering: max_iterations must be >= 1");
  require(params.convergence_iterations >= 1 &&
              params.convergence_iterations <= params.max_iterations,
          "clustering: convergence_iterations must be in [1, max_iterations]");
}

// Index-level output of affinity propagation.
struct ApResult {
  std::vector<int> exemplars;   // ascending point indices
  std::vector<int> assignment;  // point -> index into exemplars
  bool converged = false;
  int iterations_run = 0;
};

// Speaker-level clustering over a pool.
struct ClusterAssignment {
  std::vector<std::string> exemplar_ids;
  std::map<std::string, int> membership;  // speaker_id -> exemplar index
  bool converged = false;
  int iterations_run = 0;

  std::size_t cluster_count() const { return exemplar_ids.size(); }
};

// s(i, j) = -distance(i, j) for i != j; the diagonal is left at zero for
// preference injection. Exactly symmetric by construction.
inline Eigen::MatrixXd similarity_matrix(const SpeakerPool& pool,
                                         const DistanceMetric& metric) {
  require(!pool.empty(), "similarity_matrix: empty pool");
  const int n = static_cast<int>(pool.size());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t row) {
    const int i = static_cast<int>(row);
    for (int j = i + 1; j < n; ++j) {
      s(i, j) = -distance(metric, pool.entries[i].embedding,
                          pool.entries[j].embedding);
    }
  });
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s(j, i) = s(i, j);
  return s;
}

namespace internal {

inline double median_off_diagonal(const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.rows());
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * (n - 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) values.push_back(s(i, j));
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  std::size_t m = values.size();
  return m % 2 == 1 ? values[m / 2]
                    : 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace internal

// Damped message passing. Updates follow the classic responsibility /
// availability recurrences with new = damping * old + (1 - damping) * fresh;
// exemplars are the points with r(k,k) + a(k,k) > 0. Ties break toward the
// lowest index, and a seeded symmetric jitter of magnitude <= 1e-12 breaks
// exact similarity ties so duplicated points cannot make the exemplar set
// oscillate. Output is a pure function of (similarities, params, seed).
inline ApResult affinity_propagation(const Eigen::MatrixXd& similarities,
                                     const ClusteringParams& params,
                                     std::uint64_t seed) {
  validate(params);
  const int n = static_cast<int>(similarities.rows());
  require(n >= 1 && similarities.cols() == n,
          "affinity_propagation: similarity matrix must be square");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      require(std::abs(similarities(i, j) - similarities(j, i)) <=
                  1e-9 * std::max(1.0, std::abs(similarities(i, j))),
              "affinity_propagation: similarity matrix is not symmetric at (",
              i, ",", j, ")");
    }
  }

  if (n == 1) {
    ApResult r;
    r.exemplars = {0};
    r.assignment = {0};
    r.converged = true;
    r.iterations_run = 0;
    return r;
  }

  double preference =
      params.preference_mode == ClusteringParams::PreferenceMode::kFixed
          ? params.preference_value
          : internal::median_off_diagonal(similarities);

  Eigen::MatrixXd s = similarities;
  for (int i = 0; i < n; ++i) s(i, i) = preference;
  Rng jitter_rng(mix64(seed ^ 0x6a69747465720a01ULL));
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double eps = (2.0 * jitter_rng.uniform() - 1.0) * 1e-12;
      s(i, j) += eps;
      if (j != i) s(j, i) = s(i, j);
    }
  }

  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd avail = Eigen::MatrixXd::Zero(n, n);
  const double lambda = params.damping;

  std::vector<int> exemplars;
  std::vector<int> previous_exemplars;
  int stable = 0;
  bool converged = false;
  int iterations = 0;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    iterations = iter + 1;

    // Responsibilities: r(i,k) = s(i,k) - max_{k' != k} (a(i,k') + s(i,k')).
    for (int i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      double second = best;
      int best_k = -1;
      for (int k = 0; k < n; ++k) {
        double v = avail(i, k) + s(i, k);
        if (v > best) {
          second = best;
          best = v;
          best_k = k;
        } else if (v > second) {
          second = v;
        }
      }
      for (int k = 0; k < n; ++k) {
        double fresh = s(i, k) - (k == best_k ? second : best);
        resp(i, k) = lambda * resp(i, k) + (1.0 - lambda) * fresh;
      }
    }

    // Availabilities: a(i,k) = min(0, r(k,k) + sum_{i' != i,k} max(0, r(i',k)));
    // a(k,k) = sum_{i' != k} max(0, r(i',k)).
    for (int k = 0; k < n; ++k) {
      double sum_pos = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i != k) sum_pos += std::max(0.0, resp(i, k));
      }
      for (int i = 0; i < n; ++i) {
        double fresh;
        if (i == k) {
          fresh = sum_pos;
        } else {
          fresh = std::min(0.0, resp(k, k) + sum_pos -
                                    std::max(0.0, resp(i, k)));
        }
        avail(i, k) = lambda * avail(i, k) + (1.0 - lambda) * fresh;
      }
    }

    exemplars.clear();
    for (int k = 0; k < n; ++k) {
      if (resp(k, k) + avail(k, k) > 0.0) exemplars.push_back(k);
    }
    if (!exemplars.empty() && exemplars == previous_exemplars) {
      ++stable;
    } else {
      stable = exemplars.empty() ? 0 : 1;
    }
    previous_exemplars = exemplars;
    if (stable >= params.convergence_iterations) {
      converged = true;
      break;
    }
  }

  ApResult result;
  result.converged = converged;
  result.iterations_run = iterations;
  if (exemplars.empty()) {
    // No exemplar emerged; fall back to one cluster around the point with
    // the largest (jittered) preference.
    int best = 0;
    for (int i = 1; i < n; ++i) {
      if (s(i, i) > s(best, best)) best = i;
    }
    warn("affinity propagation found no exemplar after ",
         params.max_iterations, " iterations; falling back to one cluster");
    result.exemplars = {best};
    result.assignment.assign(n, 0);
    result.converged = false;
    return result;
  }

  result.exemplars = exemplars;
  result.assignment.resize(n);
  for (int i = 0; i < n; ++i) {
    int chosen = 0;
    bool self = false;
    for (std::size_t e = 0; e < exemplars.size(); ++e) {
      if (exemplars[e] == i) {
        chosen = static_cast<int>(e);
        self = true;
        break;
      }
    }
    if (!self) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < exemplars.size(); ++e) {
        double v = s(i, exemplars[e]);
        if (v > best) {
          best = v;
          chosen = static_cast<int>(e);
        }
      }
    }
    result.assignment[i] = chosen;
  }
  return result;
}

// Clusters a speaker pool. For the plda metric the pool embeddings are first
// put through the model's recorded conditioning (centered on the pool's own
// mean) so distances are measured in the space the model was trained in.
inline ClusterAssignment cluster_pool(const SpeakerPool& pool,
                                      const DistanceMetric& metric,
                                      const ClusteringParams& params,
                                      std::uint64_t seed) {
  require(!pool.empty(), "cluster_pool: empty pool");
  SpeakerPool view = pool;
  if (metric.kind() == DistanceMetric::Kind::kPlda &&
      (metric.model().center() || metric.model().length_normalize())) {
    std::vector<Embedding> embs;
    embs.reserve(pool.size());
    for (const PoolEntry& e : pool.entries) embs.push_back(e.embedding);
    std::vector<Embedding> cond = condition_embeddings(metric.model(), embs);
    for (std::size_t i = 0; i < pool.size(); ++i) {
      view.entries[i].embedding = cond[i];
    }
  }
  Eigen::MatrixXd s = similarity_matrix(view, metric);
  ApResult ap = affinity_propagation(s, params, seed);

  ClusterAssignment assignment;
  assignment.converged = ap.converged;
  assignment.iterations_run = ap.iterations_run;
  for (int e : ap.exemplars) {
    assignment.exemplar_ids.push_back(pool.entries[e].speaker_id);
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    assignment.membership[pool.entries[i].speaker_id] = ap.assignment[i];
  }
  return assignment;
}

// (exemplar index, member count), sorted by descending count; ties break
// toward the lower exemplar index. Counts sum to the pool size.
inline std::vector<std::pair<int, int>> rank_clusters_by_size(
    const ClusterAssignment& assignment) {
  std::vector<std::pair<int, int>> sizes;
  sizes.reserve(assignment.exemplar_ids.size());
  for (std::size_t e = 0; e < assignment.exemplar_ids.size(); ++e) {
    sizes.emplace_back(static_cast<int>(e), 0);
  }
  for (const auto& [speaker, exemplar] : assignment.membership) {
    require(exemplar >= 0 &&
                exemplar < static_cast<int>(assignment.exemplar_ids.size()),
            "rank_clusters_by_size: membership index out of range");
    ++sizes[exemplar].second;
  }
  std::sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return sizes;
}

// Majority gender of a cluster's members; a tie goes to the exemplar's own
// gender.
inline Gender cluster_gender(const ClusterAssignment& assignment,
                             int exemplar_index, const SpeakerPool& pool) {
  int male = 0, female = 0;
  for (const auto& [speaker, exemplar] : assignment.membership) {
    if (exemplar != exemplar_index) continue;
    int idx = pool.index_of(speaker);
    require(idx >= 0, "cluster_gender: speaker '", speaker,
            "' is not in the pool");
    (pool.entries[idx].gender == Gender::kMale ? male : female) += 1;
  }
  require(male + female > 0, "cluster_gender: cluster ", exemplar_index,
          " has no members");
  if (male != female) return male > female ? Gender::kMale : Gender::kFemale;
  int ex = pool.index_of(assignment.exemplar_ids[exemplar_index]);
  require(ex >= 0, "cluster_gender: exemplar not found in pool");
  return pool.entries[ex].gender;
}

// Cache file: '#clusters n=<count> converged=<0|1>' then one
// '<speaker_id> <exemplar_speaker_id>' line per member. Members are grouped
// by cluster with the exemplar's own line first, so reloading reproduces the
// exemplar order (and therefore exemplar indices) exactly.
inline void save_clusters(const ClusterAssignment& assignment,
                          const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open '", path, "' for writing");
  out << "#clusters n=" << assignment.exemplar_ids.size()
      << " converged=" << (assignment.converged ? 1 : 0) << '\n';
  for (std::size_t e = 0; e < assignment.exemplar_ids.size(); ++e) {
    const std::string& exemplar = assignment.exemplar_ids[e];
    out << exemplar << ' ' << exemplar << '\n';
    for (const auto& [speaker, idx] : assignment.membership) {
      if (idx == static_cast<int>(e) && speaker != exemplar) {
        out << speaker << ' ' << exemplar << '\n';
      }
    }
  }
  out.flush();
  require(out.good(), "I/O error while writing '", path, "'");
}

inline ClusterAssignment load_clusters(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '", path, "' for reading");
  ClusterAssignment assignment;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  bool header_seen = false;
  std::map<std::string, int> exemplar_index;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      int n = 0, converged = 0;
      if (std::sscanf(line.c_str(), "#clusters n=%d converged=%d", &n,
                      &converged) == 2) {
        expected = static_cast<std::size_t>(n);
        assignment.converged = converged == 1;
        header_seen = true;
      }
      continue;
    }
    std::vector<std::string> fields = internal::split_fields(line);
    require(fields.size() == 2, "cluster file '", path, "' line ", line_no,
            ": expected '<speaker> <exemplar>'");
    const std::string& speaker = fields[0];
    const std::string& exemplar = fields[1];
    auto [it, inserted] =
        exemplar_index.emplace(exemplar, assignment.exemplar_ids.size());
    if (inserted) {
      require(speaker == exemplar, "cluster file '", path, "' line ", line_no,
              ": first line of cluster '", exemplar,
              "' must be its own membership");
      assignment.exemplar_ids.push_back(exemplar);
    }
    require(assignment.membership.emplace(speaker, it->second).second,
            "cluster file '", path, "' line ", line_no,
            ": duplicate speaker '", speaker, "'");
  }
  require(header_seen, "cluster file '", path, "': missing #clusters header");
  require(!assignment.exemplar_ids.empty(), "cluster file '", path,
          "': no clusters");
  require(expected == assignment.exemplar_ids.size(), "cluster file '", path,
          "': header claims ", expected, " clusters, found ",
          assignment.exemplar_ids.size());
  return assignment;
}

}  // namespace xva

#endif  // XVA_CLUSTERING_HPP_
