// xva/distance.hpp
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

#ifndef XVA_DISTANCE_HPP_
#define XVA_DISTANCE_HPP_

#include <algorithm>
#include <string>

#include "xva/plda.hpp"
#include "xva/types.hpp"

namespace xva {

// 1 - cos(u, v), in [0, 2]. Scale-invariant for positive rescalings of
// either argument. The denominator is formed as sqrt(<u,u> <v,v>) so that
// identical vectors give exactly zero.
inline double cosine_distance(const Embedding& u, const Embedding& v) {
  require(u.size() == v.size(), "cosine_distance: dimension mismatch (",
          u.size(), " vs ", v.size(), ")");
  double uu = u.squaredNorm();
  double vv = v.squaredNorm();
  require(uu != 0.0 && vv != 0.0,
          "cosine_distance: zero-norm embedding has no direction");
  double value = 1.0 - u.dot(v) / std::sqrt(uu * vv);
  return std::clamp(value, 0.0, 2.0);
}

// Uniform handle over the two candidate-selection metrics. The plda variant
// borrows the model; the model must outlive the metric.
class DistanceMetric {
 public:
  enum class Kind { kCosine, kPlda };

  static DistanceMetric cosine() { return DistanceMetric(Kind::kCosine, nullptr); }

  static DistanceMetric plda(const PldaModel& model) {
    return DistanceMetric(Kind::kPlda, &model);
  }

  Kind kind() const { return kind_; }

  const PldaModel& model() const {
    require(kind_ == Kind::kPlda && model_ != nullptr,
            "DistanceMetric: no model attached");
    return *model_;
  }

 private:
  DistanceMetric(Kind kind, const PldaModel* model)
      : kind_(kind), model_(model) {}

  Kind kind_;
  const PldaModel* model_;
};

inline std::string metric_name(DistanceMetric::Kind kind) {
  return kind == DistanceMetric::Kind::kCosine ? "cosine" : "plda";
}

inline double distance(const DistanceMetric& metric, const Embedding& u,
                       const Embedding& v) {
  switch (metric.kind()) {
    case DistanceMetric::Kind::kCosine:
      return cosine_distance(u, v);
    case DistanceMetric::Kind::kPlda:
      return plda_distance(metric.model(), u, v);
  }
  raise("distance: invalid metric kind");
}

}  // namespace xva

#endif  // XVA_DISTANCE_HPP_
