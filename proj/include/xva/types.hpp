// xva/types.hpp
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

#ifndef XVA_TYPES_HPP_
#define XVA_TYPES_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

#include "xva/error.hpp"

namespace xva {

// One speaker embedding (an x-vector or any fixed-dimension stand-in).
using Embedding = Eigen::VectorXd;

enum class Gender { kMale, kFemale };

inline Gender opposite(Gender g) {
  return g == Gender::kMale ? Gender::kFemale : Gender::kMale;
}

inline char gender_char(Gender g) { return g == Gender::kMale ? 'M' : 'F'; }

inline Gender parse_gender(std::string_view token) {
  if (token == "M") return Gender::kMale;
  if (token == "F") return Gender::kFemale;
  raise("invalid gender token '", std::string(token), "' (expected M or F)");
}

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  Gender gender = Gender::kMale;
  Embedding embedding;
};

// Ordered utterance records sharing one embedding dimension. Invariants
// (unique utterance ids, consistent per-speaker gender, finite values) are
// established by load_dataset and preserved by every producer in the library.
struct Dataset {
  std::vector<UtteranceRecord> records;
  int dim = 0;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

struct PoolEntry {
  std::string speaker_id;
  Gender gender = Gender::kMale;
  Embedding embedding;
};

// Speaker-level pool: one embedding per speaker, the candidate set that
// pseudo-speakers are drawn from.
struct SpeakerPool {
  std::vector<PoolEntry> entries;
  int dim = 0;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }

  // Index of a speaker, or -1.
  int index_of(std::string_view speaker_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].speaker_id == speaker_id) return static_cast<int>(i);
    }
    return -1;
  }
};

}  // namespace xva

#endif  // XVA_TYPES_HPP_
