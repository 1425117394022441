// xva/dataset.hpp
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
// Line-oriented x-vector text format:
//   # optional comment lines
//   <utterance_id> <speaker_id> <M|F> <v1> <v2> ... <vd>
// Values are written with 17 significant digits so a save/load round trip
// reproduces every 64-bit float bit-exactly. Speaker-pool files use the same
// format with utterance_id == speaker_id.

#ifndef XVA_DATASET_HPP_
#define XVA_DATASET_HPP_

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "xva/types.hpp"

namespace xva {

namespace internal {

// Formats a double with enough digits to round-trip exactly.
inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_value(const std::string& token, std::size_t line_no) {
  const char* begin = token.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + token.size() || token.empty()) {
    raise("parse error at line ", line_no, ": bad numeric value '", token,
          "'");
  }
  if (!std::isfinite(v)) {
    raise("parse error at line ", line_no, ": non-finite value '", token,
          "'");
  }
  return v;
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) fields.push_back(tok);
  return fields;
}

}  // namespace internal

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '", path, "' for reading");

  Dataset ds;
  std::unordered_set<std::string> seen_utts;
  std::unordered_map<std::string, Gender> speaker_gender;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;

    std::vector<std::string> fields = internal::split_fields(line);
    if (fields.empty()) continue;
    if (fields.size() < 4) {
      raise("parse error at line ", line_no,
            ": expected '<utt> <spk> <M|F> <values...>', got ", fields.size(),
            " field(s)");
    }

    UtteranceRecord rec;
    rec.utterance_id = fields[0];
    rec.speaker_id = fields[1];
    try {
      rec.gender = parse_gender(fields[2]);
    } catch (const Error& e) {
      raise("parse error at line ", line_no, ": ", e.what());
    }

    int d = static_cast<int>(fields.size()) - 3;
    if (ds.dim == 0) {
      ds.dim = d;
    } else if (d != ds.dim) {
      raise("dimension mismatch at line ", line_no, ": expected ", ds.dim,
            " values, got ", d);
    }
    rec.embedding.resize(d);
    for (int i = 0; i < d; ++i) {
      rec.embedding[i] = internal::parse_value(fields[3 + i], line_no);
    }

    if (!seen_utts.insert(rec.utterance_id).second) {
      raise("duplicate utterance_id '", rec.utterance_id, "' at line ",
            line_no);
    }
    auto [it, inserted] = speaker_gender.emplace(rec.speaker_id, rec.gender);
    if (!inserted && it->second != rec.gender) {
      raise("inconsistent gender for speaker '", rec.speaker_id, "' at line ",
            line_no);
    }
    ds.records.push_back(std::move(rec));
  }
  require(!ds.records.empty(), "empty dataset: '", path,
          "' has no record lines");
  return ds;
}

inline void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open '", path, "' for writing");
  for (const UtteranceRecord& rec : dataset.records) {
    out << rec.utterance_id << ' ' << rec.speaker_id << ' '
        << gender_char(rec.gender);
    for (int i = 0; i < rec.embedding.size(); ++i) {
      out << ' ' << internal::format_value(rec.embedding[i]);
    }
    out << '\n';
  }
  out.flush();
  require(out.good(), "I/O error while writing '", path, "'");
}

// Aggregates utterances into one entry per speaker (arithmetic mean of that
// speaker's embeddings), in order of first appearance.
inline SpeakerPool build_speaker_pool(const Dataset& dataset) {
  require(!dataset.empty(), "build_speaker_pool: dataset is empty");
  SpeakerPool pool;
  pool.dim = dataset.dim;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::size_t> counts;
  for (const UtteranceRecord& rec : dataset.records) {
    auto [it, inserted] = index.emplace(rec.speaker_id, pool.entries.size());
    if (inserted) {
      pool.entries.push_back(
          {rec.speaker_id, rec.gender, Embedding::Zero(dataset.dim)});
      counts.push_back(0);
    }
    pool.entries[it->second].embedding += rec.embedding;
    ++counts[it->second];
  }
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    pool.entries[i].embedding /= static_cast<double>(counts[i]);
  }
  return pool;
}

// Pool files reuse the record format with utterance_id == speaker_id; a file
// holding several utterances per speaker is aggregated on load.
inline SpeakerPool load_speaker_pool(const std::string& path) {
  return build_speaker_pool(load_dataset(path));
}

inline void save_speaker_pool(const SpeakerPool& pool,
                              const std::string& path) {
  Dataset ds;
  ds.dim = pool.dim;
  for (const PoolEntry& e : pool.entries) {
    ds.records.push_back({e.speaker_id, e.speaker_id, e.gender, e.embedding});
  }
  save_dataset(ds, path);
}

}  // namespace xva

#endif  // XVA_DATASET_HPP_
