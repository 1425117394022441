// tests/dataset_test.cc
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

#include "xva/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <string>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "xva/rng.hpp"
#include "xva/synthgen.hpp"

namespace {

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

TEST(LoadDataset, SingleRecord) {
  std::string path = temp_path("single.xvec");
  write_file(path, "u1 s1 M 1.0 2.0\n");
  xva::Dataset ds = xva::load_dataset(path);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.dim, 2);
  EXPECT_EQ(ds.records[0].utterance_id, "u1");
  EXPECT_EQ(ds.records[0].speaker_id, "s1");
  EXPECT_EQ(ds.records[0].gender, xva::Gender::kMale);
  EXPECT_DOUBLE_EQ(ds.records[0].embedding[0], 1.0);
  EXPECT_DOUBLE_EQ(ds.records[0].embedding[1], 2.0);
}

TEST(LoadDataset, CommentsAndBlankLinesSkipped) {
  std::string path = temp_path("comments.xvec");
  write_file(path, "# header comment\n\nu1 s1 F 0.5\n# trailing\n");
  xva::Dataset ds = xva::load_dataset(path);
  EXPECT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.records[0].gender, xva::Gender::kFemale);
}

TEST(LoadDataset, EmptyFileIsAnError) {
  std::string path = temp_path("empty.xvec");
  write_file(path, "# only a comment\n");
  try {
    xva::load_dataset(path);
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
}

TEST(LoadDataset, DimensionMismatchNamesLine) {
  std::string path = temp_path("dims.xvec");
  write_file(path, "u1 s1 M 1.0 2.0\nu2 s1 M 1.0 2.0 3.0\n");
  try {
    xva::load_dataset(path);
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("mismatch"), std::string::npos) << msg;
  }
}

TEST(LoadDataset, DuplicateUtteranceId) {
  std::string path = temp_path("dup.xvec");
  write_file(path, "u1 s1 M 1.0\nu1 s2 F 2.0\n");
  EXPECT_THROW(xva::load_dataset(path), xva::Error);
}

TEST(LoadDataset, InconsistentSpeakerGender) {
  std::string path = temp_path("gender.xvec");
  write_file(path, "u1 s1 M 1.0\nu2 s1 F 2.0\n");
  try {
    xva::load_dataset(path);
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    EXPECT_NE(std::string(e.what()).find("s1"), std::string::npos);
  }
}

TEST(LoadDataset, BadGenderToken) {
  std::string path = temp_path("badg.xvec");
  write_file(path, "u1 s1 X 1.0\n");
  EXPECT_THROW(xva::load_dataset(path), xva::Error);
}

TEST(LoadDataset, MalformedValueNamesLine) {
  std::string path = temp_path("badv.xvec");
  write_file(path, "u1 s1 M 1.0\nu2 s1 M abc\n");
  try {
    xva::load_dataset(path);
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadDataset, NonFiniteValueRejected) {
  std::string path = temp_path("inf.xvec");
  write_file(path, "u1 s1 M inf\n");
  EXPECT_THROW(xva::load_dataset(path), xva::Error);
}

TEST(LoadDataset, TooFewFields) {
  std::string path = temp_path("short.xvec");
  write_file(path, "u1 s1 M\n");
  EXPECT_THROW(xva::load_dataset(path), xva::Error);
}

TEST(SaveDataset, RoundTripIsExact) {
  // Values with awkward decimal expansions must survive bit-for-bit.
  xva::PopulationSpec spec;
  spec.dim = 5;
  spec.n_speakers = 7;
  spec.utterances_per_speaker = 3;
  spec.seed = 99;
  xva::Dataset ds = xva::generate_population(spec);
  ds.records[0].embedding[0] = 1.0 / 3.0;
  ds.records[1].embedding[2] = -7.25e-13;
  ds.records[2].embedding[4] = 123456789.123456789;

  std::string path = temp_path("roundtrip.xvec");
  xva::save_dataset(ds, path);
  xva::Dataset back = xva::load_dataset(path);
  ASSERT_EQ(back.size(), ds.size());
  ASSERT_EQ(back.dim, ds.dim);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(back.records[i].utterance_id, ds.records[i].utterance_id);
    EXPECT_EQ(back.records[i].speaker_id, ds.records[i].speaker_id);
    EXPECT_EQ(back.records[i].gender, ds.records[i].gender);
    for (int k = 0; k < ds.dim; ++k) {
      EXPECT_EQ(back.records[i].embedding[k], ds.records[i].embedding[k]);
    }
  }
}

TEST(SaveDataset, UnwritablePathFails) {
  xva::Dataset ds;
  ds.dim = 1;
  ds.records.push_back({"u1", "s1", xva::Gender::kMale,
                        xva::Embedding::Constant(1, 1.0)});
  EXPECT_THROW(xva::save_dataset(ds, "/nonexistent-dir/out.xvec"), xva::Error);
}

TEST(SaveDataset, SingleDimFormatting) {
  xva::Dataset ds;
  ds.dim = 1;
  ds.records.push_back({"u1", "s1", xva::Gender::kFemale,
                        xva::Embedding::Constant(1, 0.5)});
  std::string path = temp_path("one.xvec");
  xva::save_dataset(ds, path);
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_EQ(line, "u1 s1 F 0.5");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(BuildSpeakerPool, MeanOfTwoUtterances) {
  xva::Dataset ds;
  ds.dim = 2;
  xva::Embedding a(2), b(2);
  a << 1.0, 0.0;
  b << 3.0, 0.0;
  ds.records.push_back({"u1", "s1", xva::Gender::kMale, a});
  ds.records.push_back({"u2", "s1", xva::Gender::kMale, b});
  xva::SpeakerPool pool = xva::build_speaker_pool(ds);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_DOUBLE_EQ(pool.entries[0].embedding[0], 2.0);
  EXPECT_DOUBLE_EQ(pool.entries[0].embedding[1], 0.0);
}

TEST(BuildSpeakerPool, SingleUtterancePerSpeakerIsIdentity) {
  xva::PopulationSpec spec;
  spec.dim = 3;
  spec.n_speakers = 6;
  spec.utterances_per_speaker = 1;
  spec.seed = 4;
  xva::Dataset ds = xva::generate_population(spec);
  xva::SpeakerPool pool = xva::build_speaker_pool(ds);
  ASSERT_EQ(pool.size(), 6u);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(pool.entries[i].embedding, ds.records[i].embedding);
  }
}

TEST(BuildSpeakerPool, MatchesBruteForcePerSpeakerMeans) {
  xva::Rng rng(17);
  xva::Dataset ds;
  ds.dim = 4;
  std::map<std::string, std::vector<xva::Embedding>> per_speaker;
  for (int i = 0; i < 100; ++i) {
    std::string speaker = "s" + std::to_string(rng.below(10));
    xva::Embedding e(4);
    for (int k = 0; k < 4; ++k) e[k] = rng.gaussian();
    ds.records.push_back({"u" + std::to_string(i), speaker,
                          xva::Gender::kMale, e});
    per_speaker[speaker].push_back(e);
  }
  xva::SpeakerPool pool = xva::build_speaker_pool(ds);
  ASSERT_EQ(pool.size(), per_speaker.size());
  for (const xva::PoolEntry& entry : pool.entries) {
    xva::Embedding expected = xva_test::kahan_mean(per_speaker[entry.speaker_id]);
    EXPECT_LT((entry.embedding - expected).norm(), 1e-12);
  }
}

TEST(BuildSpeakerPool, MeanIsPermutationInvariant) {
  xva::PopulationSpec spec;
  spec.dim = 3;
  spec.n_speakers = 4;
  spec.utterances_per_speaker = 5;
  spec.seed = 21;
  xva::Dataset ds = xva::generate_population(spec);
  xva::SpeakerPool pool = xva::build_speaker_pool(ds);

  xva::Dataset shuffled = ds;
  xva::Rng rng(8);
  for (std::size_t i = shuffled.records.size(); i > 1; --i) {
    std::swap(shuffled.records[i - 1], shuffled.records[rng.below(i)]);
  }
  xva::SpeakerPool pool2 = xva::build_speaker_pool(shuffled);
  ASSERT_EQ(pool2.size(), pool.size());
  for (const xva::PoolEntry& entry : pool.entries) {
    int idx = pool2.index_of(entry.speaker_id);
    ASSERT_GE(idx, 0);
    EXPECT_LT((pool2.entries[idx].embedding - entry.embedding).norm(), 1e-12);
  }
}

TEST(SpeakerPoolFiles, RoundTrip) {
  xva::PopulationSpec spec;
  spec.dim = 3;
  spec.n_speakers = 5;
  spec.utterances_per_speaker = 2;
  spec.seed = 31;
  xva::SpeakerPool pool = xva::build_speaker_pool(xva::generate_population(spec));
  std::string path = temp_path("pool.xvec");
  xva::save_speaker_pool(pool, path);
  xva::SpeakerPool back = xva::load_speaker_pool(path);
  ASSERT_EQ(back.size(), pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    EXPECT_EQ(back.entries[i].speaker_id, pool.entries[i].speaker_id);
    EXPECT_EQ(back.entries[i].gender, pool.entries[i].gender);
    EXPECT_EQ(back.entries[i].embedding, pool.entries[i].embedding);
  }
}

}  // namespace
