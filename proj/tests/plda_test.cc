// tests/plda_test.cc
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

#include "xva/plda.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.hpp"
#include "xva/rng.hpp"
#include "xva/synthgen.hpp"

namespace {

std::string temp_path(const std::string& name) {
  return testing::TempDir() + "/" + name;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

xva::PldaModel random_model(xva::Rng& rng, int d, double sigma_floor = 0.01) {
  int q = 1 + static_cast<int>(rng.below(d));
  int r = 1 + static_cast<int>(rng.below(d));
  xva::Embedding mean(d);
  Eigen::MatrixXd v(d, q), dd(d, r);
  for (int i = 0; i < d; ++i) {
    mean[i] = rng.gaussian();
    for (int j = 0; j < q; ++j) v(i, j) = rng.gaussian();
    for (int j = 0; j < r; ++j) dd(i, j) = rng.gaussian();
  }
  return xva::PldaModel::from_parameters(mean, v, dd, sigma_floor, false,
                                         false);
}

struct LabeledData {
  std::vector<xva::Embedding> embeddings;
  std::vector<std::string> labels;
};

LabeledData flatten(const xva::Dataset& ds) {
  LabeledData out;
  for (const xva::UtteranceRecord& rec : ds.records) {
    out.embeddings.push_back(rec.embedding);
    out.labels.push_back(rec.speaker_id);
  }
  return out;
}

TEST(Preprocess, CenterRemovesMean) {
  std::vector<xva::Embedding> in(2, xva::Embedding(2));
  in[0] << 1, 1;
  in[1] << 3, 3;
  xva::TrainingOptions opt;
  opt.center = true;
  opt.length_normalize = false;
  auto out = xva::preprocess(in, opt);
  EXPECT_DOUBLE_EQ(out[0][0], -1.0);
  EXPECT_DOUBLE_EQ(out[0][1], -1.0);
  EXPECT_DOUBLE_EQ(out[1][0], 1.0);
  EXPECT_DOUBLE_EQ(out[1][1], 1.0);
}

TEST(Preprocess, LengthNormalize) {
  std::vector<xva::Embedding> in(1, xva::Embedding(2));
  in[0] << 3, 4;
  xva::TrainingOptions opt;
  opt.center = false;
  opt.length_normalize = true;
  auto out = xva::preprocess(in, opt);
  EXPECT_DOUBLE_EQ(out[0][0], 0.6);
  EXPECT_DOUBLE_EQ(out[0][1], 0.8);
}

TEST(Preprocess, BothOffIsIdentity) {
  std::vector<xva::Embedding> in(2, xva::Embedding(2));
  in[0] << 1, 2;
  in[1] << -5, 0.25;
  xva::TrainingOptions opt;
  opt.center = false;
  opt.length_normalize = false;
  auto out = xva::preprocess(in, opt);
  EXPECT_EQ(out[0], in[0]);
  EXPECT_EQ(out[1], in[1]);
}

TEST(Preprocess, DimensionMismatchReportedWithIndex) {
  std::vector<xva::Embedding> in;
  in.push_back(xva::Embedding::Zero(3));
  in.push_back(xva::Embedding::Zero(4));
  try {
    xva::preprocess(in, xva::TrainingOptions{});
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(Preprocess, ZeroVectorReportedWithIndex) {
  std::vector<xva::Embedding> in(3, xva::Embedding(2));
  in[0] << 1, 0;
  in[1] << 0, 0;
  in[2] << 0, 1;
  xva::TrainingOptions opt;
  opt.center = false;
  opt.length_normalize = true;
  try {
    xva::preprocess(in, opt);
    FAIL() << "expected an error";
  } catch (const xva::Error& e) {
    EXPECT_NE(std::string(e.what()).find("index 1"), std::string::npos);
  }
}

TEST(PldaLlr, SymmetryIsExact) {
  xva::Rng rng(101);
  for (int t = 0; t < 100; ++t) {
    int d = 2 + static_cast<int>(rng.below(7));
    xva::PldaModel model = random_model(rng, d);
    xva::Embedding u(d), v(d);
    for (int i = 0; i < d; ++i) {
      u[i] = rng.gaussian();
      v[i] = rng.gaussian();
    }
    EXPECT_EQ(xva::plda_llr(model, u, v), xva::plda_llr(model, v, u));
  }
}

TEST(PldaLlr, ZeroSpeakerLoadingGivesZeroScore) {
  xva::Rng rng(5);
  int d = 4;
  xva::Embedding mean(d);
  for (int i = 0; i < d; ++i) mean[i] = rng.gaussian();
  Eigen::MatrixXd v0 = Eigen::MatrixXd::Zero(d, 2);
  Eigen::MatrixXd d0(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) d0(i, j) = rng.gaussian();
  xva::PldaModel model =
      xva::PldaModel::from_parameters(mean, v0, d0, 1e-6, false, false);
  for (int t = 0; t < 50; ++t) {
    xva::Embedding u(d), v(d);
    for (int i = 0; i < d; ++i) {
      u[i] = rng.gaussian();
      v[i] = rng.gaussian();
    }
    EXPECT_NEAR(xva::plda_llr(model, u, v), 0.0, 1e-9);
  }
}

TEST(PldaLlr, MatchesJointGaussianOracle) {
  xva::Rng rng(77);
  double max_err = 0.0;
  for (int t = 0; t < 100; ++t) {
    int d = 2 + static_cast<int>(rng.below(7));
    xva::PldaModel model = random_model(rng, d);
    xva::Embedding u(d), v(d);
    for (int i = 0; i < d; ++i) {
      u[i] = model.mean()[i] + rng.gaussian();
      v[i] = model.mean()[i] + rng.gaussian();
    }
    double expected = xva_test::joint_gaussian_llr(
        model.mean(), model.between_covariance(), model.within_covariance(),
        u, v);
    double got = xva::plda_llr(model, u, v);
    max_err = std::max(max_err, std::abs(expected - got));
  }
  EXPECT_LT(max_err, 1e-6);
}

TEST(PldaLlr, DimensionMismatchRejected) {
  xva::Rng rng(9);
  xva::PldaModel model = random_model(rng, 4);
  xva::Embedding u(4), v(3);
  u.setZero();
  v.setZero();
  EXPECT_THROW(xva::plda_llr(model, u, v), xva::Error);
}

TEST(PldaDistance, IsNegatedLlr) {
  xva::Rng rng(55);
  xva::PldaModel model = random_model(rng, 5);
  for (int t = 0; t < 100; ++t) {
    xva::Embedding u(5), v(5);
    for (int i = 0; i < 5; ++i) {
      u[i] = rng.gaussian();
      v[i] = rng.gaussian();
    }
    EXPECT_DOUBLE_EQ(xva::plda_distance(model, u, v),
                     -xva::plda_llr(model, u, v));
  }
}

TEST(PldaDistance, SelfCloserThanFarOffsetUnderDominantBetween) {
  // Strong speaker variability, small within noise: a speaker is closer to
  // itself than to a far-away point.
  int d = 4;
  xva::Embedding mean = xva::Embedding::Zero(d);
  Eigen::MatrixXd v0 = 3.0 * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd d0 = 0.1 * Eigen::MatrixXd::Identity(d, d);
  xva::PldaModel model =
      xva::PldaModel::from_parameters(mean, v0, d0, 1e-6, false, false);
  xva::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    xva::Embedding u(d);
    for (int i = 0; i < d; ++i) u[i] = 3.0 * rng.gaussian();
    xva::Embedding far = mean + xva::Embedding::Constant(d, 10.0);
    EXPECT_LT(xva::plda_distance(model, u, u), xva::plda_distance(model, u, far));
  }
}

TEST(TrainPlda, RecoversMeanAndIsMonotone) {
  // Known low-rank model: d=8, q=2, r=8, 200 speakers x 10 utterances.
  xva::Rng rng(13);
  xva::PopulationSpec spec;
  spec.dim = 8;
  spec.n_speakers = 200;
  spec.utterances_per_speaker = 10;
  spec.seed = 71;
  spec.within_scale = 0.0;
  xva::Embedding m0(8);
  Eigen::MatrixXd v0(8, 2), d0(8, 8);
  for (int i = 0; i < 8; ++i) {
    m0[i] = rng.gaussian();
    for (int j = 0; j < 2; ++j) v0(i, j) = rng.gaussian();
    for (int j = 0; j < 8; ++j) d0(i, j) = 0.15 * rng.gaussian();
  }
  xva::Dataset ds = xva::generate_population(spec, m0, v0, d0);
  LabeledData data = flatten(ds);

  xva::Embedding sample_mean = xva::Embedding::Zero(8);
  for (const xva::Embedding& e : data.embeddings) sample_mean += e;
  sample_mean /= static_cast<double>(data.embeddings.size());

  xva::TrainingOptions opt;
  opt.rank_q = 2;
  opt.rank_r = 8;
  opt.max_iterations = 25;
  opt.center = false;
  opt.length_normalize = false;
  xva::TrainingStats stats;
  xva::PldaModel model = xva::train_plda(data.embeddings, data.labels, opt,
                                         &stats);

  EXPECT_LT((model.mean() - sample_mean).norm(), 0.05);
  for (std::size_t i = 1; i < stats.log_likelihoods.size(); ++i) {
    EXPECT_GE(stats.log_likelihoods[i], stats.log_likelihoods[i - 1] - 1e-8);
  }
  // The fitted covariances should resemble the generating ones.
  Eigen::MatrixXd true_between = v0 * v0.transpose();
  EXPECT_LT((model.between_covariance() - true_between).norm() /
                true_between.norm(),
            0.25);
}

TEST(TrainPlda, ZeroWithinScatterCollapsesToFloor) {
  // Every speaker's utterances identical: the within covariance must shrink
  // to the isotropic floor.
  xva::Rng rng(5);
  const int d = 8;
  std::vector<xva::Embedding> embeddings;
  std::vector<std::string> labels;
  for (int s = 0; s < 20; ++s) {
    xva::Embedding mean(d);
    double a = rng.gaussian(), b = rng.gaussian();
    for (int i = 0; i < d; ++i) {
      mean[i] = a * (i < 4 ? 1.0 : 0.3) + b * (i % 2 ? 0.5 : -0.2);
    }
    for (int u = 0; u < 5; ++u) {
      embeddings.push_back(mean);
      labels.push_back("s" + std::to_string(s));
    }
  }
  xva::TrainingOptions opt;
  opt.rank_q = 4;
  opt.rank_r = 8;
  opt.max_iterations = 50;
  opt.center = false;
  opt.length_normalize = false;
  opt.log_likelihood_tolerance = 1e-10;
  xva::TrainingStats stats;
  xva::PldaModel model = xva::train_plda(embeddings, labels, opt, &stats);

  // Oracle: the pooled within-speaker scatter of this data is exactly zero.
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  ASSERT_LT(scatter.norm(), 1e-300);
  double trace = model.within_covariance().trace();
  EXPECT_LE(trace, opt.sigma_floor * d * (1.0 + 1e-6));
  for (std::size_t i = 1; i < stats.log_likelihoods.size(); ++i) {
    EXPECT_GE(stats.log_likelihoods[i], stats.log_likelihoods[i - 1] - 1e-8);
  }
}

TEST(TrainPlda, WithinCovarianceStaysPositiveDefinite) {
  xva::PopulationSpec spec;
  spec.dim = 6;
  spec.n_speakers = 30;
  spec.utterances_per_speaker = 4;
  spec.seed = 17;
  spec.within_scale = 0.2;
  xva::Dataset ds = xva::generate_population(spec);
  LabeledData data = flatten(ds);
  xva::TrainingOptions opt;
  opt.max_iterations = 15;
  xva::PldaModel model = xva::train_plda(data.embeddings, data.labels, opt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      model.within_covariance());
  EXPECT_GE(eig.eigenvalues()[0], opt.sigma_floor - 1e-12);
}

TEST(TrainPlda, ConvergenceStopsEarly) {
  xva::PopulationSpec spec;
  spec.dim = 4;
  spec.n_speakers = 20;
  spec.utterances_per_speaker = 4;
  spec.seed = 23;
  xva::Dataset ds = xva::generate_population(spec);
  LabeledData data = flatten(ds);
  xva::TrainingOptions opt;
  opt.max_iterations = 500;
  opt.log_likelihood_tolerance = 1e-3;
  xva::TrainingStats stats;
  xva::train_plda(data.embeddings, data.labels, opt, &stats);
  EXPECT_TRUE(stats.converged);
  EXPECT_LT(stats.iterations, 500);
}

TEST(TrainPlda, InputValidation) {
  std::vector<xva::Embedding> embeddings(4, xva::Embedding::Zero(3));
  embeddings[1][0] = 1.0;
  embeddings[3][1] = 1.0;
  std::vector<std::string> one_speaker{"a", "a", "a", "a"};
  xva::TrainingOptions opt;
  EXPECT_THROW(xva::train_plda(embeddings, one_speaker, opt), xva::Error);

  std::vector<std::string> singletons{"a", "b", "c", "d"};
  EXPECT_THROW(xva::train_plda(embeddings, singletons, opt), xva::Error);

  std::vector<std::string> ok{"a", "a", "b", "b"};
  xva::TrainingOptions bad_rank;
  bad_rank.rank_q = 7;
  EXPECT_THROW(xva::train_plda(embeddings, ok, bad_rank), xva::Error);

  std::vector<std::string> misaligned{"a", "a", "b"};
  EXPECT_THROW(xva::train_plda(embeddings, misaligned, opt), xva::Error);
}

TEST(TrainPlda, DeterministicModelBytes) {
  xva::PopulationSpec spec;
  spec.dim = 5;
  spec.n_speakers = 15;
  spec.utterances_per_speaker = 4;
  spec.seed = 37;
  xva::Dataset ds = xva::generate_population(spec);
  LabeledData data = flatten(ds);
  xva::TrainingOptions opt;
  opt.max_iterations = 8;
  opt.seed = 12;
  std::string p1 = temp_path("model_run1.plda");
  std::string p2 = temp_path("model_run2.plda");
  xva::save_plda(xva::train_plda(data.embeddings, data.labels, opt), p1);
  xva::save_plda(xva::train_plda(data.embeddings, data.labels, opt), p2);
  EXPECT_EQ(read_file(p1), read_file(p2));
  EXPECT_FALSE(read_file(p1).empty());
}

TEST(ModelFile, RoundTripPreservesScores) {
  xva::Rng rng(71);
  xva::PldaModel model = random_model(rng, 6);
  std::string path = temp_path("model.plda");
  xva::save_plda(model, path);
  xva::PldaModel back = xva::load_plda(path);
  EXPECT_EQ(back.dim(), model.dim());
  EXPECT_EQ(back.rank_q(), model.rank_q());
  EXPECT_EQ(back.rank_r(), model.rank_r());
  EXPECT_EQ(back.center(), model.center());
  EXPECT_EQ(back.length_normalize(), model.length_normalize());
  for (int t = 0; t < 20; ++t) {
    xva::Embedding u(6), v(6);
    for (int i = 0; i < 6; ++i) {
      u[i] = rng.gaussian();
      v[i] = rng.gaussian();
    }
    EXPECT_EQ(xva::plda_llr(back, u, v), xva::plda_llr(model, u, v));
  }
}

TEST(ModelFile, MalformedHeaderRejected) {
  std::string path = temp_path("bad.plda");
  std::ofstream(path) << "#plda d=2 q=1\n1 2\n";
  EXPECT_THROW(xva::load_plda(path), xva::Error);
}

TEST(ModelFile, TruncatedBodyRejected) {
  std::string path = temp_path("trunc.plda");
  std::ofstream(path)
      << "#plda d=2 q=1 r=1 sigma_floor=1e-06 center=0 lennorm=0\n0 0\n1\n";
  EXPECT_THROW(xva::load_plda(path), xva::Error);
}

TEST(FromParameters, SingularWithinRejected) {
  xva::Embedding mean = xva::Embedding::Zero(3);
  Eigen::MatrixXd v0 = Eigen::MatrixXd::Identity(3, 3);
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Zero(3, 1);  // rank deficient
  EXPECT_THROW(
      xva::PldaModel::from_parameters(mean, v0, d0, 0.0, false, false),
      xva::Error);
  // A positive floor fixes it.
  EXPECT_NO_THROW(
      xva::PldaModel::from_parameters(mean, v0, d0, 1e-6, false, false));
}

TEST(ConditionEmbeddings, AppliesRecordedFlags) {
  xva::Embedding mean = xva::Embedding::Zero(2);
  Eigen::MatrixXd v0 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd d0 = Eigen::MatrixXd::Identity(2, 2);
  xva::PldaModel model =
      xva::PldaModel::from_parameters(mean, v0, d0, 1e-6, true, true);
  std::vector<xva::Embedding> in(2, xva::Embedding(2));
  in[0] << 2, 0;
  in[1] << 4, 0;
  auto out = xva::condition_embeddings(model, in);
  // centered to (-1,0), (1,0) then unit-normalized
  EXPECT_DOUBLE_EQ(out[0][0], -1.0);
  EXPECT_DOUBLE_EQ(out[1][0], 1.0);

  xva::Embedding ref = xva::Embedding::Zero(2);
  auto out2 = xva::condition_embeddings(model, in, &ref);
  EXPECT_DOUBLE_EQ(out2[0][0], 1.0);  // no centering shift, normalized
}

}  // namespace
