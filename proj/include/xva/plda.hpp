// xva/plda.hpp
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

#ifndef XVA_PLDA_HPP_
#define XVA_PLDA_HPP_

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xva/dataset.hpp"
#include "xva/rng.hpp"
#include "xva/types.hpp"

namespace xva {

struct TrainingOptions {
  int rank_q = 0;  // speaker-factor rank; 0 means min(d, 100)
  int rank_r = 0;  // channel-factor rank; 0 means d
  int max_iterations = 20;
  double log_likelihood_tolerance = 1e-6;
  bool center = true;
  bool length_normalize = true;
  std::uint64_t seed = 0;
  double sigma_floor = 1e-6;  // isotropic noise floor added to the
                              // within-speaker covariance
};

// Gaussian factor model for embeddings:
//
//   x = m + V y + D z + eps
//
// with y a per-speaker latent (q dims), z a per-utterance latent (r dims),
// both standard normal, and eps isotropic with variance sigma_floor. The
// between-speaker covariance is V V^T and the within-speaker covariance is
// D D^T + sigma_floor I.
//
// Verification scoring is the log-likelihood ratio of the same-speaker
// hypothesis (shared y) against the different-speaker hypothesis
// (independent y):
//
//   llr(u, v) = log N([u;v]; [m;m], [[St, Sb], [Sb, St]])
//             - log N([u;v]; [m;m], [[St, 0], [0, St]])
//
// where Sb = V V^T and St = Sb + Sw. The joint same-speaker covariance
// block-diagonalizes in sum/difference coordinates (St + Sb acting on u+v-2m,
// Sw on u-v), which is the form evaluated here: three Cholesky solves per
// pair, and symmetry in (u, v) is exact because both coordinates are
// sign-insensitive.
class PldaModel {
 public:
  PldaModel() = default;

  static PldaModel from_parameters(const Embedding& mean,
                                   const Eigen::MatrixXd& speaker_loading,
                                   const Eigen::MatrixXd& channel_loading,
                                   double sigma_floor, bool center,
                                   bool length_normalize) {
    require(speaker_loading.rows() == mean.size(),
            "PldaModel: V row count must equal dim");
    require(channel_loading.rows() == mean.size(),
            "PldaModel: D row count must equal dim");
    require(sigma_floor >= 0.0, "PldaModel: sigma_floor must be nonnegative");
    PldaModel model;
    model.mean_ = mean;
    model.speaker_loading_ = speaker_loading;
    model.channel_loading_ = channel_loading;
    model.sigma_floor_ = sigma_floor;
    model.center_ = center;
    model.length_normalize_ = length_normalize;
    model.finalize();
    return model;
  }

  int dim() const { return static_cast<int>(mean_.size()); }
  int rank_q() const { return static_cast<int>(speaker_loading_.cols()); }
  int rank_r() const { return static_cast<int>(channel_loading_.cols()); }
  const Embedding& mean() const { return mean_; }
  const Eigen::MatrixXd& speaker_loading() const { return speaker_loading_; }
  const Eigen::MatrixXd& channel_loading() const { return channel_loading_; }
  double sigma_floor() const { return sigma_floor_; }
  bool center() const { return center_; }
  bool length_normalize() const { return length_normalize_; }

  Eigen::MatrixXd between_covariance() const {
    return speaker_loading_ * speaker_loading_.transpose();
  }

  Eigen::MatrixXd within_covariance() const {
    Eigen::MatrixXd w = channel_loading_ * channel_loading_.transpose();
    w.diagonal().array() += sigma_floor_;
    return w;
  }

  double log_likelihood_ratio(const Embedding& u, const Embedding& v) const {
    require(u.size() == mean_.size() && v.size() == mean_.size(),
            "plda_llr: embedding dimension ", u.size(), "/", v.size(),
            " does not match model dim ", mean_.size());
    Embedding e = u - mean_;
    Embedding f = v - mean_;
    Embedding sum = e + f;
    Embedding diff = e - f;
    double q_sum = chol_sum_.matrixL().solve(sum).squaredNorm();
    double q_diff = chol_within_.matrixL().solve(diff).squaredNorm();
    // q_e + q_f is evaluated as one term so llr(u, v) == llr(v, u) exactly
    // (every other term is already invariant under the swap).
    double q_marginal = chol_total_.matrixL().solve(e).squaredNorm() +
                        chol_total_.matrixL().solve(f).squaredNorm();
    return -0.5 * (logdet_sum_ + logdet_within_) + logdet_total_ -
           0.25 * q_sum - 0.25 * q_diff + 0.5 * q_marginal;
  }

 private:
  friend PldaModel train_plda(std::span<const Embedding>,
                              std::span<const std::string>,
                              const TrainingOptions&, struct TrainingStats*);
  friend PldaModel load_plda(const std::string&);

  // Precomputes the Cholesky factors used by scoring; rejects models whose
  // within covariance is not positive definite.
  void finalize() {
    Eigen::MatrixXd between = between_covariance();
    Eigen::MatrixXd within = within_covariance();
    Eigen::MatrixXd total = between + within;
    Eigen::MatrixXd sum2 = within + 2.0 * between;
    chol_within_.compute(within);
    require(chol_within_.info() == Eigen::Success,
            "PldaModel: within covariance is not positive definite "
            "(set sigma_floor > 0 or use a full-rank channel loading)");
    chol_total_.compute(total);
    require(chol_total_.info() == Eigen::Success,
            "PldaModel: total covariance is not positive definite");
    chol_sum_.compute(sum2);
    require(chol_sum_.info() == Eigen::Success,
            "PldaModel: same-speaker covariance is not positive definite");
    logdet_within_ = log_det(chol_within_);
    logdet_total_ = log_det(chol_total_);
    logdet_sum_ = log_det(chol_sum_);
  }

  static double log_det(const Eigen::LLT<Eigen::MatrixXd>& chol) {
    return 2.0 * Eigen::MatrixXd(chol.matrixL())
                     .diagonal()
                     .array()
                     .log()
                     .sum();
  }

  Embedding mean_;
  Eigen::MatrixXd speaker_loading_;  // d x q
  Eigen::MatrixXd channel_loading_;  // d x r
  double sigma_floor_ = 1e-6;
  bool center_ = true;
  bool length_normalize_ = true;

  Eigen::LLT<Eigen::MatrixXd> chol_within_, chol_total_, chol_sum_;
  double logdet_within_ = 0.0, logdet_total_ = 0.0, logdet_sum_ = 0.0;
};

// Conditioning applied to embeddings before training and scoring: optional
// mean removal followed by optional scaling to unit Euclidean norm. Order is
// preserved.
inline std::vector<Embedding> preprocess(std::span<const Embedding> embeddings,
                                         const TrainingOptions& options) {
  require(!embeddings.empty(), "preprocess: empty embedding list");
  const auto d = embeddings.front().size();
  for (std::size_t i = 1; i < embeddings.size(); ++i) {
    require(embeddings[i].size() == d,
            "preprocess: dimension mismatch at index ", i);
  }
  std::vector<Embedding> out(embeddings.begin(), embeddings.end());
  if (options.center) {
    Embedding mean = Embedding::Zero(d);
    for (const Embedding& e : out) mean += e;
    mean /= static_cast<double>(out.size());
    for (Embedding& e : out) e -= mean;
  }
  if (options.length_normalize) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      double norm = out[i].norm();
      require(norm != 0.0,
              "preprocess: zero vector at index ", i,
              " cannot be length-normalized");
      out[i] /= norm;
    }
  }
  return out;
}

// Per-iteration training log-likelihoods (one entry per completed E-step).
struct TrainingStats {
  std::vector<double> log_likelihoods;
  int iterations = 0;
  bool converged = false;
};

// Maximum-likelihood EM for the factor model. The E-step integrates the
// speaker offset V y per speaker and the recording offsets D z + eps per
// utterance; the M-step refits their covariances Sb = V V^T and
// Sw = D D^T + sigma_floor I directly, which converges much faster than
// refitting the loadings (on data with no within-speaker scatter, Sw
// contracts by the mean utterance count every iteration instead of creeping
// along a V/D ridge). One spectral factorization at the end maps the fitted
// covariances back to loadings of the requested ranks. The mean is fixed at
// the (preprocessed) sample mean and the noise floor is not re-estimated, so
// the marginal likelihood is non-decreasing across iterations.
inline PldaModel train_plda(std::span<const Embedding> embeddings,
                            std::span<const std::string> speaker_labels,
                            const TrainingOptions& options,
                            TrainingStats* stats = nullptr) {
  require(embeddings.size() == speaker_labels.size(),
          "train_plda: ", embeddings.size(), " embeddings but ",
          speaker_labels.size(), " labels");
  require(!embeddings.empty(), "train_plda: no training data");
  require(options.max_iterations >= 1,
          "train_plda: max_iterations must be >= 1");
  require(options.log_likelihood_tolerance > 0.0,
          "train_plda: log_likelihood_tolerance must be positive");
  require(options.sigma_floor > 0.0,
          "train_plda: sigma_floor must be positive");

  const int d = static_cast<int>(embeddings.front().size());
  const int q = options.rank_q > 0 ? options.rank_q : std::min(d, 100);
  const int r = options.rank_r > 0 ? options.rank_r : d;
  require(q >= 1 && q <= d, "train_plda: rank_q (", q,
          ") must be in [1, dim=", d, "]");
  require(r >= 1 && r <= d, "train_plda: rank_r (", r,
          ") must be in [1, dim=", d, "]");

  std::vector<Embedding> data = preprocess(embeddings, options);

  // Group utterances per speaker in order of first appearance.
  std::map<std::string, int> speaker_index;
  std::vector<std::vector<int>> groups;
  for (std::size_t i = 0; i < speaker_labels.size(); ++i) {
    auto [it, inserted] = speaker_index.emplace(
        speaker_labels[i], static_cast<int>(groups.size()));
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(static_cast<int>(i));
  }
  require(groups.size() >= 2, "train_plda: need at least 2 distinct speakers");
  bool any_multi = false;
  for (const auto& g : groups) any_multi = any_multi || g.size() >= 2;
  require(any_multi,
          "train_plda: need at least one speaker with >= 2 utterances");

  Embedding mean = Embedding::Zero(d);
  for (const Embedding& e : data) mean += e;
  mean /= static_cast<double>(data.size());
  for (Embedding& e : data) e -= mean;  // residuals about the model center

  // Per-speaker means and the pooled within-speaker scatter are the only
  // data statistics EM needs.
  const std::size_t n_utts = data.size();
  const std::size_t n_speakers = groups.size();
  std::vector<Embedding> speaker_means(n_speakers);
  std::vector<double> group_sizes(n_speakers);
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t g = 0; g < n_speakers; ++g) {
    Embedding c = Embedding::Zero(d);
    for (int idx : groups[g]) c += data[idx];
    c /= static_cast<double>(groups[g].size());
    for (int idx : groups[g]) {
      Embedding dev = data[idx] - c;
      scatter += dev * dev.transpose();
    }
    speaker_means[g] = std::move(c);
    group_sizes[g] = static_cast<double>(groups[g].size());
  }

  // Seeded init keeps training reproducible bit-for-bit.
  Rng rng(mix64(options.seed ^ 0x70616c6461696e69ULL));
  Eigen::MatrixXd V0(d, q), D0(d, r);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < q; ++j) V0(i, j) = 0.1 * rng.gaussian();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < r; ++j) D0(i, j) = 0.1 * rng.gaussian();

  const double sigma = options.sigma_floor;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  // A small isotropic ridge (matching the 0.1-scale loading init) keeps the
  // starting covariances full rank; EM in covariance coordinates cannot grow
  // the between range beyond its initial span, and the requested ranks are
  // enforced by the final factorization instead.
  Eigen::MatrixXd between = V0 * V0.transpose();
  between.diagonal().array() += 0.01;
  Eigen::MatrixXd within = D0 * D0.transpose();
  within.diagonal().array() += sigma + 0.01;

  TrainingStats local_stats;
  TrainingStats& st = stats != nullptr ? *stats : local_stats;
  st = TrainingStats{};

  std::vector<double> distinct_sizes;
  for (double n : group_sizes) {
    if (std::find(distinct_sizes.begin(), distinct_sizes.end(), n) ==
        distinct_sizes.end()) {
      distinct_sizes.push_back(n);
    }
  }

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // Factor every covariance this iteration needs before touching the
    // accumulators; when one of them collapses below double precision
    // (possible on degenerate data), stop and keep the previous parameters.
    Eigen::LLT<Eigen::MatrixXd> chol_within(within);
    if (chol_within.info() != Eigen::Success) break;
    std::map<double, Eigen::LLT<Eigen::MatrixXd>> chol_mean_by_size;
    bool degenerate = false;
    for (double n : distinct_sizes) {
      Eigen::MatrixXd mean_cov = between + within / n;
      auto it = chol_mean_by_size.emplace(n, mean_cov).first;
      if (it->second.info() != Eigen::Success) {
        degenerate = true;
        break;
      }
    }
    if (degenerate) break;

    double logdet_within =
        2.0 *
        Eigen::MatrixXd(chol_within.matrixL()).diagonal().array().log().sum();

    Eigen::MatrixXd between_acc = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd within_acc = scatter;
    double log_likelihood =
        -0.5 * (static_cast<double>(n_utts - n_speakers) *
                    (logdet_within + d * log2pi) +
                chol_within.solve(scatter).trace());

    for (std::size_t g = 0; g < n_speakers; ++g) {
      const double n = group_sizes[g];
      const Embedding& c = speaker_means[g];

      // Posterior of the speaker offset u ~ N(0, between) given the mean of
      // n observations, c ~ N(u, within / n).
      const Eigen::LLT<Eigen::MatrixXd>& chol_mean = chol_mean_by_size.at(n);
      Eigen::VectorXd solved = chol_mean.solve(c);
      Eigen::VectorXd u_hat = between * solved;
      Eigen::MatrixXd cov_u = between - between * chol_mean.solve(between);

      between_acc += cov_u + u_hat * u_hat.transpose();
      Embedding residual = c - u_hat;
      within_acc += n * (cov_u + residual * residual.transpose());

      double logdet_mean =
          2.0 *
          Eigen::MatrixXd(chol_mean.matrixL()).diagonal().array().log().sum();
      log_likelihood +=
          -0.5 * (logdet_mean + d * log2pi + c.dot(solved));
    }

    st.log_likelihoods.push_back(log_likelihood);
    st.iterations = iter + 1;
    if (iter > 0) {
      double delta = log_likelihood - st.log_likelihoods[iter - 1];
      if (std::abs(delta) < options.log_likelihood_tolerance) {
        st.converged = true;
        break;
      }
    }

    between = 0.5 * (between_acc + between_acc.transpose()) /
              static_cast<double>(n_speakers);
    within = 0.5 * (within_acc + within_acc.transpose()) /
             static_cast<double>(n_utts);

    // Constrained M-step for the within part: the model family has
    // Sw = D D^T + sigma I >= sigma I, and the constrained maximizer floors
    // the eigenvalues of the unconstrained update at sigma. Monotonicity is
    // preserved; data with no within-speaker scatter contracts Sw to exactly
    // sigma I instead of collapsing to a singular matrix.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(within);
    require(eig.info() == Eigen::Success,
            "train_plda: within-covariance eigendecomposition failed");
    if (eig.eigenvalues()[0] < sigma) {
      Eigen::VectorXd floored = eig.eigenvalues().cwiseMax(sigma);
      within = eig.eigenvectors() * floored.asDiagonal() *
               eig.eigenvectors().transpose();
      within = 0.5 * (within + within.transpose());
    }
  }

  // Factor the fitted covariances into loadings of the requested ranks:
  // V V^T approximates the between covariance and D D^T + sigma I the within
  // covariance. Eigenvalues below zero (or below sigma for the within part)
  // are floored.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_b(between);
  require(eig_b.info() == Eigen::Success,
          "train_plda: between-covariance eigendecomposition failed");
  Eigen::MatrixXd V(d, q);
  for (int j = 0; j < q; ++j) {
    double value = eig_b.eigenvalues()[d - 1 - j];  // descending
    V.col(j) = eig_b.eigenvectors().col(d - 1 - j) *
               std::sqrt(std::max(value, 0.0));
  }
  Eigen::MatrixXd within_excess = within;
  within_excess.diagonal().array() -= sigma;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig_w(within_excess);
  require(eig_w.info() == Eigen::Success,
          "train_plda: within-covariance eigendecomposition failed");
  Eigen::MatrixXd D(d, r);
  for (int j = 0; j < r; ++j) {
    double value = eig_w.eigenvalues()[d - 1 - j];
    D.col(j) = eig_w.eigenvectors().col(d - 1 - j) *
               std::sqrt(std::max(value, 0.0));
  }

  PldaModel model;
  model.mean_ = mean;
  model.speaker_loading_ = V;
  model.channel_loading_ = D;
  model.sigma_floor_ = sigma;
  model.center_ = options.center;
  model.length_normalize_ = options.length_normalize;
  model.finalize();
  return model;
}

inline double plda_llr(const PldaModel& model, const Embedding& u,
                       const Embedding& v) {
  return model.log_likelihood_ratio(u, v);
}

// Minus-LLR used as the distance between a pair of embeddings; symmetric and
// unbounded in both directions.
inline double plda_distance(const PldaModel& model, const Embedding& u,
                            const Embedding& v) {
  return -model.log_likelihood_ratio(u, v);
}

// Applies the model's recorded conditioning to a list of embeddings. When
// the model was trained with centering, the reference mean defaults to the
// list's own mean; pass an explicit mean to put several lists into a common
// frame.
inline std::vector<Embedding> condition_embeddings(
    const PldaModel& model, std::span<const Embedding> embeddings,
    const Embedding* reference_mean = nullptr) {
  require(!embeddings.empty(), "condition_embeddings: empty list");
  std::vector<Embedding> out(embeddings.begin(), embeddings.end());
  if (model.center()) {
    Embedding mean;
    if (reference_mean != nullptr) {
      mean = *reference_mean;
    } else {
      mean = Embedding::Zero(embeddings.front().size());
      for (const Embedding& e : out) mean += e;
      mean /= static_cast<double>(out.size());
    }
    for (Embedding& e : out) e -= mean;
  }
  if (model.length_normalize()) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      double norm = out[i].norm();
      require(norm != 0.0, "condition_embeddings: zero vector at index ", i);
      out[i] /= norm;
    }
  }
  return out;
}

// Text model file:
//   #plda d=<d> q=<q> r=<r> sigma_floor=<x> center=<0|1> lennorm=<0|1>
//   <m, one line>
//   <V, d rows of q values>
//   <D, d rows of r values>
inline void save_plda(const PldaModel& model, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open '", path, "' for writing");
  out << "#plda d=" << model.dim() << " q=" << model.rank_q()
      << " r=" << model.rank_r()
      << " sigma_floor=" << internal::format_value(model.sigma_floor())
      << " center=" << (model.center() ? 1 : 0)
      << " lennorm=" << (model.length_normalize() ? 1 : 0) << '\n';
  auto write_row = [&out](const Eigen::VectorXd& row) {
    for (int i = 0; i < row.size(); ++i) {
      if (i > 0) out << ' ';
      out << internal::format_value(row[i]);
    }
    out << '\n';
  };
  write_row(model.mean());
  for (int i = 0; i < model.dim(); ++i) {
    write_row(model.speaker_loading().row(i));
  }
  for (int i = 0; i < model.dim(); ++i) {
    write_row(model.channel_loading().row(i));
  }
  out.flush();
  require(out.good(), "I/O error while writing '", path, "'");
}

inline PldaModel load_plda(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open '", path, "' for reading");
  std::string header;
  require(static_cast<bool>(std::getline(in, header)), "model file '", path,
          "' is empty");
  int d = 0, q = 0, r = 0, center = -1, lennorm = -1;
  double sigma_floor = -1.0;
  int matched = std::sscanf(
      header.c_str(), "#plda d=%d q=%d r=%d sigma_floor=%lf center=%d lennorm=%d",
      &d, &q, &r, &sigma_floor, &center, &lennorm);
  require(matched == 6, "model file '", path, "': malformed header '", header,
          "'");
  require(d >= 1 && q >= 1 && q <= d && r >= 1 && r <= d,
          "model file '", path, "': invalid dimensions in header");
  require(center == 0 || center == 1, "model file '", path,
          "': center must be 0 or 1");
  require(lennorm == 0 || lennorm == 1, "model file '", path,
          "': lennorm must be 0 or 1");

  std::size_t line_no = 1;
  auto read_row = [&](int expected) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "model file '", path,
            "': unexpected end of file after line ", line_no);
    ++line_no;
    std::vector<std::string> fields = internal::split_fields(line);
    require(static_cast<int>(fields.size()) == expected, "model file '", path,
            "' line ", line_no, ": expected ", expected, " values, got ",
            fields.size());
    Eigen::VectorXd row(expected);
    for (int i = 0; i < expected; ++i) {
      row[i] = internal::parse_value(fields[i], line_no);
    }
    return row;
  };

  PldaModel model;
  model.mean_ = read_row(d);
  model.speaker_loading_.resize(d, q);
  for (int i = 0; i < d; ++i) model.speaker_loading_.row(i) = read_row(q);
  model.channel_loading_.resize(d, r);
  for (int i = 0; i < d; ++i) model.channel_loading_.row(i) = read_row(r);
  model.sigma_floor_ = sigma_floor;
  model.center_ = center == 1;
  model.length_normalize_ = lennorm == 1;
  model.finalize();
  return model;
}

}  // namespace xva

#endif  // XVA_PLDA_HPP_
