#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "avlab/corpus.hpp"
#include "avlab/encoder.hpp"
#include "avlab/objective.hpp"

namespace avlab {

/// Empirical samples of the three held-out similarity distributions.
struct SimilarityPools {
  std::vector<double> pos;         // same snippet
  std::vector<double> neg_within;  // same content, different snippet
  std::vector<double> neg_cross;   // different content
  std::size_t budget = 0;          // draws per negative pool
};

struct DiscrepancyReport {
  double kl_within_vs_pos = 0.0;    // KL(S- || S+)
  double kl_cross_vs_pos = 0.0;     // KL(S!= || S+)
  double kl_within_vs_cross = 0.0;  // KL(S- || S!=)
  double gap = 0.0;                 // KL(S!= || S+) - KL(S- || S+)
};

struct DiscrepancyConfig {
  std::size_t bins = 64;
  double epsilon = 1e-8;
};

/// Embeds every held-out snippet once per modality and fills the pools using the
/// same similarity transform as the loss. Negative pools are filled by uniform
/// draws: an anchor snippet first, then a partner satisfying the pool's constraint.
SimilarityPools collect_similarities(const TowerParams& params, const CorpusView& holdout, const LossVariant& variant,
                                     std::size_t budget, std::uint64_t seed);

/// The same pools on the raw input features (video . audio), with no encoder.
/// Requires equal video and audio widths.
SimilarityPools collect_feature_similarities(const CorpusView& holdout, std::size_t budget, std::uint64_t seed);

/// KL(p || q) between add-epsilon smoothed histograms on a shared binning of
/// [min, max] over both sample sets. Returns 0 when the pooled range is degenerate.
double kl_divergence(std::span<const double> p_samples, std::span<const double> q_samples, std::size_t bins = 64,
                     double epsilon = 1e-8);

DiscrepancyReport discrepancy(const SimilarityPools& pools, const DiscrepancyConfig& config = {});

struct ProbeConfig {
  std::size_t iterations = 300;
  double l2 = 1e-3;
  Modality modality = Modality::Video;
  bool whiten = true;
};

/// Multinomial logistic regression by full-batch gradient descent; returns top-1
/// accuracy on the test set. Features are centred on the training mean and
/// whitened with the training covariance (or, with `whiten` off, divided by one
/// global scale). Either way the fit is equivariant to rotations of the features.
double fit_probe(const Eigen::Ref<const Eigen::MatrixXd>& train_x, std::span<const int> train_y,
                 const Eigen::Ref<const Eigen::MatrixXd>& test_x, std::span<const int> test_y, std::size_t num_classes,
                 const ProbeConfig& config = {});

/// Frozen-encoder probe: embeds both views with the chosen modality's tower and
/// head, fits on `train_view`, scores on `test_view`.
double linear_probe(const TowerParams& params, const CorpusView& train_view, const CorpusView& test_view,
                    const ProbeConfig& config = {});

/// All snippets of a view, rows in view order.
Eigen::MatrixXd view_features(const CorpusView& view, Modality modality);
std::vector<int> view_labels(const CorpusView& view);

}  // namespace avlab
