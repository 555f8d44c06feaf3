#include "avlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "avlab/error.hpp"
#include "avlab/rng.hpp"

namespace avlab {
namespace {

Eigen::MatrixXd unit_rows_if_normalized(Eigen::MatrixXd z, const LossVariant& variant) {
  if (!variant.is_normalized()) return z;
  const Eigen::VectorXd norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    if (!(norms[i] > 0.0)) throw NumericError("zero-norm embedding under the normalized variant");
  z.array().colwise() /= norms.array();
  return z;
}

std::vector<double> histogram(std::span<const double> samples, double lo, double width, std::size_t bins,
                              double epsilon) {
  std::vector<double> counts(bins, 0.0);
  for (double x : samples) {
    auto b = static_cast<std::size_t>(std::floor((x - lo) / width));
    counts[std::min(b, bins - 1)] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  const double z = 1.0 + static_cast<double>(bins) * epsilon;
  for (double& c : counts) c = (c / n + epsilon) / z;
  return counts;
}

}  // namespace

Eigen::MatrixXd view_features(const CorpusView& view, Modality modality) {
  const auto& cfg = view.corpus().config();
  const auto width = static_cast<Eigen::Index>(modality == Modality::Video ? cfg.video_dim : cfg.audio_dim);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(view.num_snippets()), width);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < view.num_contents(); ++i) {
    const Content& c = view.content(i);
    const FeatureMatrix& f = modality == Modality::Video ? c.video : c.audio;
    out.middleRows(row, f.rows()) = f;
    row += f.rows();
  }
  return out;
}

std::vector<int> view_labels(const CorpusView& view) {
  std::vector<int> labels;
  labels.reserve(view.num_snippets());
  for (std::size_t i = 0; i < view.num_contents(); ++i) {
    const auto& l = view.content(i).labels;
    labels.insert(labels.end(), l.begin(), l.end());
  }
  return labels;
}

namespace {

// Draws the three pools from paired rows of `zv` and `za` (rows in view order);
// every similarity is the row dot product times `scale`.
SimilarityPools draw_pools(const Eigen::MatrixXd& zv, const Eigen::MatrixXd& za, double scale,
                           const CorpusView& holdout, std::size_t budget, std::uint64_t seed) {
  // Snippet i lives in content owner[i], whose rows span [start[owner], start[owner] + length).
  std::vector<std::size_t> owner;
  std::vector<std::size_t> start;
  owner.reserve(holdout.num_snippets());
  for (std::size_t c = 0; c < holdout.num_contents(); ++c) {
    start.push_back(owner.size());
    owner.insert(owner.end(), holdout.content(c).size(), c);
  }
  const std::size_t total = owner.size();
  auto sim = [&](std::size_t i, std::size_t j) {
    return scale * zv.row(static_cast<Eigen::Index>(i)).dot(za.row(static_cast<Eigen::Index>(j)));
  };

  SimilarityPools pools;
  pools.budget = budget;
  pools.pos.reserve(total);
  for (std::size_t i = 0; i < total; ++i) pools.pos.push_back(sim(i, i));

  Rng rng = make_rng(seed, "pools");
  std::uniform_int_distribution<std::size_t> any(0, total - 1);
  pools.neg_within.reserve(budget);
  for (std::size_t draw = 0; draw < budget; ++draw) {
    const std::size_t i = any(rng);
    const std::size_t c = owner[i];
    const std::size_t length = holdout.content(c).size();
    std::uniform_int_distribution<std::size_t> other(0, length - 2);
    std::size_t j = start[c] + other(rng);
    if (j >= i) ++j;
    pools.neg_within.push_back(sim(i, j));
  }

  if (holdout.num_contents() < 2)
    throw EvaluationError("holdout has a single content; cannot draw cross-content pairs");
  pools.neg_cross.reserve(budget);
  for (std::size_t draw = 0; draw < budget; ++draw) {
    const std::size_t i = any(rng);
    std::size_t j = any(rng);
    while (owner[j] == owner[i]) j = any(rng);
    pools.neg_cross.push_back(sim(i, j));
  }

  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(pools.pos) || !finite(pools.neg_within) || !finite(pools.neg_cross))
    throw NumericError("non-finite similarity in held-out pools");
  return pools;
}

void check_pool_request(const CorpusView& holdout, std::size_t budget) {
  if (holdout.empty()) throw EvaluationError("holdout view is empty");
  if (budget < 1) throw EvaluationError("pair budget must be >= 1");
  for (std::size_t c = 0; c < holdout.num_contents(); ++c)
    if (holdout.content(c).size() < 2)
      throw EvaluationError("content " + std::to_string(holdout.content(c).id) + " has fewer than two snippets");
}

}  // namespace

SimilarityPools collect_similarities(const TowerParams& params, const CorpusView& holdout, const LossVariant& variant,
                                     std::size_t budget, std::uint64_t seed) {
  check_pool_request(holdout, budget);
  const Eigen::MatrixXd zv =
      unit_rows_if_normalized(embed(params, Modality::Video, view_features(holdout, Modality::Video)), variant);
  const Eigen::MatrixXd za =
      unit_rows_if_normalized(embed(params, Modality::Audio, view_features(holdout, Modality::Audio)), variant);
  const double scale = variant.is_normalized() ? 1.0 / variant.tau : 1.0;
  return draw_pools(zv, za, scale, holdout, budget, seed);
}

SimilarityPools collect_feature_similarities(const CorpusView& holdout, std::size_t budget, std::uint64_t seed) {
  check_pool_request(holdout, budget);
  const auto& cfg = holdout.corpus().config();
  if (cfg.video_dim != cfg.audio_dim)
    throw EvaluationError("raw feature similarity needs equal video and audio widths");
  return draw_pools(view_features(holdout, Modality::Video), view_features(holdout, Modality::Audio), 1.0, holdout,
                    budget, seed);
}

double kl_divergence(std::span<const double> p, std::span<const double> q, std::size_t bins, double epsilon) {
  if (p.empty() || q.empty()) throw EvaluationError("kl_divergence: empty sample set");
  if (bins < 2) throw EvaluationError("kl_divergence: bins must be >= 2");
  if (!(epsilon > 0.0)) throw EvaluationError("kl_divergence: epsilon must be > 0");

  const auto [p_lo, p_hi] = std::minmax_element(p.begin(), p.end());
  const auto [q_lo, q_hi] = std::minmax_element(q.begin(), q.end());
  const double lo = std::min(*p_lo, *q_lo);
  const double hi = std::max(*p_hi, *q_hi);
  if (!(hi > lo)) return 0.0;

  const double width = (hi - lo) / static_cast<double>(bins);
  const std::vector<double> ph = histogram(p, lo, width, bins, epsilon);
  const std::vector<double> qh = histogram(q, lo, width, bins, epsilon);
  double kl = 0.0;
  for (std::size_t b = 0; b < bins; ++b) kl += ph[b] * std::log(ph[b] / qh[b]);
  return std::max(kl, 0.0);
}

DiscrepancyReport discrepancy(const SimilarityPools& pools, const DiscrepancyConfig& config) {
  if (pools.pos.empty() || pools.neg_within.empty() || pools.neg_cross.empty())
    throw EvaluationError("discrepancy: every pool must be nonempty");
  DiscrepancyReport r;
  r.kl_within_vs_pos = kl_divergence(pools.neg_within, pools.pos, config.bins, config.epsilon);
  r.kl_cross_vs_pos = kl_divergence(pools.neg_cross, pools.pos, config.bins, config.epsilon);
  r.kl_within_vs_cross = kl_divergence(pools.neg_within, pools.neg_cross, config.bins, config.epsilon);
  r.gap = r.kl_cross_vs_pos - r.kl_within_vs_pos;
  return r;
}

double fit_probe(const Eigen::Ref<const Eigen::MatrixXd>& train_x, std::span<const int> train_y,
                 const Eigen::Ref<const Eigen::MatrixXd>& test_x, std::span<const int> test_y, std::size_t num_classes,
                 const ProbeConfig& config) {
  const auto n = train_x.rows();
  if (n == 0 || test_x.rows() == 0) throw ProbeError("probe needs nonempty train and test sets");
  if (static_cast<std::size_t>(n) != train_y.size() || static_cast<std::size_t>(test_x.rows()) != test_y.size())
    throw ProbeError("feature and label counts differ");
  if (train_x.cols() != test_x.cols()) throw ProbeError("train and test feature widths differ");
  for (int y : train_y)
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw ProbeError("label out of range");
  if (std::set<int>(train_y.begin(), train_y.end()).size() < 2) throw ProbeError("training labels contain a single class");
  if (!train_x.allFinite() || !test_x.allFinite()) throw ProbeError("non-finite probe features");

  // ZCA whitening on the training set (eigenvalues floored relative to the top one)
  // so gradient descent sees a well-conditioned problem. Whitening commutes with
  // rotations of the feature space, as does the global-scale fallback.
  const Eigen::RowVectorXd mean = train_x.colwise().mean();
  Eigen::MatrixXd x = train_x.rowwise() - mean;
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
  Eigen::MatrixXd whiten;
  if (config.whiten) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double floor = std::max(eig.eigenvalues().maxCoeff() * 1e-6, 1e-300);
    const Eigen::VectorXd inv_sqrt = eig.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
    whiten = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  } else {
    const double scale = std::sqrt(std::max(cov.trace() / static_cast<double>(cov.rows()), 1e-300));
    whiten = Eigen::MatrixXd::Identity(cov.rows(), cov.cols()) / scale;
  }
  x = x * whiten;

  const auto d = x.cols();
  const auto classes = static_cast<Eigen::Index>(num_classes);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, train_y[static_cast<std::size_t>(i)]) = 1.0;

  // Step 1/L with L bounding the Hessian of the mean cross-entropy plus the ridge.
  Eigen::MatrixXd augmented(n, d + 1);
  augmented << x, Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd gram = augmented.transpose() * augmented / static_cast<double>(n);
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  const double step = 1.0 / (0.5 * lambda_max + config.l2);

  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(d, classes);
  Eigen::RowVectorXd bias = Eigen::RowVectorXd::Zero(classes);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Eigen::MatrixXd logits = x * weights;
    logits.rowwise() += bias;
    logits.colwise() -= logits.rowwise().maxCoeff();
    Eigen::MatrixXd prob = logits.array().exp();
    prob.array().colwise() /= prob.rowwise().sum().array();
    const Eigen::MatrixXd residual = (prob - onehot) / static_cast<double>(n);
    weights -= step * (x.transpose() * residual + config.l2 * weights);
    bias -= step * residual.colwise().sum();
  }

  Eigen::MatrixXd test = (test_x.rowwise() - mean) * whiten;
  Eigen::MatrixXd scores = test * weights;
  scores.rowwise() += bias;
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    scores.row(i).maxCoeff(&best);
    if (best == test_y[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double linear_probe(const TowerParams& params, const CorpusView& train_view, const CorpusView& test_view,
                    const ProbeConfig& config) {
  for (auto id : train_view.content_ids())
    for (auto other : test_view.content_ids())
      if (id == other) throw ProbeError("probe train and test views share content " + std::to_string(id));
  const Eigen::MatrixXd train_x = embed(params, config.modality, view_features(train_view, config.modality));
  const Eigen::MatrixXd test_x = embed(params, config.modality, view_features(test_view, config.modality));
  return fit_probe(train_x, view_labels(train_view), test_x, view_labels(test_view),
                   train_view.corpus().config().num_classes, config);
}

}  // namespace avlab
