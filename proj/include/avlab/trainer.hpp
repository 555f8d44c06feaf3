#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "avlab/corpus.hpp"
#include "avlab/encoder.hpp"
#include "avlab/objective.hpp"
#include "avlab/sampler.hpp"

namespace avlab {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Eigen::VectorXd first;
  Eigen::VectorXd second;

  static AdamMoments zeros(std::size_t n) {
    return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  }
};

/// One bias-corrected Adam update. `step` is 1-based.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads, AdamMoments& moments,
               std::size_t step, double lr, const AdamConfig& adam = {});

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t steps_per_epoch = 360;
  SamplingSpec sampling;
  LossVariant variant;
  double jitter_sigma = 0.0;
  double lr_init = 1e-4;
  double lr_peak = 2e-3;
  AdamConfig adam;
  // Tower and head widths; input widths are taken from the corpus.
  std::size_t hidden = 64;
  std::size_t tower_out = 64;
  std::size_t embed_dim = 32;
  std::uint64_t seed = 0;

  std::size_t total_steps() const { return epochs * steps_per_epoch; }
  EncoderDims encoder_dims(std::size_t video_in, std::size_t audio_in) const {
    return {video_in, audio_in, hidden, tower_out, tower_out, embed_dim};
  }
  void validate() const;
};

/// Linear warmup lr_init -> lr_peak over the first epoch, then cosine from
/// lr_peak down to 0 at the final step.
double lr_at(std::size_t step, const TrainConfig& config);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double loss_total = 0.0;
  double loss_per_anchor = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_seconds;

  /// Mean per-anchor loss over the records of one epoch.
  double mean_epoch_loss(std::size_t epoch) const;
};

struct TrainResult {
  TowerParams params;
  TrainLog log;
};

/// Called after each epoch with the 0-based epoch index and the current params.
using EpochCallback = std::function<void(std::size_t, const TowerParams&)>;

/// Video and audio rows of a minibatch, in entry order.
struct BatchFeatures {
  Eigen::MatrixXd video;
  Eigen::MatrixXd audio;
};

BatchFeatures gather_features(const Corpus& corpus, const Minibatch& batch);

/// Full pretraining loop. Deterministic in (corpus, config).
/// Throws DivergenceError on the first non-finite loss or parameter.
TrainResult train(const CorpusView& train_view, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace avlab
