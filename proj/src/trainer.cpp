#include "avlab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

#include "avlab/error.hpp"

namespace avlab {

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads, AdamMoments& moments,
               std::size_t step, double lr, const AdamConfig& adam) {
  if (grads.size() != params.size() || moments.first.size() != params.size() ||
      moments.second.size() != params.size())
    throw UsageError("adam_step: parameter, gradient and moment sizes differ");
  if (step < 1) throw UsageError("adam_step: step is 1-based");

  moments.first = adam.beta1 * moments.first + (1.0 - adam.beta1) * grads;
  moments.second = adam.beta2 * moments.second + (1.0 - adam.beta2) * grads.cwiseProduct(grads);
  const double t = static_cast<double>(step);
  const double correct1 = 1.0 - std::pow(adam.beta1, t);
  const double correct2 = 1.0 - std::pow(adam.beta2, t);
  params.array() -=
      lr * (moments.first.array() / correct1) / ((moments.second.array() / correct2).sqrt() + adam.eps);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (steps_per_epoch < 1) throw ConfigError("train.steps_per_epoch: must be >= 1");
  if (!(lr_init > 0.0 && lr_init <= lr_peak)) throw ConfigError("train.lr_init: require 0 < lr_init <= lr_peak");
  if (!(jitter_sigma >= 0.0)) throw ConfigError("train.sigma: must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("train.eps: must be > 0");
  if (hidden < 1 || tower_out < 1 || embed_dim < 1) throw ConfigError("model: widths must be >= 1");
  sampling.validate();
  variant.validate();
}

double lr_at(std::size_t step, const TrainConfig& config) {
  const std::size_t total = config.total_steps();
  if (step >= total)
    throw UsageError("lr_at: step " + std::to_string(step) + " outside [0, " + std::to_string(total) + ")");
  const std::size_t warmup = config.steps_per_epoch;
  if (step < warmup) {
    const double frac = static_cast<double>(step) / static_cast<double>(warmup);
    return config.lr_init + (config.lr_peak - config.lr_init) * frac;
  }
  const std::size_t remaining = total - warmup;
  const double progress =
      remaining > 1 ? static_cast<double>(step - warmup) / static_cast<double>(remaining - 1) : 0.0;
  return config.lr_peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double TrainLog::mean_epoch_loss(std::size_t epoch) const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : steps) {
    if (r.epoch != epoch) continue;
    sum += r.loss_per_anchor;
    ++count;
  }
  if (count == 0) throw UsageError("no records for epoch " + std::to_string(epoch));
  return sum / static_cast<double>(count);
}

BatchFeatures gather_features(const Corpus& corpus, const Minibatch& batch) {
  const auto& cfg = corpus.config();
  const auto rows = static_cast<Eigen::Index>(batch.size());
  BatchFeatures out{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(cfg.video_dim)),
                    Eigen::MatrixXd(rows, static_cast<Eigen::Index>(cfg.audio_dim))};
  for (Eigen::Index i = 0; i < rows; ++i) {
    const SnippetRef ref = batch.entries[static_cast<std::size_t>(i)];
    const Content& c = corpus.content(ref.content_id);
    const auto m = static_cast<Eigen::Index>(ref.snippet_index);
    out.video.row(i) = c.video.row(m);
    out.audio.row(i) = c.audio.row(m);
  }
  return out;
}

TrainResult train(const CorpusView& train_view, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto& corpus_cfg = train_view.corpus().config();
  Sampler sampler(train_view, config.sampling);
  Rng jitter_rng = make_rng(config.seed, "jitter");

  TrainResult result{init_params(config.encoder_dims(corpus_cfg.video_dim, corpus_cfg.audio_dim), config.seed), {}};
  TowerParams& params = result.params;
  AdamMoments moments = AdamMoments::zeros(params.size());
  result.log.steps.reserve(config.total_steps());

  const double batch = static_cast<double>(config.sampling.batch_size);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    for (std::size_t s = 0; s < config.steps_per_epoch; ++s, ++step) {
      BatchFeatures features = gather_features(train_view.corpus(), sampler.next());
      if (config.jitter_sigma > 0.0)
        for (Eigen::Index i = 0; i < features.video.rows(); ++i)
          features.video.row(i) *= draw_jitter_gain(config.jitter_sigma, jitter_rng);

      const EmbeddingBatch emb = forward(params, features.video, features.audio);
      LossResult loss;
      try {
        loss = contrastive_loss(emb.z_video, emb.z_audio, config.variant);
      } catch (const NumericError& e) {
        throw DivergenceError(step, e.what());
      }
      if (!std::isfinite(loss.value)) throw DivergenceError(step, "non-finite loss");

      const TowerParams grads = backward(emb, loss.grad_z_video, loss.grad_z_audio, params);
      const double lr = lr_at(step, config);
      adam_step(params.values(), grads.values(), moments, step + 1, lr, config.adam);
      if (!params.all_finite()) throw DivergenceError(step, "non-finite parameters after update");

      result.log.steps.push_back({step, epoch, lr, loss.value, loss.value / batch});
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    result.log.epoch_seconds.push_back(elapsed.count());
    if (on_epoch) on_epoch(epoch, params);
  }
  return result;
}

}  // namespace avlab
