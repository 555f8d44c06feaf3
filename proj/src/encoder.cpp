#include "avlab/encoder.hpp"

#include <cmath>
#include <string>

#include "avlab/error.hpp"
#include "avlab/rng.hpp"

namespace avlab {
namespace {

void check_dim(std::size_t value, const char* name) {
  if (value < 1) throw ConfigError(std::string("model.") + name + ": must be >= 1");
}

Eigen::MatrixXd affine(const Eigen::Ref<const Eigen::MatrixXd>& x, const Eigen::Map<const Eigen::MatrixXd>& w,
                       const Eigen::Map<const Eigen::VectorXd>& b) {
  Eigen::MatrixXd y = x * w.transpose();
  y.rowwise() += b.transpose();
  return y;
}

Eigen::MatrixXd run_modality(const TowerParams& params, Modality modality, const Eigen::Ref<const Eigen::MatrixXd>& x,
                             ModalityCache* cache) {
  Eigen::MatrixXd h = x;
  for (std::size_t depth = 0; depth < kLayersPerModality; ++depth) {
    const Layer layer = layer_of(modality, depth);
    Eigen::MatrixXd pre = affine(h, params.weight(layer), params.bias(layer));
    if (cache) cache->inputs[depth] = std::move(h);
    if (depth + 1 == kLayersPerModality) return pre;
    h = pre.cwiseMax(0.0);
    if (cache) cache->pre_activations[depth] = std::move(pre);
  }
  return h;  // unreachable
}

void backprop_modality(const TowerParams& params, Modality modality, const ModalityCache& cache,
                       const Eigen::Ref<const Eigen::MatrixXd>& grad_out, TowerParams& grads) {
  Eigen::MatrixXd delta = grad_out;
  for (std::size_t depth = kLayersPerModality; depth-- > 0;) {
    const Layer layer = layer_of(modality, depth);
    const Eigen::MatrixXd& input = cache.inputs[depth];
    grads.weight(layer).noalias() += delta.transpose() * input;
    grads.bias(layer) += delta.colwise().sum().transpose();
    if (depth == 0) break;
    Eigen::MatrixXd upstream = delta * params.weight(layer);
    const Eigen::MatrixXd& pre = cache.pre_activations[depth - 1];
    delta = (pre.array() > 0.0).select(upstream, 0.0);
  }
}

void check_input(const Eigen::Ref<const Eigen::MatrixXd>& x, std::size_t width, const char* name) {
  if (static_cast<std::size_t>(x.cols()) != width)
    throw UsageError(std::string(name) + " batch has width " + std::to_string(x.cols()) + ", expected " +
                     std::to_string(width));
  if (!x.allFinite()) throw NumericError(std::string(name) + " batch contains non-finite values");
}

}  // namespace

void EncoderDims::validate() const {
  check_dim(video_in, "video_in");
  check_dim(audio_in, "audio_in");
  check_dim(hidden, "hidden");
  check_dim(video_out, "video_out");
  check_dim(audio_out, "audio_out");
  check_dim(embed, "embed");
}

Layer layer_of(Modality modality, std::size_t depth) {
  const std::size_t base = modality == Modality::Video ? 0 : kLayersPerModality;
  return static_cast<Layer>(base + depth);
}

std::pair<std::size_t, std::size_t> TowerParams::shape(const EncoderDims& d, Layer layer) {
  switch (layer) {
    case Layer::VideoTower1: return {d.hidden, d.video_in};
    case Layer::VideoTower2: return {d.video_out, d.hidden};
    case Layer::VideoHead1: return {d.embed, d.video_out};
    case Layer::VideoHead2: return {d.embed, d.embed};
    case Layer::AudioTower1: return {d.hidden, d.audio_in};
    case Layer::AudioTower2: return {d.audio_out, d.hidden};
    case Layer::AudioHead1: return {d.embed, d.audio_out};
    case Layer::AudioHead2: return {d.embed, d.embed};
  }
  throw UsageError("unknown layer");
}

std::size_t TowerParams::count(const EncoderDims& dims) {
  std::size_t total = 0;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const auto [out, in] = shape(dims, static_cast<Layer>(l));
    total += out * in + out;
  }
  return total;
}

TowerParams::TowerParams(const EncoderDims& dims, std::uint64_t seed) : dims_(dims), seed_(seed) {
  dims_.validate();
  std::size_t cursor = 0;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    offsets_[l] = cursor;
    const auto [out, in] = shape(dims_, static_cast<Layer>(l));
    cursor += out * in + out;
  }
  values_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cursor));
}

Eigen::Map<Eigen::MatrixXd> TowerParams::weight(Layer layer) {
  const auto [out, in] = shape(dims_, layer);
  return {values_.data() + offset(layer), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)};
}

Eigen::Map<const Eigen::MatrixXd> TowerParams::weight(Layer layer) const {
  const auto [out, in] = shape(dims_, layer);
  return {values_.data() + offset(layer), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)};
}

Eigen::Map<Eigen::VectorXd> TowerParams::bias(Layer layer) {
  const auto [out, in] = shape(dims_, layer);
  return {values_.data() + offset(layer) + out * in, static_cast<Eigen::Index>(out)};
}

Eigen::Map<const Eigen::VectorXd> TowerParams::bias(Layer layer) const {
  const auto [out, in] = shape(dims_, layer);
  return {values_.data() + offset(layer) + out * in, static_cast<Eigen::Index>(out)};
}

TowerParams init_params(const EncoderDims& dims, std::uint64_t seed) {
  TowerParams params(dims, seed);
  Rng rng = make_rng(seed, "init");
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    auto w = params.weight(static_cast<Layer>(l));
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng);
  }
  return params;
}

EmbeddingBatch forward(const TowerParams& params, const Eigen::Ref<const Eigen::MatrixXd>& video,
                       const Eigen::Ref<const Eigen::MatrixXd>& audio, bool keep_cache) {
  check_input(video, params.dims().video_in, "video");
  check_input(audio, params.dims().audio_in, "audio");
  if (video.rows() != audio.rows()) throw UsageError("video and audio batches differ in row count");

  EmbeddingBatch out;
  if (keep_cache) out.cache.emplace();
  out.z_video = run_modality(params, Modality::Video, video, keep_cache ? &out.cache->video : nullptr);
  out.z_audio = run_modality(params, Modality::Audio, audio, keep_cache ? &out.cache->audio : nullptr);
  return out;
}

Eigen::MatrixXd embed(const TowerParams& params, Modality modality, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  const bool video = modality == Modality::Video;
  check_input(inputs, video ? params.dims().video_in : params.dims().audio_in, video ? "video" : "audio");
  return run_modality(params, modality, inputs, nullptr);
}

TowerParams backward(const EmbeddingBatch& embeddings, const Eigen::Ref<const Eigen::MatrixXd>& grad_z_video,
                     const Eigen::Ref<const Eigen::MatrixXd>& grad_z_audio, const TowerParams& params) {
  if (!embeddings.cache) throw UsageError("backward requires a forward cache");
  if (grad_z_video.rows() != embeddings.z_video.rows() || grad_z_video.cols() != embeddings.z_video.cols() ||
      grad_z_audio.rows() != embeddings.z_audio.rows() || grad_z_audio.cols() != embeddings.z_audio.cols())
    throw UsageError("incoming gradient shape does not match the embeddings");

  TowerParams grads = params.zeros_like();
  backprop_modality(params, Modality::Video, embeddings.cache->video, grad_z_video, grads);
  backprop_modality(params, Modality::Audio, embeddings.cache->audio, grad_z_audio, grads);
  return grads;
}

}  // namespace avlab
