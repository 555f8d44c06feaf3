#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace avlab {

struct EncoderDims {
  std::size_t video_in = 32;   // D_v
  std::size_t audio_in = 32;   // D_a
  std::size_t hidden = 64;
  std::size_t video_out = 64;  // d_f
  std::size_t audio_out = 64;  // d_g
  std::size_t embed = 32;      // d

  void validate() const;
  friend bool operator==(const EncoderDims&, const EncoderDims&) = default;
};

enum class Modality { Video, Audio };

/// The eight affine layers: tower (2) then projection head (2), per modality.
enum class Layer : std::size_t {
  VideoTower1,
  VideoTower2,
  VideoHead1,
  VideoHead2,
  AudioTower1,
  AudioTower2,
  AudioHead1,
  AudioHead2,
};
inline constexpr std::size_t kNumLayers = 8;
inline constexpr std::size_t kLayersPerModality = 4;

Layer layer_of(Modality modality, std::size_t depth);

/// All learnable weights in one contiguous vector, exposed per layer through maps.
/// Weights are stored out x in (column-major), so a layer computes X W^T + b.
/// Gradients and optimizer moments reuse this type.
class TowerParams {
public:
  TowerParams() = default;
  /// Zero-initialised parameters for `dims`.
  explicit TowerParams(const EncoderDims& dims, std::uint64_t seed = 0);

  const EncoderDims& dims() const { return dims_; }
  std::uint64_t seed() const { return seed_; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  Eigen::Map<Eigen::MatrixXd> weight(Layer layer);
  Eigen::Map<const Eigen::MatrixXd> weight(Layer layer) const;
  Eigen::Map<Eigen::VectorXd> bias(Layer layer);
  Eigen::Map<const Eigen::VectorXd> bias(Layer layer) const;

  /// (out, in) of a layer.
  static std::pair<std::size_t, std::size_t> shape(const EncoderDims& dims, Layer layer);
  /// Sum of out*in + out over all layers.
  static std::size_t count(const EncoderDims& dims);

  bool all_finite() const { return values_.allFinite(); }
  /// Same dims, all zeros.
  TowerParams zeros_like() const { return TowerParams(dims_, seed_); }

  friend bool operator==(const TowerParams& a, const TowerParams& b) {
    return a.dims_ == b.dims_ && a.seed_ == b.seed_ && a.values_ == b.values_;
  }

private:
  std::size_t offset(Layer layer) const { return offsets_[static_cast<std::size_t>(layer)]; }

  EncoderDims dims_;
  std::uint64_t seed_ = 0;
  Eigen::VectorXd values_;
  std::array<std::size_t, kNumLayers> offsets_{};
};

/// Weights ~ U[-b, b] with b = sqrt(6 / fan_in); biases zero.
TowerParams init_params(const EncoderDims& dims, std::uint64_t seed);

/// Intermediates of one modality: the input of each affine layer and the
/// pre-activation of each hidden layer.
struct ModalityCache {
  std::array<Eigen::MatrixXd, kLayersPerModality> inputs;
  std::array<Eigen::MatrixXd, kLayersPerModality - 1> pre_activations;
};

struct ForwardCache {
  ModalityCache video;
  ModalityCache audio;
};

struct EmbeddingBatch {
  Eigen::MatrixXd z_video;  // B x d
  Eigen::MatrixXd z_audio;  // B x d
  std::optional<ForwardCache> cache;
};

/// z = head(tower(x)) for each modality, ReLU between consecutive affine layers.
EmbeddingBatch forward(const TowerParams& params, const Eigen::Ref<const Eigen::MatrixXd>& video,
                       const Eigen::Ref<const Eigen::MatrixXd>& audio, bool keep_cache = true);

/// Single-modality inference without a cache.
Eigen::MatrixXd embed(const TowerParams& params, Modality modality, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

/// dLoss/dtheta given dLoss/dz for both modalities.
TowerParams backward(const EmbeddingBatch& embeddings, const Eigen::Ref<const Eigen::MatrixXd>& grad_z_video,
                     const Eigen::Ref<const Eigen::MatrixXd>& grad_z_audio, const TowerParams& params);

}  // namespace avlab
