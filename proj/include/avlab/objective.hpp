#pragma once

#include <string>

#include <Eigen/Dense>

namespace avlab {

/// Similarity space the loss operates in: raw dot products, or cosine / tau.
struct LossVariant {
  enum class Kind { Unnormalized, NormalizedTau };

  Kind kind = Kind::Unnormalized;
  double tau = 0.0;

  static LossVariant unnormalized() { return {}; }
  static LossVariant normalized(double tau);

  bool is_normalized() const { return kind == Kind::NormalizedTau; }
  /// "unnorm" or "norm".
  std::string name() const;
  void validate() const;

  friend bool operator==(const LossVariant&, const LossVariant&) = default;
};

/// Parses the config / CLI token ("unnorm" | "norm") with the given tau.
LossVariant parse_variant(const std::string& token, double tau);

/// S[i][j] = sim(z_video row i, z_audio row j) under the variant.
Eigen::MatrixXd pairwise_similarity(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                                    const Eigen::Ref<const Eigen::MatrixXd>& z_audio, const LossVariant& variant);

struct NceResult {
  double value = 0.0;
  Eigen::MatrixXd grad_similarity;  // dL/dS
};

/// Symmetric cross-modal NCE over a B x B similarity matrix. Anchor i competes
/// S_ii against the 2(B-1) negatives S_ij and S_ji (j != i). Batch total.
NceResult nce_loss(const Eigen::Ref<const Eigen::MatrixXd>& similarity);

/// Chains dL/dS back to (dL/dz_video, dL/dz_audio), including the
/// normalisation when the variant has one.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> similarity_backward(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                                                                const Eigen::Ref<const Eigen::MatrixXd>& z_audio,
                                                                const LossVariant& variant,
                                                                const Eigen::Ref<const Eigen::MatrixXd>& grad_similarity);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd grad_z_video;
  Eigen::MatrixXd grad_z_audio;
  Eigen::MatrixXd similarity;
};

LossResult contrastive_loss(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                            const Eigen::Ref<const Eigen::MatrixXd>& z_audio, const LossVariant& variant);

}  // namespace avlab
