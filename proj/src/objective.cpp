#include "avlab/objective.hpp"

#include <cmath>

#include "avlab/error.hpp"

namespace avlab {
namespace {

Eigen::VectorXd row_norms(const Eigen::Ref<const Eigen::MatrixXd>& z, const char* name) {
  Eigen::VectorXd norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i)
    if (!(norms[i] > 0.0))
      throw NumericError(std::string("zero-norm ") + name + " embedding at row " + std::to_string(i) +
                         " under the normalized variant");
  return norms;
}

// d(z / |z|) applied to an upstream gradient g on the unit vector u:
// (g - u (u . g)) / |z|, row by row.
Eigen::MatrixXd normalize_backward(const Eigen::MatrixXd& unit, const Eigen::VectorXd& norms, const Eigen::MatrixXd& g) {
  const Eigen::VectorXd radial = (unit.array() * g.array()).rowwise().sum();
  const Eigen::ArrayXXd tangent = g.array() - unit.array().colwise() * radial.array();
  return (tangent.colwise() / norms.array()).matrix();
}

}  // namespace

LossVariant LossVariant::normalized(double tau) {
  LossVariant v{Kind::NormalizedTau, tau};
  v.validate();
  return v;
}

std::string LossVariant::name() const { return is_normalized() ? "norm" : "unnorm"; }

void LossVariant::validate() const {
  if (is_normalized() && !(tau > 0.0 && std::isfinite(tau))) throw ConfigError("train.tau: must be > 0");
}

LossVariant parse_variant(const std::string& token, double tau) {
  if (token == "unnorm") return LossVariant::unnormalized();
  if (token == "norm") return LossVariant::normalized(tau);
  throw ConfigError("variant: expected 'unnorm' or 'norm', got '" + token + "'");
}

Eigen::MatrixXd pairwise_similarity(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                                    const Eigen::Ref<const Eigen::MatrixXd>& z_audio, const LossVariant& variant) {
  if (z_video.cols() != z_audio.cols()) throw UsageError("embedding widths differ between modalities");
  if (!variant.is_normalized()) return z_video * z_audio.transpose();
  const Eigen::VectorXd nv = row_norms(z_video, "video");
  const Eigen::VectorXd na = row_norms(z_audio, "audio");
  const Eigen::MatrixXd uv = z_video.array().colwise() / nv.array();
  const Eigen::MatrixXd ua = z_audio.array().colwise() / na.array();
  return (uv * ua.transpose()) / variant.tau;
}

NceResult nce_loss(const Eigen::Ref<const Eigen::MatrixXd>& s) {
  if (s.rows() != s.cols()) throw NumericError("similarity matrix is not square");
  if (!s.allFinite()) throw NumericError("similarity matrix contains non-finite values");
  const Eigen::Index b = s.rows();

  NceResult out;
  out.grad_similarity = Eigen::MatrixXd::Zero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    // Candidate set of anchor i: row i and column i (S_ii counted once).
    const double top = std::max(s.row(i).maxCoeff(), s.col(i).maxCoeff());
    const Eigen::ArrayXd row_exp = (s.row(i).array() - top).exp();
    const Eigen::ArrayXd col_exp = (s.col(i).array() - top).exp();
    const double diag_exp = row_exp[i];
    const double denom = row_exp.sum() + col_exp.sum() - diag_exp;
    out.value += -(s(i, i) - top) + std::log(denom);

    out.grad_similarity.row(i) += (row_exp / denom).matrix().transpose();
    out.grad_similarity.col(i) += (col_exp / denom).matrix();
    out.grad_similarity(i, i) -= diag_exp / denom;  // the diagonal was added twice
    out.grad_similarity(i, i) -= 1.0;
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> similarity_backward(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                                                                const Eigen::Ref<const Eigen::MatrixXd>& z_audio,
                                                                const LossVariant& variant,
                                                                const Eigen::Ref<const Eigen::MatrixXd>& grad_s) {
  if (!variant.is_normalized()) return {grad_s * z_audio, grad_s.transpose() * z_video};

  const Eigen::VectorXd nv = row_norms(z_video, "video");
  const Eigen::VectorXd na = row_norms(z_audio, "audio");
  const Eigen::MatrixXd uv = z_video.array().colwise() / nv.array();
  const Eigen::MatrixXd ua = z_audio.array().colwise() / na.array();
  const Eigen::MatrixXd grad_uv = (grad_s * ua) / variant.tau;
  const Eigen::MatrixXd grad_ua = (grad_s.transpose() * uv) / variant.tau;
  return {normalize_backward(uv, nv, grad_uv), normalize_backward(ua, na, grad_ua)};
}

LossResult contrastive_loss(const Eigen::Ref<const Eigen::MatrixXd>& z_video,
                            const Eigen::Ref<const Eigen::MatrixXd>& z_audio, const LossVariant& variant) {
  LossResult out;
  out.similarity = pairwise_similarity(z_video, z_audio, variant);
  NceResult nce = nce_loss(out.similarity);
  out.value = nce.value;
  auto [gv, ga] = similarity_backward(z_video, z_audio, variant, nce.grad_similarity);
  out.grad_z_video = std::move(gv);
  out.grad_z_audio = std::move(ga);
  return out;
}

}  // namespace avlab
