#include "avlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "avlab/error.hpp"

namespace avlab {
namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ConfigError("corpus." + field + ": " + rule);
}

Eigen::MatrixXd random_mixing(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = cols > 0 ? 1.0 / std::sqrt(static_cast<double>(cols)) : 0.0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = normal(rng) * scale;
  return m;
}

int label_of(const Eigen::Ref<const Eigen::RowVectorXd>& s, std::size_t num_classes) {
  Eigen::Index best = 0;
  s.cwiseAbs().maxCoeff(&best);
  return static_cast<int>(static_cast<std::size_t>(best) % num_classes);
}

Content generate_content(const CorpusConfig& cfg, const MixingMatrices& mix, std::size_t id) {
  Rng rng(derive_seed(cfg.seed, id));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> length(cfg.min_snippets, cfg.max_snippets);

  const auto m_count = static_cast<Eigen::Index>(length(rng));
  const auto sem = static_cast<Eigen::Index>(cfg.sem_dim);

  Content content;
  content.id = id;
  content.artifact.resize(static_cast<Eigen::Index>(cfg.art_dim));
  for (auto& x : content.artifact) x = normal(rng);

  // Stationary AR(1) chain: unit marginal variance at every position.
  const double rho = cfg.temporal_rho;
  const double innovation = std::sqrt(1.0 - rho * rho);
  content.semantic.resize(m_count, sem);
  for (Eigen::Index j = 0; j < sem; ++j) content.semantic(0, j) = normal(rng);
  for (Eigen::Index m = 1; m < m_count; ++m)
    for (Eigen::Index j = 0; j < sem; ++j)
      content.semantic(m, j) = rho * content.semantic(m - 1, j) + innovation * normal(rng);

  const Eigen::VectorXd video_artifact = cfg.artifact_strength * (mix.video_artifact * content.artifact);
  const Eigen::VectorXd audio_artifact = cfg.artifact_strength * (mix.audio_artifact * content.artifact);

  content.video.resize(m_count, static_cast<Eigen::Index>(cfg.video_dim));
  content.audio.resize(m_count, static_cast<Eigen::Index>(cfg.audio_dim));
  content.labels.resize(static_cast<std::size_t>(m_count));
  Eigen::VectorXd sync(static_cast<Eigen::Index>(cfg.sync_dim));
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const Eigen::VectorXd s = cfg.semantic_scale * content.semantic.row(m).transpose();
    Eigen::VectorXd v = mix.video_semantic * s + video_artifact;
    Eigen::VectorXd a = mix.audio_semantic * s + audio_artifact;
    if (cfg.sync_dim > 0) {
      for (auto& x : sync) x = normal(rng);
      v += cfg.sync_strength * (mix.video_sync * sync);
      a += cfg.sync_strength * (mix.audio_sync * sync);
    }
    for (auto& x : v) x += cfg.noise_scale * normal(rng);
    for (auto& x : a) x += cfg.noise_scale * normal(rng);
    content.video.row(m) = v.transpose();
    content.audio.row(m) = a.transpose();
    content.labels[static_cast<std::size_t>(m)] = label_of(content.semantic.row(m), cfg.num_classes);
  }
  return content;
}

}  // namespace

void CorpusConfig::validate() const {
  require(num_contents >= 2, "num_contents", "must be >= 2");
  require(min_snippets >= 2, "min_snippets", "must be >= 2");
  require(max_snippets >= min_snippets, "max_snippets", "must be >= min_snippets");
  require(sem_dim >= 1, "sem_dim", "must be >= 1");
  require(art_dim >= 1, "art_dim", "must be >= 1");
  require(video_dim >= 1, "video_dim", "must be >= 1");
  require(audio_dim >= 1, "audio_dim", "must be >= 1");
  require(std::isfinite(artifact_strength) && artifact_strength >= 0.0, "artifact_strength", "must be >= 0");
  require(temporal_rho >= 0.0 && temporal_rho < 1.0, "temporal_rho", "must lie in [0, 1)");
  require(std::isfinite(semantic_scale) && semantic_scale >= 0.0, "semantic_scale", "must be >= 0");
  require(std::isfinite(sync_strength) && sync_strength >= 0.0, "sync_strength", "must be >= 0");
  require(std::isfinite(noise_scale) && noise_scale >= 0.0, "noise_scale", "must be >= 0");
  require(num_classes >= 1, "num_classes", "must be >= 1");
  require(holdout_fraction > 0.0 && holdout_fraction < 1.0, "holdout_fraction", "must lie in (0, 1)");
  const auto held = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(num_contents)));
  require(held >= 1 && held < num_contents, "holdout_fraction",
          "must leave at least one held-out and one training content");
}

CorpusConfig CorpusConfig::tv_preset() {
  CorpusConfig cfg;
  cfg.artifact_strength = 2.0;
  cfg.semantic_scale = 0.6;
  return cfg;
}

Corpus::Corpus(CorpusConfig config, MixingMatrices mixing, std::vector<Content> contents)
    : config_(std::move(config)), mixing_(std::move(mixing)), contents_(std::move(contents)) {}

std::size_t Corpus::num_snippets() const {
  std::size_t total = 0;
  for (const auto& c : contents_) total += c.size();
  return total;
}

Snippet Corpus::snippet(SnippetRef ref) const {
  const Content& c = content(ref.content_id);
  if (ref.snippet_index >= c.size()) throw UsageError("snippet index out of range");
  const auto row = static_cast<Eigen::Index>(ref.snippet_index);
  const auto dv = static_cast<std::size_t>(c.video.cols());
  const auto da = static_cast<std::size_t>(c.audio.cols());
  return Snippet{ref.content_id, ref.snippet_index, {c.video.row(row).data(), dv}, {c.audio.row(row).data(), da},
                 c.labels[ref.snippet_index]};
}

bool operator==(const Corpus& a, const Corpus& b) {
  if (a.contents_.size() != b.contents_.size()) return false;
  const auto& ma = a.mixing_;
  const auto& mb = b.mixing_;
  if (ma.video_semantic != mb.video_semantic || ma.video_artifact != mb.video_artifact ||
      ma.audio_semantic != mb.audio_semantic || ma.audio_artifact != mb.audio_artifact ||
      ma.video_sync != mb.video_sync || ma.audio_sync != mb.audio_sync)
    return false;
  for (std::size_t i = 0; i < a.contents_.size(); ++i) {
    const auto& x = a.contents_[i];
    const auto& y = b.contents_[i];
    if (x.id != y.id || x.labels != y.labels || x.video.rows() != y.video.rows() || x.video != y.video ||
        x.audio != y.audio || x.semantic != y.semantic || x.artifact != y.artifact)
      return false;
  }
  return true;
}

CorpusView::CorpusView(const Corpus& corpus) : corpus_(&corpus), ids_(corpus.num_contents()) {
  std::iota(ids_.begin(), ids_.end(), std::size_t{0});
}

CorpusView::CorpusView(const Corpus& corpus, std::vector<std::size_t> content_ids)
    : corpus_(&corpus), ids_(std::move(content_ids)) {
  for (auto id : ids_)
    if (id >= corpus.num_contents()) throw UsageError("content id " + std::to_string(id) + " not in corpus");
}

std::size_t CorpusView::num_snippets() const {
  std::size_t total = 0;
  for (auto id : ids_) total += corpus_->content(id).size();
  return total;
}

Corpus generate_corpus(const CorpusConfig& config) {
  config.validate();
  Rng rng = make_rng(config.seed, "mixing");
  MixingMatrices mix;
  mix.video_semantic = random_mixing(config.video_dim, config.sem_dim, rng);
  mix.audio_semantic = random_mixing(config.audio_dim, config.sem_dim, rng);
  // One artifact signature for both modalities, so the artifact is a positively
  // correlated component of every video/audio pair from the same content.
  const Eigen::MatrixXd signature = random_mixing(std::max(config.video_dim, config.audio_dim), config.art_dim, rng);
  mix.video_artifact = signature.topRows(static_cast<Eigen::Index>(config.video_dim));
  mix.audio_artifact = signature.topRows(static_cast<Eigen::Index>(config.audio_dim));
  mix.video_sync = random_mixing(config.video_dim, config.sync_dim, rng);
  mix.audio_sync = random_mixing(config.audio_dim, config.sync_dim, rng);

  std::vector<Content> contents;
  contents.reserve(config.num_contents);
  for (std::size_t n = 0; n < config.num_contents; ++n) contents.push_back(generate_content(config, mix, n));
  return Corpus(config, std::move(mix), std::move(contents));
}

std::pair<CorpusView, CorpusView> split_holdout(const Corpus& corpus, double fraction, std::uint64_t seed) {
  const std::size_t n = corpus.num_contents();
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("holdout_fraction: must lie in (0, 1)");
  const auto held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  if (held < 1 || held >= n)
    throw ConfigError("holdout_fraction: split of " + std::to_string(n) + " contents leaves an empty side");

  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng = make_rng(seed, "holdout");
  std::shuffle(ids.begin(), ids.end(), rng);

  std::vector<std::size_t> holdout(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> train(ids.begin() + static_cast<std::ptrdiff_t>(held), ids.end());
  std::sort(holdout.begin(), holdout.end());
  std::sort(train.begin(), train.end());
  return {CorpusView(corpus, std::move(train)), CorpusView(corpus, std::move(holdout))};
}

double draw_jitter_gain(double sigma, Rng& rng) {
  if (sigma < 0.0) throw ConfigError("jitter sigma must be >= 0");
  if (sigma == 0.0) return 1.0;
  std::uniform_real_distribution<double> gain(std::max(0.0, 1.0 - sigma), 1.0 + sigma);
  return gain(rng);
}

Eigen::VectorXd augment_jitter(const Eigen::Ref<const Eigen::VectorXd>& video_features, double sigma, Rng& rng) {
  return draw_jitter_gain(sigma, rng) * video_features;
}

}  // namespace avlab
