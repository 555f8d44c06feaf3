#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avlab/rng.hpp"

namespace avlab {

/// Row-major so that a snippet's feature vector is contiguous.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct CorpusConfig {
  std::size_t num_contents = 200;
  // Inclusive range for the per-content snippet count.
  std::size_t min_snippets = 120;
  std::size_t max_snippets = 136;
  std::size_t sem_dim = 16;
  std::size_t art_dim = 8;
  std::size_t video_dim = 32;
  std::size_t audio_dim = 32;
  double artifact_strength = 1.0;
  double temporal_rho = 0.9;
  // Per-snippet latent shared by both modalities but independent across
  // snippets and absent from the labels (low-level synchrony). 0 disables it.
  std::size_t sync_dim = 0;
  double sync_strength = 0.0;
  // Standard deviation of the semantic latent as it enters the observations.
  double semantic_scale = 1.0;
  double noise_scale = 0.5;
  std::size_t num_classes = 8;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the first offending field.
  void validate() const;

  /// Low-diversity corpus: stronger artifacts, weaker semantic variation.
  static CorpusConfig tv_preset();
};

/// Fixed maps from latents to observations, shared by every content.
/// The two artifact maps are leading rows of one signature matrix.
/// The sync maps have zero columns when sync_dim is 0.
struct MixingMatrices {
  Eigen::MatrixXd video_semantic;  // video_dim x sem_dim
  Eigen::MatrixXd video_artifact;  // video_dim x art_dim
  Eigen::MatrixXd audio_semantic;  // audio_dim x sem_dim
  Eigen::MatrixXd audio_artifact;  // audio_dim x art_dim
  Eigen::MatrixXd video_sync;      // video_dim x sync_dim
  Eigen::MatrixXd audio_sync;      // audio_dim x sync_dim
};

/// One long-form content. Row m of every matrix is snippet m, in temporal order.
struct Content {
  std::size_t id = 0;
  FeatureMatrix video;
  FeatureMatrix audio;
  FeatureMatrix semantic;
  Eigen::VectorXd artifact;
  std::vector<int> labels;

  std::size_t size() const { return static_cast<std::size_t>(video.rows()); }
};

struct SnippetRef {
  std::size_t content_id = 0;
  std::size_t snippet_index = 0;

  friend bool operator==(const SnippetRef&, const SnippetRef&) = default;
};

/// Borrowed view of a single snippet inside a corpus.
struct Snippet {
  std::size_t content_id;
  std::size_t snippet_index;
  std::span<const double> video_features;
  std::span<const double> audio_features;
  int class_label;
};

class Corpus {
public:
  Corpus() = default;
  Corpus(CorpusConfig config, MixingMatrices mixing, std::vector<Content> contents);

  const CorpusConfig& config() const { return config_; }
  const MixingMatrices& mixing() const { return mixing_; }
  const std::vector<Content>& contents() const { return contents_; }
  const Content& content(std::size_t id) const { return contents_.at(id); }
  std::size_t num_contents() const { return contents_.size(); }
  std::size_t num_snippets() const;
  Snippet snippet(SnippetRef ref) const;

  friend bool operator==(const Corpus& a, const Corpus& b);

private:
  CorpusConfig config_;
  MixingMatrices mixing_;
  std::vector<Content> contents_;
};

/// Non-owning subset of a corpus's contents. Must not outlive the corpus.
class CorpusView {
public:
  CorpusView() = default;
  explicit CorpusView(const Corpus& corpus);
  CorpusView(const Corpus& corpus, std::vector<std::size_t> content_ids);

  const Corpus& corpus() const { return *corpus_; }
  const std::vector<std::size_t>& content_ids() const { return ids_; }
  std::size_t num_contents() const { return ids_.size(); }
  std::size_t num_snippets() const;
  /// i-th content of the view (not the i-th content of the corpus).
  const Content& content(std::size_t i) const { return corpus_->content(ids_.at(i)); }
  bool empty() const { return ids_.empty(); }

private:
  const Corpus* corpus_ = nullptr;
  std::vector<std::size_t> ids_;
};

Corpus generate_corpus(const CorpusConfig& config);

/// Content-granular split: every content lands wholly on one side.
/// The holdout side receives round(fraction * N) contents.
std::pair<CorpusView, CorpusView> split_holdout(const Corpus& corpus, double fraction, std::uint64_t seed);

/// Gain drawn uniformly from [max(0, 1 - sigma), 1 + sigma].
double draw_jitter_gain(double sigma, Rng& rng);

/// Scales the whole vector by one freshly drawn jitter gain.
Eigen::VectorXd augment_jitter(const Eigen::Ref<const Eigen::VectorXd>& video_features, double sigma, Rng& rng);

}  // namespace avlab
