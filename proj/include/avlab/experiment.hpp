#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "avlab/corpus.hpp"
#include "avlab/metrics.hpp"
#include "avlab/trainer.hpp"

namespace avlab {

struct MetricsConfig {
  DiscrepancyConfig discrepancy;
  std::size_t pair_budget = 100000;
  ProbeConfig probe;
};

struct GridPoint {
  std::size_t k = 1;
  Window w = Window::full();
};

struct SweepConfig {
  std::vector<std::size_t> k;
  std::vector<std::string> w;  // "full", an integer, or "k" (adjacent: w = k)
  std::vector<GridPoint> points;  // explicit list; replaces the k x w product when set
  std::vector<double> sigma;
  std::vector<std::string> variant;
  std::vector<std::uint64_t> seeds;

  bool empty() const { return k.empty() && points.empty(); }
};

struct ExperimentConfig {
  CorpusConfig corpus;
  // steps_per_epoch == 0 means one pass over the training snippets per epoch.
  TrainConfig train;
  MetricsConfig metrics;
  SweepConfig sweep;
  bool checkpoint_every_epoch = false;
  std::filesystem::path output_dir = "runs";
  std::string run_id = "run";
  // Drives initialisation, sampling, jitter, pool draws. The corpus has its own seed.
  std::uint64_t seed = 0;

  void validate() const;
  /// Training config with the run seed applied and steps_per_epoch resolved.
  TrainConfig effective_train(const CorpusView& train_view) const;
  std::filesystem::path run_dir() const { return output_dir / run_id; }
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and bad
/// values raise ConfigError naming the key.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Applies one `key = value` assignment; used for files and CLI overrides alike.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Every key in a fixed order; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);
/// 16 hex digits of FNV-1a over the canonical text without sweep or output keys.
std::string config_hash(const ExperimentConfig& config);

/// The report document for one evaluated run.
struct RunReport {
  std::string run_id;
  std::size_t k = 1;
  std::string w;
  double sigma = 0.0;
  LossVariant variant;
  DiscrepancyReport discrepancy;
  double probe_video_acc = 0.0;
  double probe_audio_acc = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::string to_json() const;
  static RunReport from_json(const std::string& text);
};

/// Train/holdout split used by every command; seeded by the corpus seed so
/// pretraining and evaluation agree.
std::pair<CorpusView, CorpusView> experiment_split(const Corpus& corpus);

std::filesystem::path corpus_path(const ExperimentConfig& config);

/// Writes <out>/corpus.bin and <out>/corpus.cfg; prints counts to `log`.
Corpus cmd_generate(const ExperimentConfig& config, std::ostream& log);

/// Trains on the training split; writes checkpoint.bin and train_log.csv under the run dir.
TrainResult cmd_pretrain(const ExperimentConfig& config, const Corpus& corpus, std::ostream& log);

/// Pools, discrepancies and probes on the held-out split; writes report.json.
RunReport cmd_evaluate(const ExperimentConfig& config, const TowerParams& params, const Corpus& corpus,
                       std::ostream& log);

/// All grid points in sweep order after expanding lists. Throws ConfigError if any
/// point violates the sampling bounds for the configured corpus.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

/// Generate once, then pretrain + evaluate each grid point (reusing finished runs
/// whose report carries the same config hash); writes <out>/sweep.csv.
std::vector<RunReport> cmd_sweep(const ExperimentConfig& config, std::ostream& log);

void write_train_log_csv(std::ostream& out, const TrainLog& log, const std::string& run_id, std::uint64_t seed,
                         const std::string& hash);
std::string sweep_csv(const std::vector<RunReport>& reports);

/// Writes `content` to `path` unless the file already holds exactly that content.
void write_if_changed(const std::filesystem::path& path, const std::string& content);

}  // namespace avlab
