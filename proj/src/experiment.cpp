#include "avlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "avlab/error.hpp"
#include "avlab/serialize.hpp"

namespace avlab {
namespace {

using Json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

Window parse_window(const std::string& key, const std::string& text) {
  try {
    return Window::parse(text);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

LossVariant::Kind parse_kind(const std::string& key, const std::string& text) {
  if (text == "unnorm") return LossVariant::Kind::Unnormalized;
  if (text == "norm") return LossVariant::Kind::NormalizedTau;
  throw ConfigError(key + ": expected unnorm or norm, got '" + text + "'");
}

GridPoint parse_point(const std::string& key, const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) throw ConfigError(key + ": expected k/w, got '" + text + "'");
  GridPoint p;
  p.k = parse_u64(key, trim(text.substr(0, slash)));
  const std::string w = trim(text.substr(slash + 1));
  p.w = w == "k" ? Window::span(p.k) : parse_window(key, w);
  return p;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <class T>
Field size_field(std::string key, T ExperimentConfig::*group, std::size_t T::*member) {
  return {key, [=](const ExperimentConfig& c) { return std::to_string(c.*group.*member); },
          [=](ExperimentConfig& c, const std::string& v) { c.*group.*member = parse_u64(key, v); }};
}

template <class T>
Field double_field(std::string key, T ExperimentConfig::*group, double T::*member) {
  return {key, [=](const ExperimentConfig& c) { return format_double(c.*group.*member); },
          [=](ExperimentConfig& c, const std::string& v) { c.*group.*member = parse_double(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    using C = ExperimentConfig;
    std::vector<Field> f;
    f.push_back({"run_id", [](const C& c) { return c.run_id; }, [](C& c, const std::string& v) {
                   if (v.empty() || v.find_first_of("/\\") != std::string::npos)
                     throw ConfigError("run_id: must be non-empty without path separators");
                   c.run_id = v;
                 }});
    f.push_back({"seed", [](const C& c) { return std::to_string(c.seed); },
                 [](C& c, const std::string& v) { c.seed = parse_u64("seed", v); }});
    f.push_back({"output_dir", [](const C& c) { return c.output_dir.string(); },
                 [](C& c, const std::string& v) { c.output_dir = v; }});
    f.push_back({"checkpoint_every_epoch", [](const C& c) { return std::string(c.checkpoint_every_epoch ? "true" : "false"); },
                 [](C& c, const std::string& v) { c.checkpoint_every_epoch = parse_bool("checkpoint_every_epoch", v); }});

    f.push_back(size_field("corpus.num_contents", &C::corpus, &CorpusConfig::num_contents));
    f.push_back(size_field("corpus.min_snippets", &C::corpus, &CorpusConfig::min_snippets));
    f.push_back(size_field("corpus.max_snippets", &C::corpus, &CorpusConfig::max_snippets));
    f.push_back(size_field("corpus.sem_dim", &C::corpus, &CorpusConfig::sem_dim));
    f.push_back(size_field("corpus.art_dim", &C::corpus, &CorpusConfig::art_dim));
    f.push_back(size_field("corpus.video_dim", &C::corpus, &CorpusConfig::video_dim));
    f.push_back(size_field("corpus.audio_dim", &C::corpus, &CorpusConfig::audio_dim));
    f.push_back(double_field("corpus.artifact_strength", &C::corpus, &CorpusConfig::artifact_strength));
    f.push_back(double_field("corpus.temporal_rho", &C::corpus, &CorpusConfig::temporal_rho));
    f.push_back(size_field("corpus.sync_dim", &C::corpus, &CorpusConfig::sync_dim));
    f.push_back(double_field("corpus.sync_strength", &C::corpus, &CorpusConfig::sync_strength));
    f.push_back(double_field("corpus.semantic_scale", &C::corpus, &CorpusConfig::semantic_scale));
    f.push_back(double_field("corpus.noise_scale", &C::corpus, &CorpusConfig::noise_scale));
    f.push_back(size_field("corpus.num_classes", &C::corpus, &CorpusConfig::num_classes));
    f.push_back(double_field("corpus.holdout_fraction", &C::corpus, &CorpusConfig::holdout_fraction));
    f.push_back({"corpus.seed", [](const C& c) { return std::to_string(c.corpus.seed); },
                 [](C& c, const std::string& v) { c.corpus.seed = parse_u64("corpus.seed", v); }});

    f.push_back(size_field("train.epochs", &C::train, &TrainConfig::epochs));
    f.push_back(size_field("train.steps_per_epoch", &C::train, &TrainConfig::steps_per_epoch));
    f.push_back({"train.batch_size", [](const C& c) { return std::to_string(c.train.sampling.batch_size); },
                 [](C& c, const std::string& v) { c.train.sampling.batch_size = parse_u64("train.batch_size", v); }});
    f.push_back({"train.k", [](const C& c) { return std::to_string(c.train.sampling.group_size); },
                 [](C& c, const std::string& v) { c.train.sampling.group_size = parse_u64("train.k", v); }});
    f.push_back({"train.w", [](const C& c) { return c.train.sampling.window.to_string(); },
                 [](C& c, const std::string& v) { c.train.sampling.window = parse_window("train.w", v); }});
    f.push_back(double_field("train.sigma", &C::train, &TrainConfig::jitter_sigma));
    f.push_back({"train.variant", [](const C& c) { return c.train.variant.name(); },
                 [](C& c, const std::string& v) { c.train.variant.kind = parse_kind("train.variant", v); }});
    f.push_back({"train.tau", [](const C& c) { return format_double(c.train.variant.tau); },
                 [](C& c, const std::string& v) { c.train.variant.tau = parse_double("train.tau", v); }});
    f.push_back(double_field("train.lr_init", &C::train, &TrainConfig::lr_init));
    f.push_back(double_field("train.lr_peak", &C::train, &TrainConfig::lr_peak));
    f.push_back({"train.beta1", [](const C& c) { return format_double(c.train.adam.beta1); },
                 [](C& c, const std::string& v) { c.train.adam.beta1 = parse_double("train.beta1", v); }});
    f.push_back({"train.beta2", [](const C& c) { return format_double(c.train.adam.beta2); },
                 [](C& c, const std::string& v) { c.train.adam.beta2 = parse_double("train.beta2", v); }});
    f.push_back({"train.adam_eps", [](const C& c) { return format_double(c.train.adam.eps); },
                 [](C& c, const std::string& v) { c.train.adam.eps = parse_double("train.adam_eps", v); }});
    f.push_back(size_field("train.hidden", &C::train, &TrainConfig::hidden));
    f.push_back(size_field("train.tower_out", &C::train, &TrainConfig::tower_out));
    f.push_back(size_field("train.embed_dim", &C::train, &TrainConfig::embed_dim));

    f.push_back({"metrics.bins", [](const C& c) { return std::to_string(c.metrics.discrepancy.bins); },
                 [](C& c, const std::string& v) { c.metrics.discrepancy.bins = parse_u64("metrics.bins", v); }});
    f.push_back({"metrics.epsilon", [](const C& c) { return format_double(c.metrics.discrepancy.epsilon); },
                 [](C& c, const std::string& v) { c.metrics.discrepancy.epsilon = parse_double("metrics.epsilon", v); }});
    f.push_back(size_field("metrics.pair_budget", &C::metrics, &MetricsConfig::pair_budget));
    f.push_back({"metrics.probe_iterations", [](const C& c) { return std::to_string(c.metrics.probe.iterations); },
                 [](C& c, const std::string& v) { c.metrics.probe.iterations = parse_u64("metrics.probe_iterations", v); }});
    f.push_back({"metrics.probe_l2", [](const C& c) { return format_double(c.metrics.probe.l2); },
                 [](C& c, const std::string& v) { c.metrics.probe.l2 = parse_double("metrics.probe_l2", v); }});
    f.push_back({"metrics.probe_whiten", [](const C& c) { return std::string(c.metrics.probe.whiten ? "true" : "false"); },
                 [](C& c, const std::string& v) { c.metrics.probe.whiten = parse_bool("metrics.probe_whiten", v); }});

    f.push_back({"sweep.k", [](const C& c) { return join(c.sweep.k, [](std::size_t k) { return std::to_string(k); }); },
                 [](C& c, const std::string& v) {
                   c.sweep.k.clear();
                   for (const auto& item : split_list(v)) c.sweep.k.push_back(parse_u64("sweep.k", item));
                 }});
    f.push_back({"sweep.w", [](const C& c) { return join(c.sweep.w, [](const std::string& w) { return w; }); },
                 [](C& c, const std::string& v) {
                   c.sweep.w.clear();
                   for (const auto& item : split_list(v))
                     c.sweep.w.push_back(item == "k" ? item : parse_window("sweep.w", item).to_string());
                 }});
    f.push_back({"sweep.points",
                 [](const C& c) {
                   return join(c.sweep.points, [](const GridPoint& p) { return std::to_string(p.k) + "/" + p.w.to_string(); });
                 },
                 [](C& c, const std::string& v) {
                   c.sweep.points.clear();
                   for (const auto& item : split_list(v)) c.sweep.points.push_back(parse_point("sweep.points", item));
                 }});
    f.push_back({"sweep.sigma", [](const C& c) { return join(c.sweep.sigma, format_double); },
                 [](C& c, const std::string& v) {
                   c.sweep.sigma.clear();
                   for (const auto& item : split_list(v)) c.sweep.sigma.push_back(parse_double("sweep.sigma", item));
                 }});
    f.push_back({"sweep.variant", [](const C& c) { return join(c.sweep.variant, [](const std::string& s) { return s; }); },
                 [](C& c, const std::string& v) {
                   c.sweep.variant.clear();
                   for (const auto& item : split_list(v)) {
                     const auto colon = item.find(':');
                     parse_kind("sweep.variant", item.substr(0, colon));
                     if (colon != std::string::npos) parse_double("sweep.variant", item.substr(colon + 1));
                     c.sweep.variant.push_back(item);
                   }
                 }});
    f.push_back({"sweep.seeds", [](const C& c) { return join(c.sweep.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
                 [](C& c, const std::string& v) {
                   c.sweep.seeds.clear();
                   for (const auto& item : split_list(v)) c.sweep.seeds.push_back(parse_u64("sweep.seeds", item));
                 }});
    return f;
  }();
  return table;
}

std::string canonical_text(const ExperimentConfig& config, bool for_hash) {
  std::string out;
  for (const Field& f : fields()) {
    if (for_hash && f.key == "output_dir") continue;
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t training_contents(const CorpusConfig& c) {
  const auto held = static_cast<std::size_t>(std::llround(c.holdout_fraction * static_cast<double>(c.num_contents)));
  return c.num_contents - held;
}

std::string point_suffix(const ExperimentConfig& c) {
  std::string s = "k" + std::to_string(c.train.sampling.group_size) + "_w" + c.train.sampling.window.to_string() + "_s" +
                  format_double(c.train.jitter_sigma) + "_" + c.train.variant.name();
  if (c.train.variant.is_normalized()) s += format_double(c.train.variant.tau);
  return s + "_seed" + std::to_string(c.seed);
}

[[noreturn]] void rethrow_with_prefix(const std::string& prefix) {
  try {
    throw;
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.step(), prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const SamplingError& e) {
    throw SamplingError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  corpus.validate();
  if (run_id.empty()) throw ConfigError("run_id: must be non-empty");
  TrainConfig t = train;
  if (t.steps_per_epoch == 0) t.steps_per_epoch = 1;
  t.validate();
  if (metrics.discrepancy.bins < 2) throw ConfigError("metrics.bins: must be >= 2");
  if (!(metrics.discrepancy.epsilon > 0.0)) throw ConfigError("metrics.epsilon: must be > 0");
  if (metrics.pair_budget < 1) throw ConfigError("metrics.pair_budget: must be >= 1");
  if (metrics.probe.iterations < 1) throw ConfigError("metrics.probe_iterations: must be >= 1");
  if (metrics.probe.l2 < 0.0) throw ConfigError("metrics.probe_l2: must be >= 0");
}

TrainConfig ExperimentConfig::effective_train(const CorpusView& train_view) const {
  TrainConfig t = train;
  t.seed = seed;
  t.sampling.seed = seed;
  if (t.steps_per_epoch == 0) t.steps_per_epoch = std::max<std::size_t>(1, train_view.num_snippets() / t.sampling.batch_size);
  return t;
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key == "corpus.preset") {
    if (value == "tv") {
      const CorpusConfig tv = CorpusConfig::tv_preset();
      config.corpus.artifact_strength = tv.artifact_strength;
      config.corpus.semantic_scale = tv.semantic_scale;
      return;
    }
    if (value == "default") {
      const CorpusConfig d;
      config.corpus.artifact_strength = d.artifact_strength;
      config.corpus.semantic_scale = d.semantic_scale;
      return;
    }
    throw ConfigError("corpus.preset: expected default or tv, got '" + value + "'");
  }
  for (const Field& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ConfigError(key + ": unknown key");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value, got '" + line + "'");
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  return parse_config(in);
}

std::string to_text(const ExperimentConfig& config) { return canonical_text(config, false); }

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical_text(config, true));
  return out.str();
}

std::string RunReport::to_json() const {
  Json j;
  j["run_id"] = run_id;
  j["k"] = k;
  j["w"] = w;
  j["sigma"] = sigma;
  j["variant"] = variant.name();
  j["tau"] = variant.is_normalized() ? Json(variant.tau) : Json(nullptr);
  j["kl_within_vs_pos"] = discrepancy.kl_within_vs_pos;
  j["kl_cross_vs_pos"] = discrepancy.kl_cross_vs_pos;
  j["kl_within_vs_cross"] = discrepancy.kl_within_vs_cross;
  j["gap"] = discrepancy.gap;
  j["probe_video_acc"] = probe_video_acc;
  j["probe_audio_acc"] = probe_audio_acc;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j.dump(2) + "\n";
}

RunReport RunReport::from_json(const std::string& text) {
  try {
    const Json j = Json::parse(text);
    RunReport r;
    r.run_id = j.at("run_id").get<std::string>();
    r.k = j.at("k").get<std::size_t>();
    r.w = j.at("w").get<std::string>();
    r.sigma = j.at("sigma").get<double>();
    const auto kind = j.at("variant").get<std::string>();
    r.variant = kind == "norm" ? LossVariant::normalized(j.at("tau").get<double>()) : LossVariant::unnormalized();
    r.discrepancy.kl_within_vs_pos = j.at("kl_within_vs_pos").get<double>();
    r.discrepancy.kl_cross_vs_pos = j.at("kl_cross_vs_pos").get<double>();
    r.discrepancy.kl_within_vs_cross = j.at("kl_within_vs_cross").get<double>();
    r.discrepancy.gap = j.at("gap").get<double>();
    r.probe_video_acc = j.at("probe_video_acc").get<double>();
    r.probe_audio_acc = j.at("probe_audio_acc").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

std::pair<CorpusView, CorpusView> experiment_split(const Corpus& corpus) {
  return split_holdout(corpus, corpus.config().holdout_fraction, corpus.config().seed);
}

std::filesystem::path corpus_path(const ExperimentConfig& config) { return config.output_dir / "corpus.bin"; }

void write_if_changed(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    const std::string existing{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (existing == content) return;
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) throw FormatError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Corpus cmd_generate(const ExperimentConfig& config, std::ostream& log) {
  config.corpus.validate();
  Corpus corpus = generate_corpus(config.corpus);
  std::ostringstream bytes;
  write_corpus(bytes, corpus);
  const auto path = corpus_path(config);
  write_if_changed(path, bytes.str());
  write_if_changed(config.output_dir / "corpus.cfg", to_text(config));
  log << "contents " << corpus.num_contents() << " snippets " << corpus.num_snippets() << " -> " << path.string()
      << "\n";
  return corpus;
}

void write_train_log_csv(std::ostream& out, const TrainLog& log, const std::string& run_id, std::uint64_t seed,
                         const std::string& hash) {
  out << "run_id,step,epoch,lr,loss_total,loss_per_anchor,seed,config_hash\n";
  for (const StepRecord& r : log.steps)
    out << run_id << ',' << r.step << ',' << r.epoch << ',' << format_double(r.lr) << ',' << format_double(r.loss_total)
        << ',' << format_double(r.loss_per_anchor) << ',' << seed << ',' << hash << '\n';
}

TrainResult cmd_pretrain(const ExperimentConfig& config, const Corpus& corpus, std::ostream& log) {
  config.validate();
  const auto [train_view, holdout] = experiment_split(corpus);
  const TrainConfig train_cfg = config.effective_train(train_view);
  const auto dir = config.run_dir();
  std::filesystem::create_directories(dir);
  const std::string hash = config_hash(config);

  EpochCallback on_epoch;
  if (config.checkpoint_every_epoch) {
    on_epoch = [&](std::size_t epoch, const TowerParams& params) {
      save_params(dir / ("checkpoint_epoch" + std::to_string(epoch + 1) + ".bin"), params);
    };
  }
  TrainResult result = train(train_view, train_cfg, on_epoch);

  save_params(dir / "checkpoint.bin", result.params);
  std::ostringstream csv;
  write_train_log_csv(csv, result.log, config.run_id, config.seed, hash);
  write_if_changed(dir / "train_log.csv", csv.str());
  write_if_changed(dir / "config.cfg", to_text(config));
  for (std::size_t e = 0; e < train_cfg.epochs; ++e)
    log << "epoch " << e + 1 << " loss_per_anchor " << format_double(result.log.mean_epoch_loss(e)) << "\n";
  log << "checkpoint -> " << (dir / "checkpoint.bin").string() << "\n";
  return result;
}

RunReport cmd_evaluate(const ExperimentConfig& config, const TowerParams& params, const Corpus& corpus,
                       std::ostream& log) {
  config.validate();
  const auto& d = params.dims();
  if (d.video_in != corpus.config().video_dim || d.audio_in != corpus.config().audio_dim)
    throw FormatError("checkpoint input widths (" + std::to_string(d.video_in) + ", " + std::to_string(d.audio_in) +
                      ") do not match the corpus (" + std::to_string(corpus.config().video_dim) + ", " +
                      std::to_string(corpus.config().audio_dim) + ")");
  const LossVariant& variant = config.train.variant;
  variant.validate();
  const auto [train_view, holdout] = experiment_split(corpus);

  const SimilarityPools pools = collect_similarities(params, holdout, variant, config.metrics.pair_budget, config.seed);
  RunReport report;
  report.run_id = config.run_id;
  report.k = config.train.sampling.group_size;
  report.w = config.train.sampling.window.to_string();
  report.sigma = config.train.jitter_sigma;
  report.variant = variant;
  report.discrepancy = discrepancy(pools, config.metrics.discrepancy);
  ProbeConfig probe = config.metrics.probe;
  probe.modality = Modality::Video;
  report.probe_video_acc = linear_probe(params, train_view, holdout, probe);
  probe.modality = Modality::Audio;
  report.probe_audio_acc = linear_probe(params, train_view, holdout, probe);
  report.seed = config.seed;
  report.config_hash = config_hash(config);

  const auto path = config.run_dir() / "report.json";
  write_if_changed(path, report.to_json());
  log << "gap " << format_double(report.discrepancy.gap) << " kl_within_vs_cross "
      << format_double(report.discrepancy.kl_within_vs_cross) << " probe_video_acc "
      << format_double(report.probe_video_acc) << " -> " << path.string() << "\n";
  return report;
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config) {
  const SweepConfig& sw = config.sweep;
  if (sw.empty()) throw ConfigError("sweep: no grid points (set sweep.k and sweep.w, or sweep.points)");
  config.validate();

  std::vector<GridPoint> points = sw.points;
  if (points.empty()) {
    if (sw.w.empty()) throw ConfigError("sweep.w: must be non-empty when sweep.k is set");
    for (std::size_t k : sw.k)
      for (const std::string& w : sw.w) points.push_back({k, w == "k" ? Window::span(k) : Window::parse(w)});
  }
  const std::vector<double> sigmas = sw.sigma.empty() ? std::vector<double>{config.train.jitter_sigma} : sw.sigma;
  std::vector<LossVariant> variants;
  if (sw.variant.empty()) variants.push_back(config.train.variant);
  for (const std::string& token : sw.variant) {
    const auto colon = token.find(':');
    const double tau = colon == std::string::npos ? config.train.variant.tau : std::stod(token.substr(colon + 1));
    LossVariant v;
    v.kind = parse_kind("sweep.variant", token.substr(0, colon));
    v.tau = tau;
    variants.push_back(v);
  }
  const std::vector<std::uint64_t> seeds = sw.seeds.empty() ? std::vector<std::uint64_t>{config.seed} : sw.seeds;

  const std::size_t n_train = training_contents(config.corpus);
  const std::size_t min_len = config.corpus.min_snippets;
  std::vector<ExperimentConfig> out;
  for (const GridPoint& p : points) {
    const std::string name = "sweep point k=" + std::to_string(p.k) + " w=" + p.w.to_string() + ": ";
    SamplingSpec spec = config.train.sampling;
    spec.group_size = p.k;
    spec.window = p.w;
    try {
      spec.validate();
    } catch (const ConfigError& e) {
      throw ConfigError(name + e.what());
    }
    if (spec.num_groups() > n_train)
      throw ConfigError(name + "B/k = " + std::to_string(spec.num_groups()) + " exceeds the " + std::to_string(n_train) +
                        " training contents");
    if (p.k > min_len) throw ConfigError(name + "k exceeds the shortest content (" + std::to_string(min_len) + ")");
    if (!p.w.is_full() && p.w.value() > min_len)
      throw ConfigError(name + "w exceeds the shortest content (" + std::to_string(min_len) + ")");

    for (double sigma : sigmas)
      for (const LossVariant& variant : variants) {
        try {
          variant.validate();
        } catch (const ConfigError& e) {
          throw ConfigError(name + e.what());
        }
        for (std::uint64_t seed : seeds) {
          ExperimentConfig c = config;
          c.sweep = {};
          c.train.sampling = spec;
          c.train.jitter_sigma = sigma;
          c.train.variant = variant;
          c.seed = seed;
          c.run_id = config.run_id + "_" + point_suffix(c);
          c.validate();
          out.push_back(std::move(c));
        }
      }
  }
  return out;
}

std::string sweep_csv(const std::vector<RunReport>& reports) {
  std::ostringstream out;
  out << "run_id,k,w,sigma,variant,tau,seed,kl_within_vs_pos,kl_cross_vs_pos,kl_within_vs_cross,gap,probe_video_acc,"
         "probe_audio_acc,config_hash\n";
  for (const RunReport& r : reports) {
    out << r.run_id << ',' << r.k << ',' << r.w << ',' << format_double(r.sigma) << ',' << r.variant.name() << ','
        << (r.variant.is_normalized() ? format_double(r.variant.tau) : std::string()) << ',' << r.seed << ','
        << format_double(r.discrepancy.kl_within_vs_pos) << ',' << format_double(r.discrepancy.kl_cross_vs_pos) << ','
        << format_double(r.discrepancy.kl_within_vs_cross) << ',' << format_double(r.discrepancy.gap) << ','
        << format_double(r.probe_video_acc) << ',' << format_double(r.probe_audio_acc) << ',' << r.config_hash << '\n';
  }
  return out.str();
}

std::vector<RunReport> cmd_sweep(const ExperimentConfig& config, std::ostream& log) {
  const std::vector<ExperimentConfig> runs = expand_sweep(config);
  const Corpus corpus = cmd_generate(config, log);
  {
    const auto [train_view, holdout] = experiment_split(corpus);
    for (const ExperimentConfig& run : runs) {
      try {
        check_compatible(train_view, run.train.sampling);
      } catch (const SamplingError& e) {
        throw ConfigError("sweep point " + run.run_id + ": " + e.what());
      }
    }
  }

  std::vector<RunReport> reports;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const ExperimentConfig& run = runs[i];
    const auto report_path = run.run_dir() / "report.json";
    const std::string hash = config_hash(run);
    if (std::filesystem::exists(report_path)) {
      try {
        RunReport cached = RunReport::from_json(read_file(report_path));
        if (cached.config_hash == hash) {
          log << "[" << i + 1 << "/" << runs.size() << "] " << run.run_id << " (cached)\n";
          reports.push_back(std::move(cached));
          continue;
        }
      } catch (const FormatError&) {
        // Unreadable report: rerun the point.
      }
    }
    log << "[" << i + 1 << "/" << runs.size() << "] " << run.run_id << "\n";
    try {
      const TrainResult trained = cmd_pretrain(run, corpus, log);
      reports.push_back(cmd_evaluate(run, trained.params, corpus, log));
    } catch (const Error&) {
      rethrow_with_prefix("sweep point " + run.run_id + ": ");
    }
  }
  write_if_changed(config.output_dir / "sweep.csv", sweep_csv(reports));
  log << "sweep -> " << (config.output_dir / "sweep.csv").string() << "\n";
  return reports;
}

}  // namespace avlab
