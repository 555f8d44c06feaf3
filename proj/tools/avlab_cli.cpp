// Command-line runner: generate, pretrain, evaluate, sweep.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "avlab/error.hpp"
#include "avlab/experiment.hpp"
#include "avlab/serialize.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr const char* kOutputRootEnv = "AVLAB_OUTPUT_ROOT";

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> k;
  std::optional<std::string> w;
  std::optional<double> sigma;
  std::optional<std::string> variant;
  std::optional<double> tau;
  std::optional<std::string> run_id;
  std::vector<std::string> settings;
  std::string corpus_path;
  std::string checkpoint_path;
};

void add_common(CLI::App& cmd, Overrides& o) {
  cmd.add_option("--config", o.config_path, "key = value config file");
  cmd.add_option("--seed", o.seed, "run seed (init, sampling, jitter, pools)");
  cmd.add_option("--out", o.out, "output root directory");
  cmd.add_option("--k", o.k, "snippets per content in a minibatch");
  cmd.add_option("--w", o.w, "sampling window in snippets, or full");
  cmd.add_option("--sigma", o.sigma, "video gain jitter");
  cmd.add_option("--variant", o.variant, "unnorm or norm")->check(CLI::IsMember({"unnorm", "norm"}));
  cmd.add_option("--tau", o.tau, "temperature for the norm variant");
  cmd.add_option("--run-id", o.run_id, "run directory name under the output root");
  cmd.add_option("--set", o.settings, "extra key=value override (repeatable)");
}

avlab::ExperimentConfig resolve(const Overrides& o) {
  avlab::ExperimentConfig config = o.config_path.empty() ? avlab::ExperimentConfig{} : avlab::load_config(o.config_path);
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) config.output_dir = root;
  for (const std::string& s : o.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw avlab::ConfigError("--set: expected key=value, got '" + s + "'");
    avlab::apply_setting(config, s.substr(0, eq), s.substr(eq + 1));
  }
  if (o.seed) avlab::apply_setting(config, "seed", std::to_string(*o.seed));
  if (o.out) avlab::apply_setting(config, "output_dir", *o.out);
  if (o.k) avlab::apply_setting(config, "train.k", std::to_string(*o.k));
  if (o.w) avlab::apply_setting(config, "train.w", *o.w);
  if (o.sigma) config.train.jitter_sigma = *o.sigma;
  if (o.variant) avlab::apply_setting(config, "train.variant", *o.variant);
  if (o.tau) config.train.variant.tau = *o.tau;
  if (o.run_id) avlab::apply_setting(config, "run_id", *o.run_id);
  return config;
}

avlab::Corpus load_or_fail(const Overrides& o, const avlab::ExperimentConfig& config) {
  const std::filesystem::path path = o.corpus_path.empty() ? avlab::corpus_path(config) : std::filesystem::path(o.corpus_path);
  return avlab::load_corpus(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical-sampling contrastive pretraining lab"};
  app.require_subcommand(1);
  Overrides o;

  auto* generate = app.add_subcommand("generate", "generate and save the synthetic corpus");
  auto* pretrain = app.add_subcommand("pretrain", "train the two-tower encoder");
  auto* evaluate = app.add_subcommand("evaluate", "discrepancy measures and linear probes");
  auto* sweep = app.add_subcommand("sweep", "generate once, then pretrain and evaluate every grid point");
  for (auto* cmd : {generate, pretrain, evaluate, sweep}) add_common(*cmd, o);
  for (auto* cmd : {pretrain, evaluate}) cmd->add_option("--corpus", o.corpus_path, "corpus file (default <out>/corpus.bin)");
  evaluate->add_option("--checkpoint", o.checkpoint_path, "checkpoint (default <out>/<run_id>/checkpoint.bin)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const avlab::ExperimentConfig config = resolve(o);
    config.validate();
    if (generate->parsed()) {
      avlab::cmd_generate(config, std::cout);
    } else if (pretrain->parsed()) {
      const avlab::Corpus corpus = load_or_fail(o, config);
      avlab::cmd_pretrain(config, corpus, std::cout);
    } else if (evaluate->parsed()) {
      const avlab::Corpus corpus = load_or_fail(o, config);
      const std::filesystem::path ckpt =
          o.checkpoint_path.empty() ? config.run_dir() / "checkpoint.bin" : std::filesystem::path(o.checkpoint_path);
      avlab::cmd_evaluate(config, avlab::load_params(ckpt), corpus, std::cout);
    } else if (sweep->parsed()) {
      avlab::cmd_sweep(config, std::cout);
    }
  } catch (const avlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const avlab::SamplingError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
