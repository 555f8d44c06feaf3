#include "avlab/sampler.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "avlab/error.hpp"

namespace avlab {
namespace {

// First `count` entries of `pool` become a uniform sample without replacement.
template <class T>
void partial_shuffle(std::vector<T>& pool, std::size_t count, Rng& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
}

}  // namespace

std::string Window::to_string() const { return span_ ? std::to_string(*span_) : "full"; }

Window Window::parse(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "full") return Window::full();
  std::size_t pos = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("window: expected a positive integer or 'full', got '" + text + "'");
  }
  if (pos != text.size() || value < 1)
    throw ConfigError("window: expected a positive integer or 'full', got '" + text + "'");
  return Window::span(static_cast<std::size_t>(value));
}

void SamplingSpec::validate() const {
  if (group_size < 1) throw ConfigError("sampling.k: must be >= 1");
  if (batch_size < 1) throw ConfigError("sampling.batch_size: must be >= 1");
  if (batch_size % group_size != 0)
    throw ConfigError("sampling.batch_size: B=" + std::to_string(batch_size) + " is not divisible by k=" +
                      std::to_string(group_size));
  if (!window.is_full() && group_size > window.value())
    throw ConfigError("sampling.w: k=" + std::to_string(group_size) + " exceeds w=" + window.to_string());
}

void check_compatible(const CorpusView& view, const SamplingSpec& spec) {
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw SamplingError(e.what());
  }
  if (spec.num_groups() > view.num_contents())
    throw SamplingError("B/k=" + std::to_string(spec.num_groups()) + " exceeds N=" +
                        std::to_string(view.num_contents()) + " available contents");
  for (std::size_t i = 0; i < view.num_contents(); ++i) {
    const Content& c = view.content(i);
    if (spec.group_size > c.size())
      throw SamplingError("k=" + std::to_string(spec.group_size) + " exceeds M_n=" + std::to_string(c.size()) +
                          " for content " + std::to_string(c.id));
    if (!spec.window.is_full() && spec.window.value() > c.size())
      throw SamplingError("w=" + spec.window.to_string() + " exceeds M_n=" + std::to_string(c.size()) +
                          " for content " + std::to_string(c.id));
  }
}

Minibatch draw_minibatch(const CorpusView& view, const SamplingSpec& spec, Rng& rng) {
  check_compatible(view, spec);
  const std::size_t k = spec.group_size;
  const std::size_t groups = spec.num_groups();

  std::vector<std::size_t> chosen(view.num_contents());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  partial_shuffle(chosen, groups, rng);

  Minibatch batch;
  batch.group_size = k;
  batch.entries.reserve(spec.batch_size);
  std::vector<std::size_t> offsets;
  for (std::size_t g = 0; g < groups; ++g) {
    const Content& content = view.content(chosen[g]);
    const std::size_t length = content.size();
    const std::size_t w = spec.window.resolve(length);
    std::uniform_int_distribution<std::size_t> start_dist(0, length - w);
    const std::size_t start = start_dist(rng);

    offsets.resize(w);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    partial_shuffle(offsets, k, rng);
    std::sort(offsets.begin(), offsets.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t j = 0; j < k; ++j) batch.entries.push_back({content.id, start + offsets[j]});
  }
  return batch;
}

Sampler::Sampler(const CorpusView& view, SamplingSpec spec)
    : view_(view), spec_(spec), rng_(derive_seed(spec.seed, "sampler")) {
  check_compatible(view_, spec_);
}

std::size_t negative_pair_count(std::size_t position, std::size_t batch_size) {
  if (position >= batch_size) throw UsageError("minibatch position out of range");
  return 2 * (batch_size - 1);
}

std::size_t same_content_negative_count(std::size_t group_size) {
  if (group_size < 1) throw UsageError("group size must be >= 1");
  return 2 * (group_size - 1);
}

}  // namespace avlab
