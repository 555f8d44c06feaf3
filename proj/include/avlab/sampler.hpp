#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avlab/corpus.hpp"
#include "avlab/rng.hpp"

namespace avlab {

/// Temporal window for a group: a span in snippets, or the whole content.
class Window {
public:
  static Window full() { return Window(); }
  static Window span(std::size_t w) { return Window(w); }

  bool is_full() const { return !span_.has_value(); }
  std::size_t value() const { return *span_; }
  /// Effective span for a content with `length` snippets.
  std::size_t resolve(std::size_t length) const { return span_ ? *span_ : length; }

  /// "full" or the decimal span.
  std::string to_string() const;
  /// Accepts "full" (any case) or a positive integer; throws ConfigError otherwise.
  static Window parse(const std::string& text);

  friend bool operator==(const Window&, const Window&) = default;

private:
  Window() = default;
  explicit Window(std::size_t w) : span_(w) {}
  std::optional<std::size_t> span_;
};

struct SamplingSpec {
  std::size_t batch_size = 64;
  std::size_t group_size = 1;
  Window window = Window::full();
  std::uint64_t seed = 0;

  std::size_t num_groups() const { return batch_size / group_size; }
  /// Checks the spec on its own (B % k, k >= 1, k <= w). Throws ConfigError.
  void validate() const;
};

/// B entries; entries [g*k, (g+1)*k) form group g and share one content.
struct Minibatch {
  std::vector<SnippetRef> entries;
  std::size_t group_size = 1;

  std::size_t size() const { return entries.size(); }
  std::size_t num_groups() const { return entries.size() / group_size; }
};

/// Throws SamplingError naming the violated bound if the view cannot serve the spec.
void check_compatible(const CorpusView& view, const SamplingSpec& spec);

/// One hierarchical draw: B/k distinct contents, k distinct snippets from each,
/// all within a window of span w placed uniformly inside the content.
Minibatch draw_minibatch(const CorpusView& view, const SamplingSpec& spec, Rng& rng);

/// Stateful stream of independent minibatches; owns its RNG.
class Sampler {
public:
  Sampler(const CorpusView& view, SamplingSpec spec);

  Minibatch next() { return draw_minibatch(view_, spec_, rng_); }
  const SamplingSpec& spec() const { return spec_; }

private:
  CorpusView view_;
  SamplingSpec spec_;
  Rng rng_;
};

/// |N_i| = 2(B - 1): every other row's audio against i's video and vice versa.
std::size_t negative_pair_count(std::size_t position, std::size_t batch_size);

/// Of those, 2(k - 1) come from i's own content under a (k, w) policy.
std::size_t same_content_negative_count(std::size_t group_size);

}  // namespace avlab
