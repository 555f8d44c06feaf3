#include "doctest.h"

#include <algorithm>
#include <set>

#include "avlab/error.hpp"
#include "avlab/sampler.hpp"

using namespace avlab;

namespace {

Corpus make_corpus(std::size_t n, std::size_t m_min, std::size_t m_max) {
  CorpusConfig c;
  c.num_contents = n;
  c.min_snippets = m_min;
  c.max_snippets = m_max;
  c.video_dim = 2;
  c.audio_dim = 2;
  c.sem_dim = 2;
  c.art_dim = 1;
  c.holdout_fraction = 0.5;
  return generate_corpus(c);
}

SamplingSpec spec_of(std::size_t b, std::size_t k, Window w, std::uint64_t seed = 0) {
  SamplingSpec s;
  s.batch_size = b;
  s.group_size = k;
  s.window = w;
  s.seed = seed;
  return s;
}

// Checks every structural law of one minibatch; returns the number of violations.
std::size_t violations(const CorpusView& view, const SamplingSpec& spec, const Minibatch& mb) {
  std::size_t bad = 0;
  if (mb.size() != spec.batch_size) ++bad;
  std::set<std::size_t> contents;
  for (std::size_t g = 0; g < mb.num_groups(); ++g) {
    const auto first = mb.entries.begin() + static_cast<std::ptrdiff_t>(g * spec.group_size);
    const auto last = first + static_cast<std::ptrdiff_t>(spec.group_size);
    std::set<std::size_t> idx;
    for (auto it = first; it != last; ++it) {
      if (it->content_id != first->content_id) ++bad;
      if (!idx.insert(it->snippet_index).second) ++bad;
    }
    if (!contents.insert(first->content_id).second) ++bad;
    const std::size_t len = view.corpus().content(first->content_id).size();
    if (*idx.rbegin() >= len) ++bad;
    const std::size_t span = *idx.rbegin() - *idx.begin() + 1;
    if (span > spec.window.resolve(len)) ++bad;
  }
  return bad;
}

}  // namespace

TEST_CASE("window: parsing accepts full and positive integers") {
  CHECK(Window::parse("full").is_full());
  CHECK(Window::parse("FULL").is_full());
  CHECK(Window::parse("16").value() == 16);
  CHECK(Window::parse("16").to_string() == "16");
  CHECK(Window::full().to_string() == "full");
  CHECK(Window::full().resolve(37) == 37);
  CHECK(Window::span(8).resolve(37) == 8);
  CHECK_THROWS_AS(Window::parse("0"), ConfigError);
  CHECK_THROWS_AS(Window::parse("-3"), ConfigError);
  CHECK_THROWS_AS(Window::parse("8x"), ConfigError);
  CHECK_THROWS_AS(Window::parse(""), ConfigError);
}

TEST_CASE("sampler: spec validation") {
  CHECK_THROWS_AS(spec_of(64, 3, Window::full()).validate(), ConfigError);
  CHECK_THROWS_AS(spec_of(64, 16, Window::span(8)).validate(), ConfigError);
  CHECK_THROWS_AS(spec_of(64, 0, Window::full()).validate(), ConfigError);
  CHECK_NOTHROW(spec_of(64, 16, Window::span(16)).validate());
}

TEST_CASE("sampler: k=1 draws B distinct contents") {
  const Corpus corpus = make_corpus(40, 5, 9);
  const CorpusView view(corpus);
  for (auto w : {Window::full(), Window::span(1), Window::span(5)}) {
    Sampler sampler(view, spec_of(16, 1, w, 3));
    for (int t = 0; t < 200; ++t) {
      const Minibatch mb = sampler.next();
      std::set<std::size_t> ids;
      for (const auto& e : mb.entries) ids.insert(e.content_id);
      CHECK(ids.size() == 16);
    }
  }
}

TEST_CASE("sampler: k=4, w=4 groups are four consecutive indices") {
  const Corpus corpus = make_corpus(8, 100, 100);
  const CorpusView view(corpus);
  Sampler sampler(view, spec_of(8, 4, Window::span(4), 11));
  std::size_t bad = 0;
  for (int t = 0; t < 10000; ++t) {
    const Minibatch mb = sampler.next();
    for (std::size_t g = 0; g < mb.num_groups(); ++g)
      for (std::size_t j = 1; j < 4; ++j)
        if (mb.entries[g * 4 + j].snippet_index != mb.entries[g * 4].snippet_index + j) ++bad;
  }
  CHECK(bad == 0);
}

TEST_CASE("sampler: B=8, k=8, w=full is a single content") {
  const Corpus corpus = make_corpus(5, 10, 12);
  const CorpusView view(corpus);
  Sampler sampler(view, spec_of(8, 8, Window::full(), 2));
  for (int t = 0; t < 100; ++t) {
    const Minibatch mb = sampler.next();
    CHECK(mb.num_groups() == 1);
    for (const auto& e : mb.entries) CHECK(e.content_id == mb.entries[0].content_id);
  }
}

TEST_CASE("sampler: structural laws hold over many draws") {
  const Corpus corpus = make_corpus(30, 20, 40);
  const CorpusView view(corpus);
  for (const auto& spec : {spec_of(16, 1, Window::full(), 1), spec_of(16, 4, Window::full(), 2),
                           spec_of(16, 4, Window::span(6), 3), spec_of(16, 8, Window::span(8), 4),
                           spec_of(16, 16, Window::span(20), 5)}) {
    Sampler sampler(view, spec);
    std::size_t bad = 0;
    for (int t = 0; t < 2000; ++t) bad += violations(view, spec, sampler.next());
    CHECK(bad == 0);
  }
}

TEST_CASE("sampler: content choice is uniform") {
  const Corpus corpus = make_corpus(20, 6, 6);
  const CorpusView view(corpus);
  Sampler sampler(view, spec_of(4, 1, Window::full(), 7));
  std::vector<double> counts(20, 0.0);
  const int draws = 20000;
  for (int t = 0; t < draws; ++t)
    for (const auto& e : sampler.next().entries) counts[e.content_id] += 1.0;
  const double expected = draws * 4.0 / 20.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 19 degrees of freedom; 43.82 is the 0.999 quantile.
  CHECK(chi2 < 43.82);
}

TEST_CASE("sampler: positions are uniform inside a full window") {
  const Corpus corpus = make_corpus(4, 10, 10);
  const CorpusView view(corpus);
  Sampler sampler(view, spec_of(2, 1, Window::full(), 8));
  std::vector<double> counts(10, 0.0);
  const int draws = 20000;
  for (int t = 0; t < draws; ++t)
    for (const auto& e : sampler.next().entries) counts[e.snippet_index] += 1.0;
  const double expected = draws * 2.0 / 10.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 9 degrees of freedom; 27.88 is the 0.999 quantile.
  CHECK(chi2 < 27.88);
}

TEST_CASE("sampler: window start is uniform over [0, M - w]") {
  const Corpus corpus = make_corpus(2, 12, 12);
  const CorpusView view(corpus);
  Sampler sampler(view, spec_of(2, 2, Window::span(2), 9));
  std::vector<double> counts(11, 0.0);
  const int draws = 22000;
  for (int t = 0; t < draws; ++t) counts[sampler.next().entries[0].snippet_index] += 1.0;
  const double expected = draws / 11.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 10 degrees of freedom; 29.59 is the 0.999 quantile.
  CHECK(chi2 < 29.59);
}

TEST_CASE("sampler: same seed gives the same stream") {
  const Corpus corpus = make_corpus(12, 8, 10);
  const CorpusView view(corpus);
  Sampler a(view, spec_of(8, 2, Window::span(4), 5));
  Sampler b(view, spec_of(8, 2, Window::span(4), 5));
  Sampler c(view, spec_of(8, 2, Window::span(4), 6));
  bool differs = false;
  for (int t = 0; t < 50; ++t) {
    const auto x = a.next();
    CHECK(x.entries == b.next().entries);
    differs = differs || x.entries != c.next().entries;
  }
  CHECK(differs);
}

TEST_CASE("sampler: incompatible corpora are rejected with the bound") {
  const Corpus corpus = make_corpus(4, 6, 8);
  const CorpusView view(corpus);
  CHECK_THROWS_WITH_AS(check_compatible(view, spec_of(8, 1, Window::full())), doctest::Contains("B/k"), SamplingError);
  CHECK_THROWS_WITH_AS(check_compatible(view, spec_of(8, 8, Window::full())), doctest::Contains("k=8"), SamplingError);
  CHECK_THROWS_WITH_AS(check_compatible(view, spec_of(4, 2, Window::span(7))), doctest::Contains("w=7"), SamplingError);
  CHECK_THROWS_AS(check_compatible(view, spec_of(6, 4, Window::full())), SamplingError);
  CHECK_NOTHROW(check_compatible(view, spec_of(4, 1, Window::full())));
}

TEST_CASE("negatives: counts per anchor") {
  CHECK(negative_pair_count(0, 512) == 1022);
  CHECK(negative_pair_count(1, 2) == 2);
  CHECK(same_content_negative_count(16) == 30);
  CHECK(same_content_negative_count(1) == 0);
  CHECK_THROWS_AS(negative_pair_count(4, 4), UsageError);
}
