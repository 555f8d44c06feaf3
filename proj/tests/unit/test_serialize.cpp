#include "doctest.h"

#include <sstream>

#include "avlab/error.hpp"
#include "avlab/serialize.hpp"

using namespace avlab;

namespace {

CorpusConfig small() {
  CorpusConfig c;
  c.num_contents = 5;
  c.min_snippets = 4;
  c.max_snippets = 7;
  c.video_dim = 6;
  c.audio_dim = 3;
  c.sync_dim = 2;
  c.sync_strength = 0.4;
  c.holdout_fraction = 0.4;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("serialize: corpus round-trips bit-exactly with its config") {
  const Corpus corpus = generate_corpus(small());
  std::stringstream buf;
  write_corpus(buf, corpus);
  const std::string bytes = buf.str();
  const Corpus back = read_corpus(buf);
  CHECK(back == corpus);
  CHECK(back.config().seed == 77);
  CHECK(back.config().sync_dim == 2);
  CHECK(back.config().sync_strength == 0.4);
  CHECK(back.config().max_snippets == 7);

  std::stringstream again;
  write_corpus(again, back);
  CHECK(again.str() == bytes);
}

TEST_CASE("serialize: params round-trip") {
  const TowerParams p = init_params({6, 3, 5, 4, 7, 2}, 9);
  std::stringstream buf;
  write_params(buf, p);
  CHECK(read_params(buf) == p);
}

TEST_CASE("serialize: corrupt input is a format error") {
  std::stringstream wrong("not a corpus at all");
  CHECK_THROWS_AS(read_corpus(wrong), FormatError);

  const TowerParams p = init_params({6, 3, 5, 4, 7, 2}, 9);
  std::stringstream buf;
  write_params(buf, p);
  std::string bytes = buf.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_params(truncated), FormatError);

  std::stringstream as_corpus(bytes);
  CHECK_THROWS_AS(read_corpus(as_corpus), FormatError);

  CHECK_THROWS_AS(load_corpus("/nonexistent/dir/corpus.bin"), FormatError);
}
