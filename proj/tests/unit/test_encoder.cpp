#include "doctest.h"

#include <cmath>

#include "avlab/encoder.hpp"
#include "avlab/error.hpp"
#include "../common/oracles.hpp"

using namespace avlab;
using avlab::testing::random_matrix;

namespace {

EncoderDims small_dims() {
  EncoderDims d;
  d.video_in = 6;
  d.audio_in = 5;
  d.hidden = 9;
  d.video_out = 7;
  d.audio_out = 8;
  d.embed = 4;
  return d;
}

}  // namespace

TEST_CASE("encoder: parameter count matches the hand count") {
  EncoderDims d;
  d.video_in = 32;
  d.audio_in = 32;
  d.hidden = 64;
  d.video_out = 64;
  d.audio_out = 64;
  d.embed = 16;
  // tower: 32*64+64 and 64*64+64; head: 64*16+16 and 16*16+16; twice.
  const std::size_t per_modality = (32 * 64 + 64) + (64 * 64 + 64) + (64 * 16 + 16) + (16 * 16 + 16);
  CHECK(TowerParams::count(d) == 2 * per_modality);
  CHECK(init_params(d, 0).size() == 2 * per_modality);
}

TEST_CASE("encoder: initialisation is seeded and bounded by the fan-in law") {
  const EncoderDims d = small_dims();
  const TowerParams a = init_params(d, 4);
  CHECK(a == init_params(d, 4));
  CHECK_FALSE(a == init_params(d, 5));
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const auto layer = static_cast<Layer>(l);
    const double bound = std::sqrt(6.0 / static_cast<double>(a.weight(layer).cols()));
    CHECK(a.weight(layer).cwiseAbs().maxCoeff() <= bound);
    CHECK(a.weight(layer).cwiseAbs().maxCoeff() > 0.5 * bound);
    CHECK(a.bias(layer).isZero());
  }
}

TEST_CASE("encoder: layer maps cover the flat vector without overlap") {
  TowerParams p(small_dims());
  double tag = 1.0;
  for (std::size_t l = 0; l < kNumLayers; ++l) {
    const auto layer = static_cast<Layer>(l);
    const auto [out, in] = TowerParams::shape(p.dims(), layer);
    CHECK(static_cast<std::size_t>(p.weight(layer).rows()) == out);
    CHECK(static_cast<std::size_t>(p.weight(layer).cols()) == in);
    p.weight(layer).setConstant(tag);
    p.bias(layer).setConstant(tag + 0.5);
    tag += 1.0;
  }
  CHECK((p.values().array() > 0.0).all());
}

TEST_CASE("encoder: zero parameters give zero embeddings") {
  const TowerParams p(small_dims());
  const auto emb = forward(p, random_matrix(4, 6, 1), random_matrix(4, 5, 2));
  CHECK(emb.z_video.isZero());
  CHECK(emb.z_audio.isZero());
}

TEST_CASE("encoder: identity layers pass positive inputs through") {
  EncoderDims d;
  d.video_in = d.audio_in = d.hidden = d.video_out = d.audio_out = d.embed = 3;
  TowerParams p(d);
  for (std::size_t l = 0; l < kNumLayers; ++l) p.weight(static_cast<Layer>(l)).setIdentity();
  const Eigen::MatrixXd x = random_matrix(5, 3, 3).cwiseAbs();
  const auto emb = forward(p, x, x);
  CHECK((emb.z_video - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((emb.z_audio - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder: forward matches a straight-line loop oracle") {
  const EncoderDims d = small_dims();
  for (std::uint64_t seed : {0, 1, 2}) {
    TowerParams p = init_params(d, seed);
    // Non-zero biases so every term of the affine map is exercised.
    p.values() += random_matrix(static_cast<Eigen::Index>(p.size()), 1, seed + 50, 0.1);
    const Eigen::MatrixXd v = random_matrix(4, 6, seed + 10);
    const Eigen::MatrixXd a = random_matrix(4, 5, seed + 20);
    const auto emb = forward(p, v, a);
    CHECK((emb.z_video - avlab::testing::loop_forward(p, Modality::Video, v)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((emb.z_audio - avlab::testing::loop_forward(p, Modality::Audio, a)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((embed(p, Modality::Video, v) - emb.z_video).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("encoder: rows are processed independently") {
  const TowerParams p = init_params(small_dims(), 3);
  const Eigen::MatrixXd v = random_matrix(6, 6, 7);
  const Eigen::MatrixXd a = random_matrix(6, 5, 8);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
  perm.indices() << 3, 0, 5, 1, 4, 2;
  const auto base = forward(p, v, a, false);
  const auto permuted = forward(p, perm * v, perm * a, false);
  CHECK((permuted.z_video - perm * base.z_video).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((permuted.z_audio - perm * base.z_audio).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("encoder: backward is linear in the incoming gradient") {
  const TowerParams p = init_params(small_dims(), 2);
  const auto emb = forward(p, random_matrix(5, 6, 1), random_matrix(5, 5, 2));
  const Eigen::MatrixXd gv = random_matrix(5, 4, 3);
  const Eigen::MatrixXd ga = random_matrix(5, 4, 4);

  const TowerParams zero = backward(emb, Eigen::MatrixXd::Zero(5, 4), Eigen::MatrixXd::Zero(5, 4), p);
  CHECK(zero.values().isZero());

  const TowerParams once = backward(emb, gv, ga, p);
  const TowerParams twice = backward(emb, 2.0 * gv, 2.0 * ga, p);
  CHECK((twice.values() - 2.0 * once.values()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(once.values().cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("encoder: analytic gradient matches central differences") {
  EncoderDims d;
  d.video_in = 6;
  d.audio_in = 5;
  d.hidden = 10;
  d.video_out = 9;
  d.audio_out = 8;
  d.embed = 16;
  for (std::uint64_t seed : {1, 2, 3}) {
    for (const auto& variant : {LossVariant::unnormalized(), LossVariant::normalized(0.07)}) {
      const auto check = avlab::testing::check_pipeline_gradient(d, 8, variant, seed);
      INFO("seed " << seed << " variant " << variant.name());
      CHECK(check.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("encoder: input validation") {
  const TowerParams p = init_params(small_dims(), 0);
  CHECK_THROWS_AS(forward(p, random_matrix(4, 7, 1), random_matrix(4, 5, 2)), UsageError);
  CHECK_THROWS_AS(forward(p, random_matrix(4, 6, 1), random_matrix(3, 5, 2)), UsageError);
  Eigen::MatrixXd bad = random_matrix(4, 6, 1);
  bad(2, 2) = std::nan("");
  CHECK_THROWS_AS(forward(p, bad, random_matrix(4, 5, 2)), NumericError);
  const auto no_cache = forward(p, random_matrix(4, 6, 1), random_matrix(4, 5, 2), false);
  CHECK_THROWS_AS(backward(no_cache, no_cache.z_video, no_cache.z_audio, p), UsageError);
  EncoderDims zero = small_dims();
  zero.embed = 0;
  CHECK_THROWS_AS(zero.validate(), ConfigError);
}
