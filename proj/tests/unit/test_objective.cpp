#include "doctest.h"

#include <cmath>
#include <numbers>

#include "avlab/error.hpp"
#include "avlab/objective.hpp"
#include "../common/oracles.hpp"

using namespace avlab;
using avlab::testing::random_matrix;

namespace {

// Max relative error of dL/dz (both modalities) against central differences.
double z_gradient_error(const Eigen::MatrixXd& zv0, const Eigen::MatrixXd& za0, const LossVariant& v) {
  const LossResult r = contrastive_loss(zv0, za0, v);
  const double h = 1e-5;
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    Eigen::MatrixXd zv = zv0, za = za0;
    Eigen::MatrixXd& z = which == 0 ? zv : za;
    const Eigen::MatrixXd& g = which == 0 ? r.grad_z_video : r.grad_z_audio;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double saved = z(i);
      z(i) = saved + h;
      const double up = contrastive_loss(zv, za, v).value;
      z(i) = saved - h;
      const double down = contrastive_loss(zv, za, v).value;
      z(i) = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - g(i)) / std::max({std::abs(numeric), std::abs(g(i)), 1e-6}));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("similarity: orthonormal rows give the identity") {
  const Eigen::MatrixXd z = Eigen::MatrixXd::Identity(2, 2);
  CHECK(pairwise_similarity(z, z, LossVariant::unnormalized()) == Eigen::MatrixXd::Identity(2, 2));
  const Eigen::MatrixXd s = pairwise_similarity(z, z, LossVariant::normalized(0.07));
  CHECK((s - Eigen::MatrixXd::Identity(2, 2) / 0.07).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("similarity: matches a scalar loop oracle") {
  const Eigen::MatrixXd zv = random_matrix(3, 4, 1);
  const Eigen::MatrixXd za = random_matrix(3, 4, 2);
  for (const auto& v : {LossVariant::unnormalized(), LossVariant::normalized(0.3)}) {
    const Eigen::MatrixXd s = pairwise_similarity(zv, za, v);
    CHECK((s - avlab::testing::loop_similarity(zv, za, v)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("similarity: normalized values are bounded by 1/tau") {
  const double tau = 0.07;
  const Eigen::MatrixXd zv = random_matrix(64, 16, 3, 5.0);
  Eigen::MatrixXd za = random_matrix(64, 16, 4, 0.01);
  za.row(0) = zv.row(0) * 3.0;
  za.row(1) = -zv.row(1);
  const Eigen::MatrixXd s = pairwise_similarity(zv, za, LossVariant::normalized(tau));
  CHECK(s.maxCoeff() <= 1.0 / tau + 1e-9);
  CHECK(s.minCoeff() >= -1.0 / tau - 1e-9);
  CHECK(s(0, 0) == doctest::Approx(1.0 / tau));
  CHECK(s(1, 1) == doctest::Approx(-1.0 / tau));
}

TEST_CASE("similarity: zero-norm rows are rejected when normalizing") {
  Eigen::MatrixXd zv = random_matrix(3, 4, 1);
  zv.row(1).setZero();
  CHECK_THROWS_AS(pairwise_similarity(zv, random_matrix(3, 4, 2), LossVariant::normalized(0.1)), NumericError);
  CHECK_NOTHROW(pairwise_similarity(zv, random_matrix(3, 4, 2), LossVariant::unnormalized()));
}

TEST_CASE("nce: zero similarities give B ln(2B-1)") {
  CHECK(nce_loss(Eigen::MatrixXd::Zero(2, 2)).value == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
  for (int b : {2, 4, 8, 64})
    CHECK(std::abs(nce_loss(Eigen::MatrixXd::Zero(b, b)).value - b * std::log(2.0 * b - 1.0)) < 1e-9);
}

TEST_CASE("nce: identity similarity for B=2") {
  const double e = std::numbers::e;
  const double expected = 2.0 * std::log((e + 2.0) / e);
  CHECK(expected == doctest::Approx(1.10284).epsilon(1e-4));
  CHECK(std::abs(nce_loss(Eigen::MatrixXd::Identity(2, 2)).value - expected) < 1e-12);
}

TEST_CASE("nce: matches the term-by-term oracle") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Eigen::MatrixXd s = random_matrix(6, 6, seed, 2.0);
    CHECK(nce_loss(s).value == doctest::Approx(avlab::testing::loop_nce(s)).epsilon(1e-12));
  }
}

TEST_CASE("nce: a dominant diagonal drives the loss to zero") {
  Eigen::MatrixXd s = random_matrix(4, 4, 9);
  double previous = nce_loss(s).value;
  for (double big : {10.0, 30.0, 100.0, 1000.0}) {
    s.diagonal().setConstant(big);
    const double v = nce_loss(s).value;
    CHECK(v <= previous);
    CHECK(v >= 0.0);
    previous = v;
  }
  CHECK(previous < 1e-12);
}

TEST_CASE("nce: invariant to a constant shift and to transposition") {
  const Eigen::MatrixXd s = random_matrix(5, 5, 4, 3.0);
  const double base = nce_loss(s).value;
  CHECK(nce_loss((s.array() + 700.0).matrix()).value == doctest::Approx(base).epsilon(1e-10));
  CHECK(nce_loss(s.transpose()).value == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("nce: gradient with respect to S matches central differences") {
  const Eigen::MatrixXd s0 = random_matrix(5, 5, 6, 1.5);
  const NceResult r = nce_loss(s0);
  // Rows of dL/dS sum with columns to zero per anchor in aggregate: total mass is zero.
  CHECK(std::abs(r.grad_similarity.sum()) < 1e-12);
  Eigen::MatrixXd s = s0;
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double saved = s(i);
    s(i) = saved + h;
    const double up = nce_loss(s).value;
    s(i) = saved - h;
    const double down = nce_loss(s).value;
    s(i) = saved;
    CHECK(r.grad_similarity(i) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("nce: rejects non-square or non-finite input") {
  CHECK_THROWS_AS(nce_loss(Eigen::MatrixXd::Zero(2, 3)), NumericError);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(nce_loss(s), NumericError);
}

TEST_CASE("loss: embedding gradients match central differences for both variants") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const Eigen::MatrixXd zv = random_matrix(8, 16, seed);
    const Eigen::MatrixXd za = random_matrix(8, 16, seed + 100);
    CHECK(z_gradient_error(zv, za, LossVariant::unnormalized()) < 1e-5);
    CHECK(z_gradient_error(zv, za, LossVariant::normalized(0.07)) < 1e-5);
    CHECK(z_gradient_error(zv, za, LossVariant::normalized(0.3)) < 1e-5);
  }
}

TEST_CASE("loss: the normalized gradient is orthogonal to each embedding") {
  const Eigen::MatrixXd zv = random_matrix(6, 5, 7);
  const Eigen::MatrixXd za = random_matrix(6, 5, 8);
  const LossResult r = contrastive_loss(zv, za, LossVariant::normalized(0.1));
  for (Eigen::Index i = 0; i < 6; ++i) {
    CHECK(std::abs(r.grad_z_video.row(i).dot(zv.row(i))) < 1e-10);
    CHECK(std::abs(r.grad_z_audio.row(i).dot(za.row(i))) < 1e-10);
  }
}

TEST_CASE("variant: parsing and validation") {
  CHECK(parse_variant("unnorm", 0.0) == LossVariant::unnormalized());
  CHECK(parse_variant("norm", 0.07).tau == 0.07);
  CHECK(parse_variant("norm", 0.07).name() == "norm");
  CHECK_THROWS_AS(parse_variant("cosine", 0.1), ConfigError);
  CHECK_THROWS_AS(LossVariant::normalized(0.0), ConfigError);
  CHECK_THROWS_AS(LossVariant::normalized(-1.0), ConfigError);
}
