#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fmeac/common/errors.hpp"
#include "fmeac/nn/adam.hpp"
#include "fmeac/nn/checkpoint.hpp"
#include "fmeac/nn/dense_net.hpp"
#include "fmeac/nn/gaussian.hpp"
#include "gradcheck.hpp"

using namespace fmeac;
using namespace fmeac::nn;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::matrix(r, c);
  for (double& v : t.data()) v = uniform(rng, -scale, scale);
  return t;
}

double weighted_sum(const std::vector<Tensor>& outs, const std::vector<Tensor>& weights) {
  double s = 0.0;
  for (std::size_t h = 0; h < outs.size(); ++h) {
    for (std::size_t i = 0; i < outs[h].size(); ++i) s += outs[h][i] * weights[h][i];
  }
  return s;
}

}  // namespace

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
}

TEST(DenseNet, ZeroWeightsGiveZeroLinearOutput) {
  Rng rng = make_rng(1);
  DenseNet net({3, {4}, Activation::relu, {HeadSpec::linear(2)}}, rng);
  for (double& p : net.mutable_parameters()) p = 0.0;
  const auto out = net.forward(Tensor::matrix(1, 3, {1.0, -2.0, 5.0}));
  EXPECT_EQ(out[0], Tensor::matrix(1, 2));
}

TEST(DenseNet, SoftmaxOfEqualLogitsIsUniform) {
  Rng rng = make_rng(2);
  DenseNet net({2, {}, Activation::relu, {HeadSpec::softmax(3)}}, rng);
  for (double& p : net.mutable_parameters()) p = 0.0;
  const auto out = net.forward(Tensor::matrix(1, 2, {0.3, 0.7}));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(out[0][i], 1.0 / 3.0, 1e-15);
}

TEST(DenseNet, IdentityWeightsPassInputThrough) {
  Rng rng = make_rng(3);
  DenseNet net({2, {}, Activation::relu, {HeadSpec::linear(2)}}, rng);
  auto p = net.mutable_parameters();
  // weight [2,2] then bias [2]
  p[0] = 1.0; p[1] = 0.0; p[2] = 0.0; p[3] = 1.0; p[4] = 0.0; p[5] = 0.0;
  const auto out = net.forward(Tensor::matrix(1, 2, {1.0, 2.0}));
  EXPECT_EQ(out[0], Tensor::matrix(1, 2, {1.0, 2.0}));
}

TEST(DenseNet, InputWidthMismatchThrows) {
  Rng rng = make_rng(4);
  DenseNet net({3, {4}, Activation::relu, {HeadSpec::linear(1)}}, rng);
  EXPECT_THROW(net.forward(Tensor::matrix(1, 2)), DimensionError);
}

TEST(DenseNet, HeadsRespectTheirRanges) {
  Rng rng = make_rng(5);
  DenseNet net({4, {16, 16}, Activation::tanh,
                {HeadSpec::tanh_scaled({2.0, 0.5}), HeadSpec::softmax(3, 0.8),
                 HeadSpec::gaussian({1.0, 1.0}, -3.0, 0.5)}},
               rng);
  const Tensor x = random_matrix(32, 4, rng, 10.0);
  const auto out = net.forward(x);
  for (std::size_t r = 0; r < 32; ++r) {
    EXPECT_LE(std::abs(out[0](r, 0)), 2.0);
    EXPECT_LE(std::abs(out[0](r, 1)), 0.5);
    double s = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_GE(out[1](r, c), 0.0);
      s += out[1](r, c);
    }
    EXPECT_NEAR(s, 0.8, 1e-12);
    for (std::size_t c = 2; c < 4; ++c) {
      EXPECT_GE(out[2](r, c), -3.0);
      EXPECT_LE(out[2](r, c), 0.5);
    }
  }
}

TEST(DenseNet, ForwardIsPure) {
  Rng rng = make_rng(6);
  DenseNet net({5, {8, 8}, Activation::relu, {HeadSpec::linear(3)}}, rng);
  const Tensor x = random_matrix(4, 5, rng);
  EXPECT_EQ(net.forward(x), net.forward(x));
}

TEST(DenseNet, LinearCaseGradientIsTheInput) {
  Rng rng = make_rng(7);
  DenseNet net({1, {}, Activation::relu, {HeadSpec::linear(1)}}, rng);
  auto p = net.mutable_parameters();
  p[0] = 0.5;
  p[1] = 0.0;
  const ForwardPass pass = net.forward_cached(Tensor::matrix(1, 1, {3.0}));
  const std::vector<Tensor> up{Tensor::matrix(1, 1, {1.0})};
  const Gradients g = net.backward(pass, up);
  EXPECT_DOUBLE_EQ(g.params[0], 3.0);
  EXPECT_DOUBLE_EQ(g.params[1], 1.0);
  EXPECT_DOUBLE_EQ(g.input[0], 0.5);
}

TEST(DenseNet, DeadReluBlocksGradient) {
  Rng rng = make_rng(8);
  DenseNet net({1, {1}, Activation::relu, {HeadSpec::linear(1)}}, rng);
  auto p = net.mutable_parameters();
  // layer0: w=1, b=0; layer1: w=2, b=0
  p[0] = 1.0; p[1] = 0.0; p[2] = 2.0; p[3] = 0.0;
  const ForwardPass pass = net.forward_cached(Tensor::matrix(1, 1, {-1.0}));
  const std::vector<Tensor> up{Tensor::matrix(1, 1, {1.0})};
  const Gradients g = net.backward(pass, up);
  EXPECT_EQ(g.params[0], 0.0);
  EXPECT_EQ(g.params[1], 0.0);
  EXPECT_EQ(g.input[0], 0.0);
}

TEST(DenseNet, StaleCacheIsRejected) {
  Rng rng = make_rng(9);
  DenseNet net({2, {3}, Activation::relu, {HeadSpec::linear(1)}}, rng);
  const ForwardPass pass = net.forward_cached(Tensor::matrix(1, 2, {1.0, 1.0}));
  net.mutable_parameters()[0] += 0.1;
  const std::vector<Tensor> up{Tensor::matrix(1, 1, {1.0})};
  EXPECT_THROW(net.backward(pass, up), ContractError);

  DenseNet other({2, {3}, Activation::relu, {HeadSpec::linear(1)}}, rng);
  const ForwardPass fresh = net.forward_cached(Tensor::matrix(1, 2, {1.0, 1.0}));
  EXPECT_THROW(other.backward(fresh, up), ContractError);
}

class DenseNetGradient : public ::testing::TestWithParam<Activation> {};

TEST_P(DenseNetGradient, MatchesCentralDifferences) {
  Rng rng = make_rng(10 + static_cast<int>(GetParam()));
  DenseNet net({5, {12, 12}, GetParam(),
                {HeadSpec::linear(2), HeadSpec::tanh_scaled({3.0, 0.5}), HeadSpec::softmax(4, 0.8),
                 HeadSpec::gaussian({1.0, 2.0}, -5.0, 2.0)}},
               rng);
  const Tensor x = random_matrix(6, 5, rng);
  std::vector<Tensor> weights;
  for (const auto& h : net.spec().heads) weights.push_back(random_matrix(6, h.raw_dim(), rng));

  const ForwardPass pass = net.forward_cached(x);
  const Gradients g = net.backward(pass, weights);
  const std::vector<double> analytic = g.params;

  auto params = net.mutable_parameters();
  const auto loss = [&] { return weighted_sum(net.forward(x), weights); };
  const auto idx = check::sample_indices(params.size(), 64, rng);
  EXPECT_LT(check::max_fd_error(params, analytic, loss, idx), 1e-4);

  // input gradient, checked the same way
  Tensor xv = x;
  const auto loss_x = [&] { return weighted_sum(net.forward(xv), weights); };
  const auto idx_x = check::sample_indices(xv.size(), 30, rng);
  EXPECT_LT(check::max_fd_error(xv.data(), g.input.data(), loss_x, idx_x), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(Activations, DenseNetGradient,
                         ::testing::Values(Activation::relu, Activation::tanh));

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{0.0, 5.0};
  const std::vector<double> g{1.0, -1.0};
  AdamState s(2, 1e-3);
  adam_step(p, g, s);
  // m_hat = g, v_hat = g^2  =>  step = lr * g / (|g| + eps)
  EXPECT_NEAR(p[0], -1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_NEAR(p[1], 5.0 + 1e-3 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(s.t, 1u);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{0.25, -1.5};
  const std::vector<double> zero{0.0, 0.0};
  AdamState s(2, 1e-2);
  adam_step(p, zero, s);
  adam_step(p, zero, s);
  EXPECT_EQ(p, (std::vector<double>{0.25, -1.5}));
  EXPECT_EQ(s.t, 2u);
}

TEST(Adam, DeterministicFromIdenticalState) {
  std::vector<double> a{1.0, 2.0, 3.0}, b = a;
  const std::vector<double> g{0.3, -0.2, 0.1};
  AdamState sa(3, 1e-3), sb(3, 1e-3);
  for (int i = 0; i < 2; ++i) {
    adam_step(a, g, sa);
    adam_step(b, g, sb);
  }
  EXPECT_EQ(a, b);
}

TEST(Adam, NonFiniteGradientNamesIndexAndLeavesParams) {
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.1, std::nan(""), 0.1};
  AdamState s(3, 1e-3);
  try {
    adam_step(p, g, s);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
  EXPECT_EQ(p, (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Gaussian, AtMeanLogProbIsClosedForm) {
  const Tensor mu = Tensor::matrix(1, 2);
  const Tensor ls = Tensor::matrix(1, 2, {std::log(0.5), std::log(2.0)});
  const std::vector<double> bounds{1.0, 1.0};
  const auto s = gaussian_sample_with_noise(mu, ls, bounds, Tensor::matrix(1, 2));
  EXPECT_EQ(s.action[0], 0.0);
  EXPECT_EQ(s.action[1], 0.0);
  const double expected = -std::log(0.5 * std::sqrt(2.0 * std::numbers::pi)) -
                          std::log(2.0 * std::sqrt(2.0 * std::numbers::pi));
  EXPECT_NEAR(s.log_prob[0], expected, 1e-12);
}

TEST(Gaussian, ZeroVarianceLimitIsDeterministic) {
  const Tensor mu = Tensor::matrix(1, 1, {0.4});
  const Tensor ls = Tensor::matrix(1, 1, {-20.0});
  const std::vector<double> bounds{3.0};
  Rng rng = make_rng(11);
  for (int i = 0; i < 10; ++i) {
    const auto s = gaussian_sample(mu, ls, bounds, rng);
    EXPECT_NEAR(s.action[0], 3.0 * std::tanh(0.4), 1e-8);
  }
}

TEST(Gaussian, MonteCarloMeanOfPretanh) {
  const std::size_t n = 100000;
  const double sigma = 0.7;
  const Tensor mu = Tensor::matrix(n, 1, 0.3);
  const Tensor ls = Tensor::matrix(n, 1, std::log(sigma));
  const std::vector<double> bounds{1.0};
  Rng rng = make_rng(12);
  const auto s = gaussian_sample(mu, ls, bounds, rng);
  double mean = 0.0;
  for (double u : s.pretanh.data()) mean += u;
  mean /= static_cast<double>(n);
  EXPECT_LT(std::abs(mean - 0.3), 4.0 * sigma / std::sqrt(static_cast<double>(n)));
}

TEST(Gaussian, LogOneMinusTanhSqIsStable) {
  for (double u : {0.0, 0.5, -2.0, 8.0}) {
    EXPECT_NEAR(log_one_minus_tanh_sq(u), std::log(1.0 - std::tanh(u) * std::tanh(u)), 1e-9);
  }
  EXPECT_TRUE(std::isfinite(log_one_minus_tanh_sq(400.0)));
}

TEST(Gaussian, BackwardMatchesFiniteDifferences) {
  Rng rng = make_rng(13);
  Tensor mu = random_matrix(4, 3, rng);
  Tensor ls = random_matrix(4, 3, rng, 0.5);
  const std::vector<double> bounds{1.0, 2.0, 0.5};
  Tensor noise = Tensor::matrix(4, 3);
  for (double& v : noise.data()) v = standard_normal(rng);
  const Tensor wa = random_matrix(4, 3, rng);
  const Tensor wl = random_matrix(4, 1, rng);
  const auto loss = [&] {
    const auto s = gaussian_sample_with_noise(mu, ls, bounds, noise);
    return weighted_sum({s.action, s.log_prob}, {wa, wl});
  };
  const auto s = gaussian_sample_with_noise(mu, ls, bounds, noise);
  const auto g = gaussian_backward(s, ls, bounds, wa, wl);
  std::vector<std::size_t> all(12);
  for (std::size_t i = 0; i < 12; ++i) all[i] = i;
  EXPECT_LT(check::max_fd_error(mu.data(), g.mu.data(), loss, all), 1e-5);
  EXPECT_LT(check::max_fd_error(ls.data(), g.log_std.data(), loss, all), 1e-5);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng = make_rng(14);
  DenseNet net({3, {7}, Activation::tanh, {HeadSpec::linear(2)}}, rng);
  Checkpoint ck;
  ck.add_all(net.named_tensors("actor"));
  ck.add("scalar", Tensor({1}, std::vector<double>{std::nextafter(1.0, 2.0)}));
  const std::string bytes = ck.serialize();
  EXPECT_EQ(bytes.substr(0, 6), "FMEAC1");
  const Checkpoint back = Checkpoint::parse(bytes);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(back.serialize(), bytes);

  DenseNet copy({3, {7}, Activation::tanh, {HeadSpec::linear(2)}}, rng);
  copy.load_named_tensors("actor", back.entries());
  EXPECT_TRUE(std::equal(copy.parameters().begin(), copy.parameters().end(),
                         net.parameters().begin()));
}

TEST(Checkpoint, LittleEndianLayout) {
  Checkpoint ck;
  ck.add("a", Tensor({1}, std::vector<double>{1.0}));
  const std::string b = ck.serialize();
  // magic(6) + len(4) + "a" + rank(4) + dim(4) + f64(8)
  ASSERT_EQ(b.size(), 27u);
  EXPECT_EQ(static_cast<unsigned char>(b[6]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(b[7]), 0u);
  // 1.0 = 0x3FF0000000000000, little-endian => last byte 0x3F
  EXPECT_EQ(static_cast<unsigned char>(b[26]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(b[25]), 0xF0u);
}

TEST(Checkpoint, RejectsBadMagicAndTruncation) {
  EXPECT_THROW(Checkpoint::parse("NOTIT1"), ContractError);
  Checkpoint ck;
  ck.add("a", Tensor({2}, std::vector<double>{1.0, 2.0}));
  const std::string b = ck.serialize();
  EXPECT_THROW(Checkpoint::parse(b.substr(0, b.size() - 3)), ContractError);
}
