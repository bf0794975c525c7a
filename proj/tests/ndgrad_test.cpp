#include <cmath>
#include <numbers>
#include <numeric>

#include <gtest/gtest.h>

#include "fpu/error.hpp"
#include "fpu/ndgrad/adam.hpp"
#include "fpu/ndgrad/ops.hpp"
#include "support/finite_diff.hpp"

using namespace fpu;
using namespace fpu::ndgrad;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

// Values bounded away from zero so ReLU/max kinks stay outside the FD stencil.
Tensor kink_free_tensor(Shape shape, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) {
    const double mag = rng.uniform(0.05, 1.0);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor(std::move(shape), std::move(v), true);
}

std::vector<double> as_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

// Scalar probe: sum(op(...) * weights) with fixed random weights so that every
// output element contributes a distinct amount.
Tensor weighted_sum(Tape& tape, const Tensor& t, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = random_tensor(t.shape(), rng, -1.0, 1.0, false);
  return sum(tape, mul(tape, t, w));
}

}  // namespace

TEST(TensorTest, ShapeInvariants) {
  EXPECT_THROW(Tensor(Shape{2, 2}, {1.0, 2.0, 3.0}), InvalidArgument);
  EXPECT_THROW(Tensor::zeros(Shape{2, 0}), InvalidArgument);
  EXPECT_THROW(Tensor::zeros(Shape{}), InvalidArgument);
  Tensor t = Tensor::zeros(Shape{2, 3});
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_FALSE(t.has_grad());
  EXPECT_EQ(t.mutable_grad().size(), t.numel());
}

TEST(ElementwiseTest, Examples) {
  Tape tape(Tape::Mode::kInference);
  auto r = add(tape, Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {3, 4}));
  EXPECT_EQ(as_vector(r.values()), (std::vector<double>{4, 6}));
  r = relu(tape, Tensor(Shape{3}, {-1, 0, 2}));
  EXPECT_EQ(as_vector(r.values()), (std::vector<double>{0, 0, 2}));
  r = sigmoid(tape, Tensor(Shape{1}, {0}));
  EXPECT_EQ(r.item(), 0.5);
  r = mul(tape, Tensor(Shape{3}, {1, 2, 3}), Tensor::scalar(2.0));
  EXPECT_EQ(as_vector(r.values()), (std::vector<double>{2, 4, 6}));
}

TEST(ElementwiseTest, ShapeMismatchIsInvalidArgument) {
  Tape tape;
  EXPECT_THROW(add(tape, Tensor::zeros(Shape{2}), Tensor::zeros(Shape{3})), InvalidArgument);
  EXPECT_THROW(elementwise(tape, Elementwise::kRelu, Tensor::zeros(Shape{2}), Tensor::zeros(Shape{2})),
               InvalidArgument);
  EXPECT_THROW(elementwise(tape, Elementwise::kMul, Tensor::zeros(Shape{2})), InvalidArgument);
}

TEST(ElementwiseTest, GradientsMatchFiniteDifferences) {
  const Elementwise kinds[] = {Elementwise::kAdd, Elementwise::kSub,     Elementwise::kMul, Elementwise::kRelu,
                               Elementwise::kSigmoid, Elementwise::kExp, Elementwise::kLog, Elementwise::kNegate};
  Rng rng(11);
  for (Elementwise kind : kinds) {
    for (int trial = 0; trial < 20; ++trial) {
      const bool scalar_b = trial % 4 == 3;
      Tensor a = kind == Elementwise::kLog ? random_tensor(Shape{3, 4}, rng, 0.2, 2.0) : kink_free_tensor(Shape{3, 4}, rng);
      Tensor b = random_tensor(scalar_b ? Shape{1} : Shape{3, 4}, rng);
      auto eval = [&](Tape& tape) {
        Tensor y = is_binary(kind) ? elementwise(tape, kind, a, b) : elementwise(tape, kind, a);
        return weighted_sum(tape, y, 99);
      };
      Tape tape;
      a.clear_grad();
      b.clear_grad();
      tape.backward(eval(tape));
      auto f = [&] {
        Tape t(Tape::Mode::kInference);
        return eval(t).item();
      };
      EXPECT_LT(oracle::relative_error(a.grad(), oracle::numeric_gradient(a, f)), 1e-6) << to_string(kind);
      if (is_binary(kind)) {
        EXPECT_LT(oracle::relative_error(b.grad(), oracle::numeric_gradient(b, f)), 1e-6) << to_string(kind);
      }
    }
  }
}

TEST(ConvTest, IdentityKernel) {
  Rng rng(1);
  Tensor x = random_tensor(Shape{2, 1, 4, 5}, rng, 0, 1, false);
  Tape tape(Tape::Mode::kInference);
  Tensor y = conv2d(tape, x, Tensor::full(Shape{1, 1, 1, 1}, 1.0), Tensor::zeros(Shape{1}));
  EXPECT_EQ(y.shape(), x.shape());
  EXPECT_EQ(as_vector(y.values()), as_vector(x.values()));
}

TEST(ConvTest, AllOnesKernelSums) {
  Tape tape(Tape::Mode::kInference);
  Tensor y = conv2d(tape, Tensor::full(Shape{1, 1, 3, 3}, 1.0), Tensor::full(Shape{1, 1, 3, 3}, 1.0),
                    Tensor::zeros(Shape{1}));
  EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 9.0);
}

TEST(ConvTest, NonIntegralOutputRejected) {
  Tape tape;
  EXPECT_THROW(conv2d(tape, Tensor::zeros(Shape{1, 1, 4, 4}), Tensor::zeros(Shape{1, 1, 3, 3}),
                      Tensor::zeros(Shape{1}), 0, 2),
               InvalidArgument);
  EXPECT_THROW(conv2d(tape, Tensor::zeros(Shape{1, 1, 4, 4}), Tensor::zeros(Shape{1, 1, 2, 2}),
                      Tensor::zeros(Shape{1}), 0, 1),
               InvalidArgument);
}

TEST(ConvTest, StridedPaddedMatchesDirectLoop) {
  Rng rng(5);
  Tensor x = random_tensor(Shape{2, 3, 7, 7}, rng, -1, 1, false);
  Tensor k = random_tensor(Shape{4, 3, 3, 3}, rng, -1, 1, false);
  Tensor b = random_tensor(Shape{4}, rng, -1, 1, false);
  Tape tape(Tape::Mode::kInference);
  Tensor y = conv2d(tape, x, k, b, 1, 2);
  ASSERT_EQ(y.shape(), (Shape{2, 4, 4, 4}));
  auto at = [&](const Tensor& t, std::size_t a, std::size_t c, long i, long j) -> double {
    if (i < 0 || j < 0 || i >= static_cast<long>(t.dim(2)) || j >= static_cast<long>(t.dim(3))) return 0.0;
    return t.values()[((a * t.dim(1) + c) * t.dim(2) + i) * t.dim(3) + j];
  };
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 4; ++o)
      for (long i = 0; i < 4; ++i)
        for (long j = 0; j < 4; ++j) {
          double acc = b.values()[o];
          for (std::size_t c = 0; c < 3; ++c)
            for (long u = 0; u < 3; ++u)
              for (long v = 0; v < 3; ++v) acc += at(x, n, c, i * 2 + u - 1, j * 2 + v - 1) * at(k, o, c, u, v);
          EXPECT_NEAR(at(y, n, o, i, j), acc, 1e-12);
        }
}

TEST(ConvTest, GradientsMatchFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t padding = trial % 2;
    const std::size_t stride = trial % 3 == 2 ? 2 : 1;
    Tensor x = random_tensor(Shape{1, 2, 5, 5}, rng);
    Tensor k = random_tensor(Shape{3, 2, 3, 3}, rng);
    Tensor b = random_tensor(Shape{3}, rng);
    auto eval = [&](Tape& tape) { return sum(tape, conv2d(tape, x, k, b, padding, stride)); };
    Tape tape;
    tape.backward(eval(tape));
    auto f = [&] {
      Tape t(Tape::Mode::kInference);
      return eval(t).item();
    };
    EXPECT_LT(oracle::relative_error(x.grad(), oracle::numeric_gradient(x, f)), 1e-6);
    EXPECT_LT(oracle::relative_error(k.grad(), oracle::numeric_gradient(k, f)), 1e-6);
    EXPECT_LT(oracle::relative_error(b.grad(), oracle::numeric_gradient(b, f)), 1e-6);
  }
}

TEST(UpsampleTest, Examples) {
  Tape tape;
  Tensor x(Shape{1, 1, 2, 2}, {1, 2, 3, 4}, true);
  EXPECT_TRUE(upsample_nearest(tape, x, 1).same_storage(x));
  Tensor y = upsample_nearest(tape, x, 2);
  EXPECT_EQ(as_vector(y.values()), (std::vector<double>{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
  tape.backward(sum(tape, y));
  EXPECT_EQ(as_vector(x.grad()), (std::vector<double>{4, 4, 4, 4}));
  EXPECT_THROW(upsample_nearest(tape, x, 0), InvalidArgument);
}

TEST(PoolConcatTest, GradientsMatchFiniteDifferences) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor(Shape{2, 2, 4, 4}, rng);
    Tensor b = random_tensor(Shape{2, 3, 2, 2}, rng);
    auto eval = [&](Tape& tape) {
      Tensor pooled = max_pool2d(tape, a, 2);
      Tensor joined = concat_channels(tape, pooled, b);
      return weighted_sum(tape, upsample_nearest(tape, joined, 2), 5);
    };
    Tape tape;
    tape.backward(eval(tape));
    auto f = [&] {
      Tape t(Tape::Mode::kInference);
      return eval(t).item();
    };
    EXPECT_LT(oracle::relative_error(a.grad(), oracle::numeric_gradient(a, f)), 1e-6);
    EXPECT_LT(oracle::relative_error(b.grad(), oracle::numeric_gradient(b, f)), 1e-6);
  }
}

TEST(ReductionTest, LogSumExpExamples) {
  Tape tape(Tape::Mode::kInference);
  EXPECT_NEAR(log_sum_exp(tape, Tensor(Shape{2}, {0, 0}), 0).item(), std::numbers::ln2, 1e-15);
  const double big = log_sum_exp(tape, Tensor(Shape{2}, {1000, 1000}), 0).item();
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 1000 + std::numbers::ln2, 1e-12);
  EXPECT_EQ(log_sum_exp(tape, Tensor(Shape{1}, {-3.5}), 0).item(), -3.5);
  EXPECT_THROW(log_sum_exp(tape, Tensor(Shape{2}, {0, 0}), 1), InvalidArgument);
}

TEST(ReductionTest, GradientsMatchFiniteDifferences) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a = random_tensor(Shape{2, 3, 2, 2}, rng, -3, 3);
    const std::size_t axis = static_cast<std::size_t>(trial % 4);
    auto eval = [&](Tape& tape) {
      Tensor l = log_sum_exp(tape, a, axis);
      Tensor s = sum_axis(tape, a, (axis + 1) % 4);
      Tensor c = clamp(tape, a, -2.0, 2.0);
      return add(tape, add(tape, weighted_sum(tape, l, 1), weighted_sum(tape, s, 2)),
                 add(tape, mean(tape, affine(tape, c, 0.5, 1.0)), weighted_sum(tape, c, 3)));
    };
    Tape tape;
    tape.backward(eval(tape));
    auto f = [&] {
      Tape t(Tape::Mode::kInference);
      return eval(t).item();
    };
    EXPECT_LT(oracle::relative_error(a.grad(), oracle::numeric_gradient(a, f)), 1e-6);
  }
}

TEST(DropoutTest, IdentityCases) {
  Rng rng(1);
  Tape tape;
  Tensor x = Tensor::full(Shape{100}, 2.0, true);
  EXPECT_TRUE(dropout(tape, x, 0.0, true, rng).same_storage(x));
  EXPECT_TRUE(dropout(tape, x, 0.9, false, rng).same_storage(x));
  EXPECT_THROW(dropout(tape, x, 1.0, true, rng), InvalidArgument);
  EXPECT_THROW(dropout(tape, x, -0.1, true, rng), InvalidArgument);
}

TEST(DropoutTest, MeanPreservedAndReproducible) {
  Tape tape(Tape::Mode::kInference);
  Tensor x = Tensor::full(Shape{10000}, 1.0);
  Rng rng_a(42), rng_b(42);
  Tensor a = dropout(tape, x, 0.5, true, rng_a);
  Tensor b = dropout(tape, x, 0.5, true, rng_b);
  const double m = std::accumulate(a.values().begin(), a.values().end(), 0.0) / 10000.0;
  EXPECT_GE(m, 0.93);
  EXPECT_LE(m, 1.07);
  EXPECT_EQ(as_vector(a.values()), as_vector(b.values()));
  for (double v : a.values()) EXPECT_TRUE(v == 0.0 || v == 2.0);
}

TEST(DropoutTest, GradientUsesSameMask) {
  Rng rng(9);
  Tensor x = random_tensor(Shape{50}, rng);
  Tape tape;
  Rng mask_rng(4);
  Tensor y = dropout(tape, x, 0.3, true, mask_rng);
  tape.backward(sum(tape, y));
  for (std::size_t i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(x.grad()[i] * x.values()[i], y.values()[i]);
}

TEST(BackwardTest, Examples) {
  Tensor x = Tensor::scalar(3.0, true);
  Tape tape;
  tape.backward(mul(tape, x, x));
  EXPECT_EQ(x.grad()[0], 6.0);

  Tensor z = Tensor::zeros(Shape{4}, true);
  Tape tape2;
  tape2.backward(sum(tape2, sigmoid(tape2, z)));
  for (double g : z.grad()) EXPECT_EQ(g, 0.25);
}

TEST(BackwardTest, NonScalarLossRejected) {
  Tensor x = Tensor::zeros(Shape{3}, true);
  Tape tape;
  Tensor y = relu(tape, x);
  EXPECT_THROW(tape.backward(y), InvalidArgument);
}

TEST(BackwardTest, RepeatedCallsAccumulateAndZeroingRestores) {
  Rng rng(2);
  Tensor x = random_tensor(Shape{1, 1, 5, 5}, rng);
  Tensor k = random_tensor(Shape{2, 1, 3, 3}, rng);
  Tensor b = Tensor::zeros(Shape{2}, true);
  Tape tape;
  Tensor loss = mean(tape, relu(tape, conv2d(tape, x, k, b, 1, 1)));
  tape.backward(loss);
  const auto first = as_vector(k.grad());
  tape.backward(loss);
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_DOUBLE_EQ(k.grad()[i], 2.0 * first[i]);
  k.zero_grad();
  x.zero_grad();
  b.zero_grad();
  tape.backward(loss);
  EXPECT_EQ(as_vector(k.grad()), first);
}

TEST(BackwardTest, CompositeConvReluMseMatchesFiniteDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor(Shape{2, 1, 6, 6}, rng, 0, 1, false);
    Tensor target = random_tensor(Shape{2, 1, 6, 6}, rng, 0, 1, false);
    Tensor k1 = random_tensor(Shape{3, 1, 3, 3}, rng);
    Tensor b1 = random_tensor(Shape{3}, rng, -0.1, 0.1);
    Tensor k2 = random_tensor(Shape{1, 3, 3, 3}, rng);
    Tensor b2 = random_tensor(Shape{1}, rng, -0.1, 0.1);
    auto eval = [&](Tape& tape) {
      Tensor h = relu(tape, conv2d(tape, x, k1, b1, 1, 1));
      Tensor y = conv2d(tape, h, k2, b2, 1, 1);
      Tensor d = sub(tape, y, target);
      return mean(tape, mul(tape, d, d));
    };
    Tape tape;
    tape.backward(eval(tape));
    auto f = [&] {
      Tape t(Tape::Mode::kInference);
      return eval(t).item();
    };
    for (Tensor* p : {&k1, &b1, &k2, &b2}) {
      EXPECT_LT(oracle::relative_error(p->grad(), oracle::numeric_gradient(*p, f)), 1e-6);
    }
  }
}

TEST(TapeTest, InferenceTapeRecordsNothing) {
  Tensor x = Tensor::full(Shape{3}, 1.0, true);
  Tape tape(Tape::Mode::kInference);
  Tensor y = exp(tape, x);
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_FALSE(y.requires_grad());
}

TEST(RngTest, StreamsAreReproducibleAndDistinct) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng s1 = Rng::substream(5, 1), s2 = Rng::substream(5, 2);
  EXPECT_NE(s1.next_u64(), s2.next_u64());
  double total = 0.0, sq = 0.0;
  Rng n(8);
  for (int i = 0; i < 20000; ++i) {
    const double z = n.normal();
    total += z;
    sq += z * z;
  }
  EXPECT_NEAR(total / 20000, 0.0, 0.03);
  EXPECT_NEAR(sq / 20000, 1.0, 0.05);
}

TEST(AdamTest, Examples) {
  {
    Tensor w = Tensor::scalar(1.0, true);
    std::vector<Tensor> params{w};
    auto state = OptimizerState::create(params, {.learning_rate = 0.1});
    Tape tape;
    tape.backward(mul(tape, w, w));
    adam_step(params, state);
    EXPECT_LT(std::abs(w.item()), 1.0);
    EXPECT_EQ(state.step_count, 1u);
  }
  {
    Tensor w(Shape{3}, {1, -2, 3}, true);
    std::vector<Tensor> params{w};
    auto state = OptimizerState::create(params);
    w.mutable_grad();
    adam_step(params, state);
    EXPECT_EQ(as_vector(w.values()), (std::vector<double>{1, -2, 3}));
  }
  {
    Tensor w = Tensor::scalar(0.0, true);
    std::vector<Tensor> params{w};
    auto state = OptimizerState::create(params, {.learning_rate = 0.05});
    for (int step = 0; step < 500; ++step) {
      w.zero_grad();
      Tape tape;
      Tensor d = affine(tape, w, 1.0, -3.0);
      tape.backward(mul(tape, d, d));
      adam_step(params, state);
    }
    EXPECT_LT(std::abs(w.item() - 3.0), 0.05);
    EXPECT_EQ(state.step_count, 500u);
  }
}

TEST(AdamTest, MissingGradIsInvalidState) {
  Tensor w = Tensor::scalar(1.0, true);
  std::vector<Tensor> params{w};
  auto state = OptimizerState::create(params);
  EXPECT_THROW(adam_step(params, state), InvalidState);
  EXPECT_THROW(OptimizerState::create(params, {.learning_rate = 0.0}), InvalidArgument);
}
