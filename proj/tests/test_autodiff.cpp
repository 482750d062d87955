#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cvf/nn/adamw.hpp"
#include "cvf/nn/mlp.hpp"
#include "support.hpp"

using namespace cvf;
using namespace cvf::nn;
using Catch::Approx;

namespace {

MlpParams single_layer(std::size_t in, std::size_t out, std::vector<double> w, std::vector<double> b) {
  MlpParams p;
  p.layers.push_back(DenseLayer{in, out, Activation::identity, std::move(w), std::move(b)});
  return p;
}

double dot(const DenseTensor& a, const DenseTensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("identity layer passes input through") {
  const auto p = single_layer(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0});
  const auto y = mlp_forward(p, DenseTensor::vector({1, 2, 3}));
  CHECK(y.data() == std::vector<double>{1, 2, 3});
}

TEST_CASE("affine scalar layer") {
  const auto p = single_layer(1, 1, {2}, {1});
  CHECK(mlp_forward(p, DenseTensor::vector({3}))[0] == 7.0);
}

TEST_CASE("two-layer tanh net matches scalar reference evaluation") {
  MlpParams p;
  p.layers.push_back({2, 3, Activation::tanh, {0.1, -0.2, 0.3, 0.05, -0.4, 0.25}, {0.01, -0.02, 0.03}});
  p.layers.push_back({3, 2, Activation::identity, {0.5, -0.1, 0.2, -0.3, 0.7, 0.4}, {0.1, -0.1}});
  const std::vector<double> x{0.7, -1.3};
  double h[3];
  for (int o = 0; o < 3; ++o) {
    double z = p.layers[0].bias[o];
    for (int i = 0; i < 2; ++i) z += p.layers[0].weight[o * 2 + i] * x[i];
    h[o] = std::tanh(z);
  }
  const auto y = mlp_forward(p, DenseTensor::vector(x));
  for (int o = 0; o < 2; ++o) {
    double ref = p.layers[1].bias[o];
    for (int i = 0; i < 3; ++i) ref += p.layers[1].weight[o * 3 + i] * h[i];
    CHECK(std::abs(y[o] - ref) < 1e-12);
  }
}

TEST_CASE("forward rejects mismatched width") {
  const auto p = single_layer(2, 1, {1, 1}, {0});
  CHECK_THROWS_AS(mlp_forward(p, DenseTensor::vector({1, 2, 3})), ShapeError);
  CHECK_THROWS_AS(mlp_backward(p, DenseTensor::vector({1, 2}), DenseTensor::vector({1, 2})), ShapeError);
}

TEST_CASE("zero upstream gives zero gradients") {
  Rng rng(3);
  const std::size_t hidden[] = {4, 4};
  const auto p = make_mlp(3, hidden, 2, Activation::tanh, rng);
  const auto g = mlp_backward(p, DenseTensor::vector({0.1, 0.2, 0.3}), DenseTensor::vector({0, 0}));
  g.params.for_each([](double v) { CHECK(v == 0.0); });
  for (double v : g.input.data()) CHECK(v == 0.0);
}

TEST_CASE("quadratic ||W x||^2 input gradient by hand") {
  const auto p = single_layer(2, 2, {1, 0, 0, 1}, {0, 0});
  const auto x = DenseTensor::vector({1, 2});
  const auto y = mlp_forward(p, x);
  DenseTensor up = y;
  for (double& v : up.data()) v *= 2.0;  // dL/dy = 2 y
  const auto g = mlp_backward(p, x, up);
  CHECK(g.input.data() == std::vector<double>{2, 4});
}

TEST_CASE("gradient check against central differences over 100 random draws") {
  Rng rng(20240601);
  double worst = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    const std::size_t in = 1 + rng.below(4);
    const std::size_t out = 1 + rng.below(3);
    const std::size_t hidden[] = {2 + rng.below(5), 2 + rng.below(5)};
    const Activation act = draw % 2 ? Activation::tanh : Activation::gelu;
    auto p = make_mlp(in, hidden, out, act, rng, 1.0);
    const std::size_t rows = 1 + rng.below(3);
    DenseTensor x({rows, in});
    for (double& v : x.data()) v = rng.uniform(-1.5, 1.5);
    DenseTensor up({rows, out});
    for (double& v : up.data()) v = rng.uniform(-1, 1);

    const auto g = mlp_backward(p, x, up);
    auto loss = [&] { return dot(mlp_forward(p, x), up); };

    std::vector<double> analytic;
    g.params.for_each([&](double v) { analytic.push_back(v); });
    std::size_t k = 0;
    p.for_each([&](double& w) {
      const double fd = testing::central_difference(loss, w);
      worst = std::max(worst, testing::rel_err(analytic[k++], fd));
    });
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = testing::central_difference(loss, x[i]);
      worst = std::max(worst, testing::rel_err(g.input[i], fd));
    }
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("backward is linear in upstream") {
  Rng rng(5);
  const std::size_t hidden[] = {6, 5};
  const auto p = make_mlp(3, hidden, 2, Activation::gelu, rng, 1.0);
  const auto x = DenseTensor::matrix(2, 3, {0.3, -0.2, 0.9, -1.1, 0.4, 0.05});
  const auto u = DenseTensor::matrix(2, 2, {0.7, -0.3, 0.2, 1.1});
  const double alpha = -2.5;
  DenseTensor ua = u;
  for (double& v : ua.data()) v *= alpha;
  const auto g1 = mlp_backward(p, x, u);
  const auto g2 = mlp_backward(p, x, ua);
  std::vector<double> a, b;
  g1.params.for_each([&](double v) { a.push_back(alpha * v); });
  g2.params.for_each([&](double v) { b.push_back(v); });
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(a[i])));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(alpha * g1.input[i] - g2.input[i]) <= 1e-12);
}

TEST_CASE("forward is bit-deterministic") {
  Rng rng(9);
  const std::size_t hidden[] = {16, 16};
  const auto p = make_mlp(4, hidden, 3, Activation::tanh, rng);
  const auto x = DenseTensor::vector({0.1, 0.2, -0.3, 0.4});
  CHECK(mlp_forward(p, x) == mlp_forward(p, x));
}

TEST_CASE("batched rows match single-row evaluation") {
  Rng rng(10);
  const std::size_t hidden[] = {8};
  const auto p = make_mlp(2, hidden, 2, Activation::tanh, rng);
  const auto batch = mlp_forward(p, DenseTensor::matrix(2, 2, {0.5, -0.5, 1.0, 2.0}));
  const auto r0 = mlp_forward(p, DenseTensor::vector({0.5, -0.5}));
  const auto r1 = mlp_forward(p, DenseTensor::vector({1.0, 2.0}));
  CHECK(batch[0] == r0[0]);
  CHECK(batch[1] == r0[1]);
  CHECK(batch[2] == r1[0]);
  CHECK(batch[3] == r1[1]);
}

TEST_CASE("init scales final layer") {
  Rng rng(1);
  const std::size_t hidden[] = {4};
  const auto p = make_mlp(4, hidden, 2, Activation::tanh, rng, 0.0);
  for (double v : p.layers.back().weight) CHECK(v == 0.0);
  const auto y = mlp_forward(p, DenseTensor::vector({1, 2, 3, 4}));
  for (double v : y.data()) CHECK(v == 0.0);
  CHECK(p.layers.back().activation == Activation::identity);
}

TEST_CASE("adamw moves parameters against the gradient") {
  auto p = single_layer(1, 1, {1.0}, {0.0});
  auto g = p.zeros_like();
  g.layers[0].weight[0] = 2.0;
  g.layers[0].bias[0] = -1.0;
  AdamWState st;
  adamw_step(p, g, st, 0.1, {0.9, 0.999, 1e-8, 0.0});
  // First bias-corrected step has magnitude lr regardless of gradient scale.
  CHECK(p.layers[0].weight[0] == Approx(0.9).epsilon(1e-7));
  CHECK(p.layers[0].bias[0] == Approx(0.1).epsilon(1e-7));
  CHECK(st.step == 1);
}

TEST_CASE("adamw decoupled weight decay with zero gradient") {
  auto p = single_layer(1, 1, {2.0}, {0.0});
  const auto g = p.zeros_like();
  AdamWState st;
  adamw_step(p, g, st, 0.5, {0.9, 0.999, 1e-8, 0.01});
  CHECK(p.layers[0].weight[0] == Approx(2.0 - 0.5 * 0.01 * 2.0));
}

TEST_CASE("activation parsing") {
  CHECK(parse_activation("tanh") == Activation::tanh);
  CHECK(parse_activation("gelu") == Activation::gelu);
  CHECK_THROWS_AS(parse_activation("relu6"), ParameterError);
}
