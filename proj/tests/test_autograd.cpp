// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "ndater/adam.hpp"
#include "ndater/autograd.hpp"
#include "ndater/checkpoint.hpp"
#include "oracles.hpp"

using namespace ndater;

namespace {

using Loss = std::function<Var<double>(Tape<double>&, Var<double>)>;

// Backprop gradient of loss(x) against two-point differences, per element.
void check_input_gradient(const Tensor<double>& x0, const Loss& loss, double tol = 1e-7) {
  Tape<double> tape;
  const auto x = tape.variable(x0);
  tape.backward(loss(tape, x));
  const Tensor<double> analytic = tape.grad(x);
  Tensor<double> probe = x0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double numeric = oracle::central_difference<double>(
        [&] {
          Tape<double> t;
          return loss(t, t.variable(probe)).value()[0];
        },
        &probe[i]);
    CHECK(analytic[i] == doctest::Approx(numeric).epsilon(tol).scale(1.0));
  }
}

Tensor<double> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return uniform_tensor<double>({r, c}, 1.0, rng);
}

}  // namespace

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor<double>({0, 3}), DimensionError);
  auto a = Tensor<double>::matrix(2, 3, 1.0);
  CHECK_THROWS_AS(a += Tensor<double>::matrix(3, 2), DimensionError);
  CHECK_THROWS_AS(Tensor<double>::from_rows({{1, 2}, {3}}), DimensionError);
  const auto t = Tensor<double>::from_rows({{1, 2, 3}, {4, 5, 6}});
  CHECK(t(1, 2) == 6);
  CHECK(t.cast<float>()(0, 1) == 2.0f);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>::matrix(2, 3));
  auto b = tape.constant(Tensor<double>::matrix(2, 3));
  CHECK_THROWS_AS(matmul(a, b), DimensionError);
  CHECK_THROWS_AS(add(a, tape.constant(Tensor<double>::matrix(3, 2))), DimensionError);
}

TEST_CASE("backward needs a scalar root") {
  Tape<double> tape;
  auto a = tape.variable(Tensor<double>::matrix(2, 2));
  CHECK_THROWS_AS(tape.backward(a), DimensionError);
}

TEST_CASE("elementwise and structural ops match finite differences") {
  const auto x = random_matrix(3, 4, 1);
  const auto w = random_matrix(4, 2, 2);
  const auto weights = random_matrix(3, 4, 3);

  SUBCASE("matmul") {
    check_input_gradient(x, [&](Tape<double>& t, Var<double> v) { return sum(matmul(v, t.constant(w))); });
  }
  SUBCASE("add_bias broadcasts over rows") {
    const auto b = random_matrix(1, 4, 4);
    check_input_gradient(b, [&](Tape<double>& t, Var<double> v) {
      return weighted_sum(add_bias(t.constant(x), v), weights);
    });
  }
  SUBCASE("mul, sigmoid, tanh") {
    check_input_gradient(x, [&](Tape<double>&, Var<double> v) {
      return weighted_sum(mul(sigmoid(v), tanh(v)), weights);
    });
  }
  SUBCASE("relu away from zero") {
    check_input_gradient(x, [&](Tape<double>&, Var<double> v) { return weighted_sum(relu(v), weights); });
  }
  SUBCASE("concat and slice") {
    check_input_gradient(x, [&](Tape<double>&, Var<double> v) {
      auto joined = concat_cols<double>({slice_cols(v, 2, 4), v});
      return weighted_sum(slice_cols(joined, 1, 5), weights);
    });
  }
  SUBCASE("row gather, group mean and stacking") {
    check_input_gradient(x, [&](Tape<double>&, Var<double> v) {
      auto g = gather_rows(v, {2, 0, 2});
      auto m = group_mean_rows(g, {{0, 1}, {2}, {0, 1, 2}});
      auto s = stack_rows<double>({row(m, 1), mean_rows(m), row(v, 0)});
      return weighted_sum(s, weights);
    });
  }
  SUBCASE("softmax cross-entropy") {
    const auto logits = random_matrix(1, 5, 9);
    check_input_gradient(logits, [&](Tape<double>&, Var<double> v) {
      return softmax_cross_entropy(scale(v, 3.0), 2);
    });
  }
}

TEST_CASE("gradients accumulate through shared subexpressions") {
  Tape<double> tape;
  auto x = tape.variable(Tensor<double>::from_rows({{2.0}}));
  auto y = mul(x, x);
  tape.backward(sum(add(y, y)));
  CHECK(tape.grad(x)[0] == doctest::Approx(8.0));
}

TEST_CASE("parameter leaves flush into Parameter::grad and accumulate across tapes") {
  Parameter<double> p{"p", Tensor<double>::from_rows({{1.0, -2.0}}), Tensor<double>::matrix(1, 2)};
  for (int i = 0; i < 2; ++i) {
    Tape<double> tape;
    tape.backward(sum(scale(tape.param(p), 3.0)));
  }
  CHECK(p.grad[0] == doctest::Approx(6.0));
  CHECK(p.grad[1] == doctest::Approx(6.0));
}

TEST_CASE("softmax is stable and normalized") {
  std::vector<double> logits = {1000.0, 1001.0, 999.0};
  const auto p = softmax<double>(logits);
  double total = 0.0;
  for (double v : p) {
    CHECK(std::isfinite(v));
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  Tape<double> tape;
  auto loss = softmax_cross_entropy(tape.constant(Tensor<double>::row_vector(logits)), 0);
  CHECK(loss.value()[0] == doctest::Approx(-std::log(p[0])));
  CHECK_THROWS_AS(softmax_cross_entropy(tape.constant(Tensor<double>::row_vector(logits)), 3), IndexError);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(5);
  Tape<double> tape;
  const auto ones = tape.constant(Tensor<double>::matrix(200, 100, 1.0));

  SUBCASE("inference is the identity") {
    auto out = dropout(ones, 0.8, false, rng);
    CHECK(out.value() == ones.value());
  }
  SUBCASE("training keeps about keep_prob of the units and preserves the mean") {
    auto out = dropout(ones, 0.8, true, rng);
    std::size_t kept = 0;
    double total = 0.0;
    for (double v : out.value().values()) {
      if (v != 0.0) {
        ++kept;
        CHECK(v == doctest::Approx(1.25));
      }
      total += v;
    }
    const double n = 20000.0;
    CHECK(static_cast<double>(kept) / n == doctest::Approx(0.8).epsilon(0.02));
    CHECK(total / n == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("keep probability must lie in (0, 1]") {
    CHECK_THROWS_AS(dropout(ones, 0.0, true, rng), ConfigError);
    CHECK_THROWS_AS(dropout(ones, 1.5, true, rng), ConfigError);
  }
}

TEST_CASE("adam first step moves by the learning rate") {
  ParameterStore<double> store;
  auto& p = store.add("p", Tensor<double>::matrix(1, 1));
  p.grad[0] = 1.0;
  AdamState<double> state;
  adam_step(store, state);
  CHECK(p.value[0] == doctest::Approx(-0.001).epsilon(1e-6));
  CHECK(state.step == 1);
}

TEST_CASE("adam matches a hand-run recurrence over several steps") {
  ParameterStore<double> store;
  auto& p = store.add("p", Tensor<double>::from_rows({{0.5, -1.0}}));
  AdamState<double> state;
  state.config.lr = 0.01;
  double x[2] = {0.5, -1.0}, m[2] = {0, 0}, v[2] = {0, 0};
  for (int t = 1; t <= 5; ++t) {
    for (int i = 0; i < 2; ++i) p.grad[i] = 2.0 * p.value[i];  // d/dx of x^2
    adam_step(store, state);
    for (int i = 0; i < 2; ++i) {
      const double g = 2.0 * x[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      CHECK(p.value[i] == doctest::Approx(x[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("adam with zero learning rate leaves parameters unchanged") {
  ParameterStore<float> store;
  auto& p = store.add("p", Tensor<float>::from_rows({{0.25f, 3.0f}}));
  p.grad.fill(7.0f);
  AdamState<float> state;
  state.config.lr = 0.0;
  adam_step(store, state);
  CHECK(p.value == Tensor<float>::from_rows({{0.25f, 3.0f}}));
}

TEST_CASE("parameter store rejects duplicate names") {
  ParameterStore<double> store;
  store.add("w", Tensor<double>::matrix(1, 1));
  CHECK_THROWS_AS(store.add("w", Tensor<double>::matrix(1, 1)), ConfigError);
}

TEST_CASE_TEMPLATE("checkpoint round trip is bit-exact", Real, float, double) {
  std::mt19937_64 rng(11);
  ParameterStore<Real> store;
  store.add("a", uniform_tensor<Real>({3, 4}, 1.0, rng));
  store.add("b.c", uniform_tensor<Real>({1, 7}, 100.0, rng));
  const auto path = (std::filesystem::temp_directory_path() / "ndater_ckpt_test.bin").string();
  save_checkpoint(path, store, "{\"k\":1}");

  ParameterStore<Real> loaded;
  const auto header = load_checkpoint(path, loaded);
  CHECK(header.metadata == "{\"k\":1}");
  CHECK(header.scalar_bytes == sizeof(Real));
  CHECK(loaded.names() == store.names());
  for (const auto& [name, p] : store) {
    const auto& q = loaded.at(name);
    REQUIRE(q.value.shape() == p.value.shape());
    CHECK(std::memcmp(q.value.data(), p.value.data(), p.value.size() * sizeof(Real)) == 0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint errors") {
  const auto path = (std::filesystem::temp_directory_path() / "ndater_ckpt_bad.bin").string();
  ParameterStore<float> store;
  store.add("a", Tensor<float>::matrix(2, 2, 1.0f));
  save_checkpoint(path, store, "{}");

  SUBCASE("precision mismatch") {
    ParameterStore<double> other;
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
  }
  SUBCASE("shape mismatch") {
    ParameterStore<float> other;
    other.add("a", Tensor<float>::matrix(3, 2));
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
  }
  SUBCASE("truncated file") {
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 3);
    ParameterStore<float> other;
    CHECK_THROWS_AS(load_checkpoint(path, other), CheckpointError);
  }
  SUBCASE("bad magic") {
    std::ofstream(path, std::ios::binary | std::ios::trunc) << "garbage!";
    CHECK_THROWS_AS(peek_checkpoint(path), CheckpointError);
  }
  std::filesystem::remove(path);
}
