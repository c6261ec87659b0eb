#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "softseg/checkpoint.hpp"
#include "softseg/optim.hpp"
#include "softseg/synth.hpp"
#include "softseg/tape.hpp"
#include "softseg/train.hpp"
#include "softseg/unet.hpp"

using namespace softseg;

namespace {

Tensor random_tensor(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values) v = rng.normal();
  return t;
}

// Builds an op on fresh leaves and returns its output var.
using Builder = std::function<Tape::Var(Tape&, const std::vector<Tape::Var>&)>;

// Checks d(sum r * out)/d(input) for every leaf against central differences.
double op_gradient_error(std::vector<Tensor> inputs, const Builder& build, std::uint64_t seed) {
  Rng rng(seed);
  Tape tape;
  std::vector<Tape::Var> vars;
  for (const Tensor& t : inputs) vars.push_back(tape.variable(t));
  const Tape::Var out = build(tape, vars);
  std::vector<double> r(tape.value(out).numel());
  for (double& x : r) x = rng.normal();
  tape.backward(out, r);

  auto objective = [&] {
    Tape t2;
    std::vector<Tape::Var> v2;
    for (const Tensor& t : inputs) v2.push_back(t2.variable(t));
    const Tensor& y = t2.value(build(t2, v2));
    double s = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) s += r[i] * y.values[i];
    return s;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::vector<double> analytic(tape.grad(vars[k]).begin(), tape.grad(vars[k]).end());
    for (std::size_t i = 0; i < inputs[k].numel(); ++i) {
      const double fd = oracle::central_difference(inputs[k].values, i, 1e-5, objective);
      worst = std::max(worst, oracle::relative_error(analytic[i], fd, 1e-6));
    }
  }
  return worst;
}

Dataset tiny_dataset(std::size_t cases, std::size_t size, std::uint64_t seed) {
  SynthConfig sc;
  sc.size = size;
  sc.cases = cases;
  sc.seed = seed;
  Dataset data;
  const std::size_t n_val = validation_count(sc);
  for (std::size_t i = 0; i < cases; ++i) {
    SyntheticCase c = synthesize_case(sc, i);
    SoftMask fused = fuse_mean(AnnotationSet(c.annotations));
    (i + n_val >= cases ? data.val : data.train).emplace_back(std::move(c.image), std::move(fused));
  }
  return data;
}

}  // namespace

TEST_CASE("each tape op matches finite differences") {
  Rng rng(1);
  SUBCASE("conv2d") {
    for (std::size_t k : {1u, 3u, 5u}) {
      const double err = op_gradient_error(
          {random_tensor({2, 3, 5, 4}, rng), random_tensor({2, 3, k, k}, rng), random_tensor({2}, rng)},
          [](Tape& t, const auto& v) { return t.conv2d(v[0], v[1], v[2]); }, 10 + k);
      CHECK(err < 1e-6);
    }
  }
  SUBCASE("relu") {
    Tensor x = random_tensor({1, 2, 4, 4}, rng);
    for (double& v : x.values)
      if (std::abs(v) < 0.01) v = 0.5;  // stay away from the kink
    CHECK(op_gradient_error({x}, [](Tape& t, const auto& v) { return t.relu(v[0]); }, 2) < 1e-6);
  }
  SUBCASE("avg_pool2") {
    CHECK(op_gradient_error({random_tensor({2, 2, 4, 6}, rng)},
                            [](Tape& t, const auto& v) { return t.avg_pool2(v[0]); }, 3) < 1e-6);
  }
  SUBCASE("upsample2") {
    CHECK(op_gradient_error({random_tensor({2, 2, 3, 2}, rng)},
                            [](Tape& t, const auto& v) { return t.upsample2(v[0]); }, 4) < 1e-6);
  }
  SUBCASE("concat_channels") {
    CHECK(op_gradient_error({random_tensor({2, 1, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)},
                            [](Tape& t, const auto& v) { return t.concat_channels(v[0], v[1]); }, 5) < 1e-6);
  }
  SUBCASE("sigmoid") {
    CHECK(op_gradient_error({random_tensor({1, 1, 4, 4}, rng)},
                            [](Tape& t, const auto& v) { return t.sigmoid(v[0]); }, 6) < 1e-6);
  }
}

TEST_CASE("tape op values") {
  Tape t;
  const auto x = t.constant(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(t.value(t.avg_pool2(x)).values == std::vector<double>{2.5});
  const Tensor& up = t.value(t.upsample2(x));
  CHECK(up.shape == Shape{1, 1, 4, 4});
  CHECK(up.values[0] == 1);
  CHECK(up.values[5] == 1);
  CHECK(up.values[15] == 4);
  const Tensor& r = t.value(t.relu(t.constant(Tensor({1, 1, 1, 2}, {-1, 2}))));
  CHECK(r.values == std::vector<double>{0, 2});
  CHECK_THROWS(t.avg_pool2(t.constant(Tensor({1, 1, 3, 2}))));
}

TEST_CASE("backward on an empty tape is rejected") {
  Tape t;
  CHECK_THROWS_AS(t.backward(0, std::vector<double>{1.0}), std::logic_error);
  ForwardPass empty;
  CHECK_THROWS(softseg::backward(empty, LossValue{0.0, {}}));
}

TEST_CASE("whole-network gradient under both losses") {
  for (LossKind kind : {LossKind::cross_entropy, LossKind::dice}) {
    TinyUNetConfig cfg;
    cfg.base_channels = 2;
    cfg.depth = 1;
    gradcheck::Problem pb = gradcheck::make_problem(cfg, 2, 8, 3);
    const gradcheck::Result r = gradcheck::check(pb, kind);
    CHECK(r.checked == parameter_count(cfg));
    CHECK(r.worst_relative <= 1e-5);
  }
}

TEST_CASE("zero loss gradient gives zero parameter gradients") {
  TinyUNetConfig cfg;
  cfg.base_channels = 2;
  cfg.depth = 1;
  gradcheck::Problem pb = gradcheck::make_problem(cfg, 1, 8, 4);
  ForwardPass pass = forward(cfg, pb.params, pb.images);
  const std::vector<Tensor> grads =
      softseg::backward(pass, LossValue{1.0, std::vector<double>(64, 0.0)});
  REQUIRE(grads.size() == pb.params.size());
  for (const Tensor& g : grads)
    for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("cross entropy at p = g gives a vanishing head gradient") {
  TinyUNetConfig cfg;
  cfg.base_channels = 2;
  cfg.depth = 1;
  gradcheck::Problem pb = gradcheck::make_problem(cfg, 1, 8, 5);
  ForwardPass pass = forward(cfg, pb.params, pb.images);
  const std::vector<double> p = pass.probabilities().values;
  const std::vector<Tensor> grads = softseg::backward(pass, cross_entropy(p, p));
  for (const Tensor& g : grads)
    for (double v : g.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("parameter count has a closed form") {
  auto closed_form = [](std::size_t ci, std::size_t b, std::size_t depth) {
    std::size_t n = 0, in = ci;
    for (std::size_t l = 0; l < depth; ++l) {
      const std::size_t c = b << l;
      n += 9 * in * c + c;
      in = c;
    }
    for (std::size_t l = depth; l-- > 0;) {
      const std::size_t c = b << l;
      n += 9 * (in + c) * c + c;
      in = c;
    }
    return n + b + 1;
  };
  CHECK(parameter_count(TinyUNetConfig{}) == 30209);
  for (std::size_t ci : {1u, 3u})
    for (std::size_t b : {1u, 4u, 16u})
      for (std::size_t d : {1u, 2u, 3u})
        CHECK(parameter_count(TinyUNetConfig{ci, b, d}) == closed_form(ci, b, d));
  CHECK_THROWS(parameter_count(TinyUNetConfig{1, 0, 2}));
  CHECK_THROWS(parameter_count(TinyUNetConfig{1, 4, 0}));
}

TEST_CASE("initializers") {
  Rng rng(99);
  const Tensor k = kaiming_init({100000}, 8, rng);
  double s = 0, s2 = 0;
  for (double v : k.values) {
    s += v;
    s2 += v * v;
  }
  const double mean = s / 1e5, sd = std::sqrt(s2 / 1e5 - mean * mean);
  CHECK(std::abs(sd - 0.5) / 0.5 < 0.02);
  CHECK(std::abs(mean) < 0.01);

  const Tensor x = xavier_init({10000}, 3, 3, rng);
  for (double v : x.values) CHECK((v >= -1.0 && v <= 1.0));

  Rng a(5), b(5);
  CHECK(kaiming_init({4, 4}, 16, a).values == kaiming_init({4, 4}, 16, b).values);
  CHECK_THROWS_AS(kaiming_init({4}, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(xavier_init({4}, 2, 0, rng), std::invalid_argument);

  const Parameters p = init_parameters(TinyUNetConfig{}, rng);
  for (std::size_t i = 1; i < p.size(); i += 2)
    for (double v : p[i].values) CHECK(v == 0.0);
}

TEST_CASE("forward shape, range and determinism") {
  Rng rng(7);
  const TinyUNetConfig cfg;
  const Parameters params = init_parameters(cfg, rng);
  for (std::size_t side : {32u, 64u}) {
    Tensor img({1, 1, side, side});
    for (double& v : img.values) v = rng.uniform();
    const ForwardPass a = forward(cfg, params, img);
    CHECK(a.probabilities().shape == Shape{1, 1, side, side});
    for (double p : a.probabilities().values) CHECK((p > 0.0 && p < 1.0));
    const ForwardPass b = forward(cfg, params, img);
    CHECK(a.probabilities().values == b.probabilities().values);
  }
}

TEST_CASE("zeroed head outputs one half everywhere") {
  Rng rng(8);
  const TinyUNetConfig cfg;
  Parameters params = init_parameters(cfg, rng);
  for (double& v : params[params.size() - 2].values) v = 0.0;
  Tensor img({2, 1, 16, 16});
  for (double& v : img.values) v = rng.uniform();
  for (double p : forward(cfg, params, img).probabilities().values) CHECK(p == 0.5);
}

TEST_CASE("indivisible input sizes are rejected with the padding needed") {
  Rng rng(9);
  const TinyUNetConfig cfg;
  const Parameters params = init_parameters(cfg, rng);
  try {
    forward(cfg, params, Tensor({1, 1, 30, 33}));
    FAIL("expected rejection");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("multiples of 4") != std::string::npos);
    CHECK(msg.find("3x2") != std::string::npos);
  }
  CHECK_THROWS(forward(cfg, params, Tensor({1, 2, 32, 32})));
}

TEST_CASE("adam step") {
  std::vector<Tensor> params{Tensor({1}, 0.0)};
  AdamState st(params);
  adam_step(st, params, {Tensor({1}, 1.0)}, 0.1);
  CHECK(params[0].values[0] == doctest::Approx(-0.1).epsilon(1e-6));

  std::vector<Tensor> q{Tensor({3}, {1.0, -2.0, 3.0})};
  AdamState st2(q);
  adam_step(st2, q, {Tensor({3}, 0.0)}, 0.1);
  CHECK(q[0].values == std::vector<double>{1.0, -2.0, 3.0});

  CHECK_THROWS_AS(adam_step(st2, q, {Tensor({2}, 0.0)}, 0.1), std::invalid_argument);
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    Rng rng(31);
    std::vector<Tensor> p{kaiming_init({5, 5}, 5, rng)};
    AdamState st(p);
    for (int step = 0; step < 10; ++step) {
      Tensor g({5, 5});
      for (std::size_t i = 0; i < g.numel(); ++i) g.values[i] = std::sin(p[0].values[i] + step);
      adam_step(st, p, {g}, 0.01);
    }
    return p[0].values;
  };
  CHECK(run() == run());
}

TEST_CASE("cosine schedule") {
  const CosineSchedule s{1e-2, 1e-4, 100};
  CHECK(cosine_lr(s, 0) == 1e-2);
  CHECK(cosine_lr(s, 100) == 1e-4);
  CHECK(std::abs(cosine_lr(s, 50) - 5.05e-3) <= 1e-12);
  for (std::size_t i = 1; i <= 100; ++i) CHECK(cosine_lr(s, i) <= cosine_lr(s, i - 1));
  CHECK_THROWS_AS(cosine_lr(s, 101), std::out_of_range);
  CHECK_THROWS(CosineSchedule{1e-4, 1e-2, 10}.validate());
}

TEST_CASE("training is reproducible and reduces the loss") {
  const Dataset data = tiny_dataset(16, 16, 3);
  TinyUNetConfig model;
  model.base_channels = 4;
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 4;
  cfg.seed = 11;
  cfg.augment.enabled = false;
  const TrainResult a = train(data, model, cfg);
  const TrainResult b = train(data, model, cfg);
  REQUIRE(a.history.size() == 5);
  CHECK(a.history.back().train_loss == b.history.back().train_loss);
  for (std::size_t i = 0; i < a.params.size(); ++i) CHECK(a.params[i].values == b.params[i].values);
  CHECK(a.history.back().train_loss < a.history.front().train_loss);
  for (const EpochRecord& r : a.history) {
    CHECK(std::isfinite(r.train_loss));
    CHECK(std::isfinite(r.val_loss));
  }
  CHECK(a.history.back().lr == doctest::Approx(1e-4));
}

TEST_CASE("training rejects empty splits and bad configs") {
  Dataset data = tiny_dataset(6, 8, 1);
  TrainConfig cfg;
  TinyUNetConfig model;
  model.base_channels = 2;
  Dataset no_val{data.train, {}};
  CHECK_THROWS(train(no_val, model, cfg));
  Dataset no_train{{}, data.val};
  CHECK_THROWS(train(no_train, model, cfg));
  TrainConfig zero = cfg;
  zero.epochs = 0;
  CHECK_THROWS(zero.validate());
  TrainConfig zb = cfg;
  zb.batch_size = 0;
  CHECK_THROWS(zb.validate());
}

TEST_CASE("checkpoint round trip") {
  Rng rng(4);
  const TinyUNetConfig cfg{1, 3, 2};
  const Parameters p = init_parameters(cfg, rng);
  const std::string bytes = encode_checkpoint(p);
  CHECK(bytes.substr(0, 4) == "SSWT");
  const Parameters q = decode_checkpoint(bytes);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q[i].shape == p[i].shape);
    CHECK(q[i].values == p[i].values);
  }
  CHECK_THROWS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)));
  CHECK_THROWS(decode_checkpoint("XXXX" + bytes.substr(4)));

  TrainConfig tc;
  tc.loss = LossKind::dice;
  tc.epochs = 7;
  tc.augment.vflip_prob = 0.0;
  TinyUNetConfig m2;
  TrainConfig t2;
  config_from_json(config_to_json(cfg, tc), m2, t2);
  CHECK(m2 == cfg);
  CHECK(t2.loss == LossKind::dice);
  CHECK(t2.epochs == 7);
  CHECK(t2.augment == tc.augment);
}
