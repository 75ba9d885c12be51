#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "deepsel/context_net.hpp"
#include "deepsel/errors.hpp"
#include "test_util.hpp"

using namespace deepsel;

namespace {

std::vector<NetSample> random_batch(Index d, Index m, Index n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.4);
  std::vector<NetSample> out;
  for (Index i = 0; i < n; ++i) {
    NetSample s;
    s.context = test::random_vec(d, rng);
    s.indicator = Vec::Zero(m);
    for (Index j = 0; j < m; ++j) s.indicator(j) = coin(rng) ? 1.0 : 0.0;
    s.cost = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    out.push_back(std::move(s));
  }
  return out;
}

/// Largest relative error between the analytic gradient and central differences.
double gradient_error(Activation act, double lambda_phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ContextNet net({4, 4, 3}, act, seed);
  net.set_standardization(test::random_vec(4, rng, -0.2, 0.2), test::random_vec(4, rng, 0.5, 2.0));
  for (auto& b : net.biases()) b = test::random_vec(b.size(), rng, -0.3, 0.3);
  const auto batch = random_batch(4, 2, 7, rng);
  const LossAndGradient lg = net_loss_grad(net, batch, lambda_phi);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = net_loss(net, batch, lambda_phi);
    param = keep - h;
    const double down = net_loss(net, batch, lambda_phi);
    param = keep;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
  };
  for (std::size_t l = 0; l < net.layers(); ++l) {
    Mat& w = net.weights()[l];
    for (Index i = 0; i < w.size(); ++i) probe(w.data()[i], lg.grad.weights[l].data()[i]);
    Vec& b = net.biases()[l];
    for (Index i = 0; i < b.size(); ++i) probe(b(i), lg.grad.biases[l](i));
  }
  return worst;
}

}  // namespace

TEST_CASE("backprop gradient matches central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CHECK(gradient_error(Activation::kTanh, 0.0, seed) < 1e-6);
    CHECK(gradient_error(Activation::kTanh, 0.05, seed) < 1e-6);
    CHECK(gradient_error(Activation::kRelu, 0.01, seed) < 1e-5);
  }
}

TEST_CASE("loss equals the mean squared residual of the linear head") {
  std::mt19937_64 rng(4);
  ContextNet net({3, 5, 4}, Activation::kTanh, 8);
  const auto batch = random_batch(3, 3, 5, rng);
  double want = 0.0;
  for (const auto& s : batch) {
    const NetOutput o = net.forward(s.context);
    const double e = o.theta.dot(s.indicator) + o.theta0 - s.cost;
    want += e * e;
  }
  CHECK(net_loss(net, batch, 0.0) == doctest::Approx(want / 5.0).epsilon(1e-12));
}

TEST_CASE("forward_batch agrees with forward") {
  std::mt19937_64 rng(5);
  ContextNet net({6, 8, 8, 11}, Activation::kRelu, 3);
  const Mat c = test::random_mat(6, 9, rng);
  net.fit_standardization(c);
  const Mat out = net.forward_batch(c);
  CHECK(out.rows() == 11);
  for (Index i = 0; i < c.cols(); ++i) {
    const NetOutput o = net.forward(c.col(i));
    CHECK((out.col(i).head(10) - o.theta).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out(10, i) == doctest::Approx(o.theta0).epsilon(1e-12));
  }
  CHECK(net.columns() == 10);
  CHECK(net.parameter_count() == 6 * 8 + 8 + 8 * 8 + 8 + 8 * 11 + 11);
}

TEST_CASE("initialisation is seeded and bounded") {
  const ContextNet a({10, 20, 5}, Activation::kRelu, 42);
  CHECK(a == ContextNet({10, 20, 5}, Activation::kRelu, 42));
  CHECK_FALSE(a == ContextNet({10, 20, 5}, Activation::kRelu, 43));
  const double bound = std::sqrt(6.0 / 30.0);
  CHECK(a.weights()[0].cwiseAbs().maxCoeff() <= bound);
  CHECK(a.biases()[0].isZero());
  CHECK_THROWS_AS(ContextNet({4}, Activation::kRelu, 1), Error);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  std::mt19937_64 rng(6);
  const auto data = random_batch(3, 4, 40, rng);
  const ContextNet net = make_context_net(data, {6}, Activation::kTanh, 11);
  TrainOptions opts;
  opts.lr = 0.0;
  opts.epochs = 3;
  opts.batch_size = 8;
  const TrainResult res = train_net(net, data, opts);
  for (std::size_t l = 0; l < net.layers(); ++l) {
    CHECK((res.net.weights()[l] - net.weights()[l]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((res.net.biases()[l] - net.biases()[l]).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK(res.train_loss.size() == 3);
  CHECK(res.val_loss.size() == 3);
}

TEST_CASE("fits a teacher with context-dependent linear coefficients") {
  const Index d = 3, m = 6;
  std::mt19937_64 rng(7);
  const Mat A = test::random_mat(m, d, rng);
  auto make = [&](Index n) {
    auto batch = random_batch(d, m, n, rng);
    for (auto& s : batch) s.cost = (A * s.context).dot(s.indicator) + 0.5 * s.context(0) + 2.0;
    return batch;
  };
  const auto train = make(2000);
  const auto test_set = make(300);
  TrainOptions opts;
  opts.lr = 3e-3;
  opts.epochs = 150;
  opts.batch_size = 32;
  opts.seed = 1;
  const ContextNet init = make_context_net(train, {32, 32}, Activation::kTanh, 5);
  const TrainResult res = train_net(init, train, opts);
  CHECK(res.train_loss.back() < res.train_loss.front());
  double sse = 0.0, sst = 0.0, mean = 0.0;
  for (const auto& s : test_set) mean += s.cost;
  mean /= static_cast<double>(test_set.size());
  for (const auto& s : test_set) {
    const NetOutput o = res.net.forward(s.context);
    const double pred = o.theta.dot(s.indicator) + o.theta0;
    sse += (pred - s.cost) * (pred - s.cost);
    sst += (s.cost - mean) * (s.cost - mean);
  }
  const double r2 = 1.0 - sse / sst;
  MESSAGE("teacher R^2 = " << r2);
  CHECK(r2 > 0.99);
}

TEST_CASE("training is deterministic for a fixed seed") {
  std::mt19937_64 rng(8);
  const auto data = random_batch(3, 4, 100, rng);
  TrainOptions opts;
  opts.epochs = 5;
  opts.batch_size = 16;
  opts.seed = 77;
  const ContextNet init = make_context_net(data, {8}, Activation::kRelu, 2);
  const TrainResult a = train_net(init, data, opts);
  const TrainResult b = train_net(init, data, opts);
  CHECK(a.net == b.net);
  CHECK(a.train_loss == b.train_loss);
  opts.seed = 78;
  CHECK_FALSE(train_net(init, data, opts).net == a.net);
}

TEST_CASE("non-finite costs or runaway steps report divergence") {
  std::mt19937_64 rng(9);
  auto data = random_batch(2, 3, 20, rng);
  const ContextNet init = make_context_net(data, {4}, Activation::kTanh, 1);
  TrainOptions opts;
  opts.epochs = 2;
  opts.validation_fraction = 0.0;
  opts.scale_targets = false;
  data[3].cost = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)train_net(init, data, opts);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kDivergence);
  }
  CHECK_THROWS_AS(train_net(init, {}, opts), Error);
}

TEST_CASE("model files round trip and reject malformed input") {
  const auto dir = test::scratch_dir("context_net");
  std::mt19937_64 rng(10);
  const auto data = random_batch(5, 7, 30, rng);
  ContextNet net = make_context_net(data, {6, 6}, Activation::kTanh, 3);
  net.meta.alpha = 0.125;
  net.meta.dims = {1, 1, 2, 3};
  net.meta.encoding = ContextEncoding::kDirect;
  net.meta.init_seed = 3;
  net.meta.validation_loss = 0.1 / 3.0;
  save_model(dir / "m.json", net);
  const ContextNet back = load_model(dir / "m.json");
  CHECK(back == net);
  CHECK(back.meta.alpha == 0.125);
  CHECK(back.meta.validation_loss == net.meta.validation_loss);
  CHECK(back.meta.encoding == ContextEncoding::kDirect);

  {
    std::ofstream(dir / "bad.json") << R"({"format": "something-else", "version": 1})";
  }
  auto kind_of = [](const std::filesystem::path& p) {
    try {
      (void)load_model(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  CHECK(kind_of(dir / "bad.json") == ErrorKind::kFormat);
  {
    std::ofstream(dir / "trunc.json") << "{\"format\": ";
  }
  CHECK(kind_of(dir / "trunc.json") == ErrorKind::kFormat);
  CHECK(kind_of(dir / "missing.json") == ErrorKind::kIo);
}
