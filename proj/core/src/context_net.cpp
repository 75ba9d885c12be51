#include "deepsel/context_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "deepsel/errors.hpp"
#include "deepsel/rng.hpp"

namespace deepsel {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorKind::kUnknownKind, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation act) noexcept {
  return act == Activation::kRelu ? "relu" : "tanh";
}

ContextNet::ContextNet(std::vector<Index> layer_sizes, Activation act, std::uint64_t seed)
    : sizes_(std::move(layer_sizes)), act_(act) {
  if (sizes_.size() < 2) throw Error(ErrorKind::kInvalidArgument, "network needs >= 2 layer sizes");
  for (Index s : sizes_) {
    if (s < 1) throw Error(ErrorKind::kInvalidArgument, "layer sizes must be positive");
  }
  if (sizes_.back() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "output layer must have M+1 >= 2 units");
  }
  Rng rng = make_rng(seed, 0, StreamPurpose::kInit);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const Index fan_in = sizes_[l];
    const Index fan_out = sizes_[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Mat w(fan_out, fan_in);
    for (Index j = 0; j < fan_in; ++j) {
      for (Index i = 0; i < fan_out; ++i) w(i, j) = dist(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vec::Zero(fan_out));
  }
  mean_ = Vec::Zero(sizes_.front());
  scale_ = Vec::Ones(sizes_.front());
  meta.init_seed = seed;
}

std::size_t ContextNet::parameter_count() const noexcept {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

void ContextNet::set_standardization(Vec mean, Vec scale) {
  if (mean.size() != input_dim() || scale.size() != input_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "standardisation statistics must have d_in entries");
  }
  if ((scale.array() <= 0.0).any()) {
    throw Error(ErrorKind::kInvalidParameter, "standardisation scale must be positive");
  }
  mean_ = std::move(mean);
  scale_ = std::move(scale);
}

void ContextNet::fit_standardization(const Mat& contexts) {
  if (contexts.rows() != input_dim() || contexts.cols() < 1) {
    throw Error(ErrorKind::kDimensionMismatch, "contexts must be d_in x n with n >= 1");
  }
  Vec mean = contexts.rowwise().mean();
  Vec scale(input_dim());
  for (Index i = 0; i < input_dim(); ++i) {
    const double var = (contexts.row(i).array() - mean(i)).square().mean();
    const double sd = std::sqrt(var);
    scale(i) = sd > 1e-12 ? sd : 1.0;
  }
  set_standardization(std::move(mean), std::move(scale));
}

Mat ContextNet::standardize(const Mat& contexts) const {
  return (contexts.colwise() - mean_).array().colwise() / scale_.array();
}

namespace {

void activate(Mat& z, Activation act) {
  if (act == Activation::kRelu) {
    z = z.cwiseMax(0.0);
  } else {
    z = z.array().tanh();
  }
}

}  // namespace

Mat ContextNet::forward_batch(const Mat& contexts) const {
  if (contexts.rows() != input_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "context has dimension " +
                                                   std::to_string(contexts.rows()) +
                                                   ", network expects " + std::to_string(input_dim()));
  }
  Mat a = standardize(contexts);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Mat z = weights_[l] * a;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) activate(z, act_);
    a = std::move(z);
  }
  return a;
}

NetOutput ContextNet::forward(const Vec& context) const {
  const Mat out = forward_batch(context);
  const Index m = columns();
  return {out.col(0).head(m), out(m, 0)};
}

bool ContextNet::operator==(const ContextNet& o) const {
  if (sizes_ != o.sizes_ || act_ != o.act_ || weights_.size() != o.weights_.size()) return false;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (weights_[l] != o.weights_[l] || biases_[l] != o.biases_[l]) return false;
  }
  return mean_ == o.mean_ && scale_ == o.scale_ && meta.alpha == o.meta.alpha &&
         meta.dims == o.meta.dims && meta.encoding == o.meta.encoding &&
         meta.init_seed == o.meta.init_seed;
}

/// Batched forward/backward pass over column-stacked samples.
struct NetBackprop {
  static double run(const ContextNet& net, const Mat& contexts, const Mat& indicators,
                    const Vec& costs, double lambda_phi, NetGradient* grad) {
    const std::size_t n_layers = net.weights_.size();
    const Index batch = contexts.cols();
    const Index m = net.columns();
    if (indicators.rows() != m) {
      throw Error(ErrorKind::kDimensionMismatch, "indicator length " +
                                                     std::to_string(indicators.rows()) +
                                                     " differs from network M " + std::to_string(m));
    }
    std::vector<Mat> acts;  // acts[l] is the input to layer l
    acts.reserve(n_layers);
    acts.push_back(net.standardize(contexts));
    Mat out;
    for (std::size_t l = 0; l < n_layers; ++l) {
      Mat z = net.weights_[l] * acts.back();
      z.colwise() += net.biases_[l];
      if (l + 1 < n_layers) {
        activate(z, net.act_);
        acts.push_back(std::move(z));
      } else {
        out = std::move(z);
      }
    }
    // e_i = theta_i^T s_i + theta0_i - J_i
    const Vec pred = (out.topRows(m).cwiseProduct(indicators)).colwise().sum().transpose() +
                     out.row(m).transpose();
    const Vec err = pred - costs;
    for (Index i = 0; i < batch; ++i) {
      if (!std::isfinite(err(i))) {
        throw Error(ErrorKind::kDivergence,
                    "non-finite loss term at batch sample " + std::to_string(i));
      }
    }
    double loss = err.squaredNorm() / static_cast<double>(batch);
    if (lambda_phi > 0.0) {
      double reg = 0.0;
      for (std::size_t l = 0; l < n_layers; ++l) {
        reg += net.weights_[l].squaredNorm() + net.biases_[l].squaredNorm();
      }
      loss += lambda_phi * reg;
    }
    if (!grad) return loss;

    grad->weights.resize(n_layers);
    grad->biases.resize(n_layers);
    // dL/d out_i = (2/B) e_i [s_i; 1]
    Mat delta(m + 1, batch);
    const Vec scale = (2.0 / static_cast<double>(batch)) * err;
    delta.topRows(m) = indicators * scale.asDiagonal();
    delta.row(m) = scale.transpose();
    for (std::size_t l = n_layers; l-- > 0;) {
      grad->weights[l].noalias() = delta * acts[l].transpose();
      grad->biases[l] = delta.rowwise().sum();
      if (lambda_phi > 0.0) {
        grad->weights[l] += 2.0 * lambda_phi * net.weights_[l];
        grad->biases[l] += 2.0 * lambda_phi * net.biases_[l];
      }
      if (l == 0) break;
      Mat back = net.weights_[l].transpose() * delta;
      const Mat& a = acts[l];
      if (net.act_ == Activation::kRelu) {
        back = back.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
      } else {
        back = back.cwiseProduct((1.0 - a.array().square()).matrix());
      }
      delta = std::move(back);
    }
    return loss;
  }
};

namespace {

struct PackedBatch {
  Mat contexts;
  Mat indicators;
  Vec costs;
};

PackedBatch pack(std::span<const NetSample> samples, std::span<const std::size_t> order,
                 double cost_scale) {
  if (order.empty()) throw Error(ErrorKind::kInvalidArgument, "batch must not be empty");
  const auto& first = samples[order[0]];
  PackedBatch pb{Mat(first.context.size(), static_cast<Index>(order.size())),
                 Mat(first.indicator.size(), static_cast<Index>(order.size())),
                 Vec(static_cast<Index>(order.size()))};
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& s = samples[order[k]];
    if (s.context.size() != pb.contexts.rows() || s.indicator.size() != pb.indicators.rows()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "sample " + std::to_string(order[k]) + " has inconsistent dimensions");
    }
    pb.contexts.col(static_cast<Index>(k)) = s.context;
    pb.indicators.col(static_cast<Index>(k)) = s.indicator;
    pb.costs(static_cast<Index>(k)) = s.cost / cost_scale;
  }
  return pb;
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

LossAndGradient net_loss_grad(const ContextNet& net, std::span<const NetSample> batch,
                              double lambda_phi) {
  const auto order = iota_n(batch.size());
  const PackedBatch pb = pack(batch, order, 1.0);
  LossAndGradient out;
  out.loss = NetBackprop::run(net, pb.contexts, pb.indicators, pb.costs, lambda_phi, &out.grad);
  return out;
}

double net_loss(const ContextNet& net, std::span<const NetSample> batch, double lambda_phi) {
  const auto order = iota_n(batch.size());
  const PackedBatch pb = pack(batch, order, 1.0);
  return NetBackprop::run(net, pb.contexts, pb.indicators, pb.costs, lambda_phi, nullptr);
}

TrainResult train_net(ContextNet net, std::span<const NetSample> dataset, const TrainOptions& opts) {
  if (dataset.empty()) throw Error(ErrorKind::kInvalidArgument, "training dataset is empty");
  if (opts.batch_size < 1) throw Error(ErrorKind::kInvalidParameter, "batch_size must be >= 1");
  if (opts.epochs < 0) throw Error(ErrorKind::kInvalidParameter, "epochs must be >= 0");
  if (!(opts.lr >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "lr must be >= 0");

  auto order = iota_n(dataset.size());
  {
    Rng split_rng = make_rng(opts.seed, 0, StreamPurpose::kSplit);
    std::shuffle(order.begin(), order.end(), split_rng);
  }
  const auto n_val = static_cast<std::size_t>(
      std::floor(opts.validation_fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  if (train.empty()) throw Error(ErrorKind::kInvalidArgument, "no training samples after split");
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());

  // Power-of-two target scaling keeps the rescaling round trip exact.
  double cost_scale = 1.0;
  if (opts.scale_targets && train.size() > 1) {
    double mean = 0.0;
    for (auto i : train) mean += dataset[i].cost;
    mean /= static_cast<double>(train.size());
    double var = 0.0;
    for (auto i : train) var += (dataset[i].cost - mean) * (dataset[i].cost - mean);
    const double sd = std::sqrt(var / static_cast<double>(train.size()));
    if (sd > 0.0 && std::isfinite(sd)) cost_scale = std::exp2(std::round(std::log2(sd)));
  }
  net.weights().back() /= cost_scale;
  net.biases().back() /= cost_scale;

  const std::size_t n_layers = net.layers();
  std::vector<Mat> mw(n_layers), vw(n_layers);
  std::vector<Vec> mb(n_layers), vb(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    mw[l] = Mat::Zero(net.weights()[l].rows(), net.weights()[l].cols());
    vw[l] = mw[l];
    mb[l] = Vec::Zero(net.biases()[l].size());
    vb[l] = mb[l];
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double decay = 2.0 * opts.lambda_phi;
  const double sq_scale = cost_scale * cost_scale;

  TrainResult res;
  const PackedBatch val_batch = val.empty() ? PackedBatch{} : pack(dataset, val, cost_scale);
  long step = 0;
  const auto bs = static_cast<std::size_t>(opts.batch_size);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(opts.seed, static_cast<std::uint64_t>(epoch), StreamPurpose::kShuffle);
    std::shuffle(train.begin(), train.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train.size(); start += bs) {
      const std::size_t len = std::min(bs, train.size() - start);
      const PackedBatch pb = pack(dataset, std::span(train).subspan(start, len), cost_scale);
      NetGradient grad;
      double loss = 0.0;
      try {
        loss = NetBackprop::run(net, pb.contexts, pb.indicators, pb.costs, 0.0, &grad);
      } catch (const Error& e) {
        throw Error(ErrorKind::kDivergence, "training diverged at epoch " + std::to_string(epoch) +
                                                ", batch offset " + std::to_string(start) + ": " +
                                                e.what());
      }
      epoch_loss += loss * static_cast<double>(len);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t l = 0; l < n_layers; ++l) {
        mw[l] = kBeta1 * mw[l] + (1.0 - kBeta1) * grad.weights[l];
        vw[l] = kBeta2 * vw[l] + (1.0 - kBeta2) * grad.weights[l].cwiseAbs2();
        mb[l] = kBeta1 * mb[l] + (1.0 - kBeta1) * grad.biases[l];
        vb[l] = kBeta2 * vb[l] + (1.0 - kBeta2) * grad.biases[l].cwiseAbs2();
        if (opts.lr == 0.0) continue;
        net.weights()[l].array() -=
            opts.lr * ((mw[l].array() / c1) / ((vw[l].array() / c2).sqrt() + kEps) +
                       decay * net.weights()[l].array());
        net.biases()[l].array() -=
            opts.lr * ((mb[l].array() / c1) / ((vb[l].array() / c2).sqrt() + kEps) +
                       decay * net.biases()[l].array());
      }
    }
    const double train_loss = epoch_loss / static_cast<double>(train.size()) * sq_scale;
    if (!std::isfinite(train_loss)) {
      throw Error(ErrorKind::kDivergence,
                  "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    res.train_loss.push_back(train_loss);
    if (!val.empty()) {
      const double vl = NetBackprop::run(net, val_batch.contexts, val_batch.indicators,
                                         val_batch.costs, 0.0, nullptr);
      res.val_loss.push_back(vl * sq_scale);
    }
  }

  net.weights().back() *= cost_scale;
  net.biases().back() *= cost_scale;
  if (!res.val_loss.empty()) {
    net.meta.validation_loss = res.val_loss.back();
  } else if (!val.empty()) {
    const PackedBatch vb_orig = pack(dataset, val, 1.0);
    net.meta.validation_loss =
        NetBackprop::run(net, vb_orig.contexts, vb_orig.indicators, vb_orig.costs, 0.0, nullptr);
  } else {
    net.meta.validation_loss = res.train_loss.empty() ? 0.0 : res.train_loss.back();
  }
  res.net = std::move(net);
  return res;
}

ContextNet make_context_net(std::span<const NetSample> dataset, const std::vector<Index>& hidden,
                            Activation act, std::uint64_t seed) {
  if (dataset.empty()) throw Error(ErrorKind::kInvalidArgument, "dataset is empty");
  const Index d_in = dataset.front().context.size();
  const Index m = dataset.front().indicator.size();
  std::vector<Index> sizes{d_in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(m + 1);
  ContextNet net(sizes, act, seed);
  Mat contexts(d_in, static_cast<Index>(dataset.size()));
  double mean_cost = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    contexts.col(static_cast<Index>(i)) = dataset[i].context;
    mean_cost += dataset[i].cost;
  }
  net.fit_standardization(contexts);
  net.biases().back()(m) = mean_cost / static_cast<double>(dataset.size());
  return net;
}

}  // namespace deepsel
