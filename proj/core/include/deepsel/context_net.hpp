#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "deepsel/datamodel.hpp"
#include "deepsel/types.hpp"

namespace deepsel {

enum class Activation { kRelu, kTanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation act) noexcept;

/// Provenance stored with a trained network.
struct NetMeta {
  double alpha = 0.0;
  ContextDims dims;
  ContextEncoding encoding = ContextEncoding::kRelative;
  std::uint64_t init_seed = 0;
  double validation_loss = 0.0;
};

struct NetOutput {
  Vec theta;
  double theta0 = 0.0;
};

/// MLP g_phi: context -> [theta; theta0] in R^{M+1}. Inputs are
/// standardised with stored per-dimension statistics before layer 1; the
/// last layer is affine.
class ContextNet {
 public:
  ContextNet() = default;
  /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
  ContextNet(std::vector<Index> layer_sizes, Activation act, std::uint64_t seed);

  [[nodiscard]] const std::vector<Index>& layer_sizes() const noexcept { return sizes_; }
  [[nodiscard]] Index input_dim() const noexcept { return sizes_.front(); }
  /// M, the number of influence coefficients.
  [[nodiscard]] Index columns() const noexcept { return sizes_.back() - 1; }
  [[nodiscard]] std::size_t layers() const noexcept { return weights_.size(); }
  [[nodiscard]] Activation activation() const noexcept { return act_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept;

  [[nodiscard]] std::vector<Mat>& weights() noexcept { return weights_; }
  [[nodiscard]] const std::vector<Mat>& weights() const noexcept { return weights_; }
  [[nodiscard]] std::vector<Vec>& biases() noexcept { return biases_; }
  [[nodiscard]] const std::vector<Vec>& biases() const noexcept { return biases_; }

  [[nodiscard]] const Vec& input_mean() const noexcept { return mean_; }
  [[nodiscard]] const Vec& input_scale() const noexcept { return scale_; }
  void set_standardization(Vec mean, Vec scale);
  /// Fits standardisation statistics on the columns of `contexts` (d x n).
  void fit_standardization(const Mat& contexts);

  NetMeta meta;

  [[nodiscard]] NetOutput forward(const Vec& context) const;
  /// One column of (M+1) outputs per context column.
  [[nodiscard]] Mat forward_batch(const Mat& contexts) const;

  bool operator==(const ContextNet& other) const;

 private:
  [[nodiscard]] Mat standardize(const Mat& contexts) const;

  std::vector<Index> sizes_;
  Activation act_ = Activation::kRelu;
  std::vector<Mat> weights_;
  std::vector<Vec> biases_;
  Vec mean_;
  Vec scale_;

  friend struct NetBackprop;
};

/// One (context, subset, cost) record seen by the network.
struct NetSample {
  Vec context;
  Vec indicator;  ///< 0/1 entries, length M
  double cost = 0.0;
};

struct NetGradient {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
};

struct LossAndGradient {
  double loss = 0.0;
  NetGradient grad;
};

/// loss = mean_i (theta(c_i)^T s_i + theta0(c_i) - J_i)^2 + lambda_phi |phi|^2
/// with its exact gradient by backpropagation.
LossAndGradient net_loss_grad(const ContextNet& net, std::span<const NetSample> batch,
                              double lambda_phi);

/// Loss only; same definition as net_loss_grad.
double net_loss(const ContextNet& net, std::span<const NetSample> batch, double lambda_phi);

struct TrainOptions {
  double lr = 1e-3;
  int epochs = 100;
  Index batch_size = 64;
  /// Applied as decoupled weight decay of strength 2 * lambda_phi.
  double lambda_phi = 0.0;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;
  /// Costs are divided by a power of two near their spread during
  /// optimisation; the last layer is rescaled back afterwards.
  bool scale_targets = true;
};

struct TrainResult {
  ContextNet net;
  std::vector<double> train_loss;  ///< data term, one entry per epoch
  std::vector<double> val_loss;    ///< empty when no validation split
};

/// Adam on mini-batches with a seeded shuffle and a seeded validation split.
TrainResult train_net(ContextNet net, std::span<const NetSample> dataset, const TrainOptions& opts);

/// Fresh network with standardisation fitted to the dataset contexts and the
/// bias output initialised to the mean cost.
ContextNet make_context_net(std::span<const NetSample> dataset, const std::vector<Index>& hidden,
                            Activation act, std::uint64_t seed);

void save_model(const std::filesystem::path& path, const ContextNet& net);
ContextNet load_model(const std::filesystem::path& path);

}  // namespace deepsel
