#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace steer {

/// Fully connected ReLU network with a linear output layer.
struct NetSpec {
  int input_dim = 47;
  std::vector<int> hidden{128, 128};
  int output_dim = 11;

  bool operator==(const NetSpec&) const = default;

  /// input, hidden..., output
  std::vector<int> dims() const;
  std::size_t param_count() const;
};

void validate(const NetSpec& spec);

/// Weights and biases flattened layer by layer: W (out x in, row-major), then b.
struct ModelParams {
  NetSpec spec;
  std::vector<double> values;

  bool operator==(const ModelParams&) const = default;
  std::size_t size() const { return values.size(); }
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;
};

std::vector<DenseLayer> unflatten(const ModelParams& params);
ModelParams flatten(const NetSpec& spec, std::span<const DenseLayer> layers);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for every weight and bias.
ModelParams init_params(const NetSpec& spec, std::uint64_t seed);

using Batch = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd forward(const ModelParams& params, std::span<const double> state);
/// One row of Q-values per row of `states`.
Batch forward_batch(const ModelParams& params, const Batch& states);

/// Mean over the batch of (target - Q(s, a))^2 and its gradient with respect
/// to every parameter. Only the chosen action's output contributes.
double td_loss_and_gradient(const ModelParams& params, const Batch& states, std::span<const int> actions,
                            std::span<const double> targets, std::vector<double>& grad);

/// One plain gradient-descent step on the TD loss. Returns the loss evaluated
/// before the update; throws TrainingError if it or the new parameters are
/// not finite.
double td_step(ModelParams& params, const Batch& states, std::span<const int> actions,
               std::span<const double> targets, double lr);

// Checkpoint layout, all little-endian:
//   char[4] "SQNT" | u32 version (1) | u32 n_dims | u32 dims[n_dims]
//   | u64 seed | u64 param_count | f32 params[param_count]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, std::uint64_t seed);

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace steer
