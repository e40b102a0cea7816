#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedids/flowlens.hpp"

namespace fedids {

enum class Activation : std::uint8_t { Tanh, Relu, Sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);  // throws InvalidArgument

// Dense layer y = W x + b with W stored row-major (out_dim x in_dim).
struct LayerParams {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  static LayerParams zeros(std::size_t in_dim, std::size_t out_dim);

  double& w(std::size_t row, std::size_t col) { return weights[row * in_dim + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in_dim + col]; }

  bool operator==(const LayerParams&) const = default;
};

// Every layer but the last applies `activation`; the output layer is linear.
// The first `encoder_layers` layers form the encoder.
struct AEModel {
  std::vector<LayerParams> layers;
  std::size_t encoder_layers = 0;
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  std::size_t latent_dim() const {
    return encoder_layers == 0 ? input_dim() : layers[encoder_layers - 1].out_dim;
  }
  std::vector<std::size_t> layer_dims() const;
  std::size_t parameter_count() const;

  bool operator==(const AEModel&) const = default;
};

// Throws ArchitectureMismatch when layers do not chain, the output width
// differs from the input width, or a parameter is not finite.
void validate(const AEModel& model);
bool same_architecture(const AEModel& a, const AEModel& b);

// Gradients share the model's layer shapes.
using Gradients = std::vector<LayerParams>;

struct TrainConfig {
  double learning_rate = 0.012;
  std::size_t batch_size = 128;
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  // Global index of the first epoch; epoch e shuffles with stream (seed, first_epoch + e).
  std::uint64_t first_epoch = 0;
};

// d -> ceil(d/2) -> ceil(d/4) -> ceil(d/2) -> d, Glorot-uniform weights, zero biases.
AEModel init_model(std::size_t input_dim, Activation activation, std::uint64_t seed);

std::vector<double> encode(const AEModel& model, std::span<const double> x);
std::vector<double> decode(const AEModel& model, std::span<const double> h);
std::vector<double> reconstruct(const AEModel& model, std::span<const double> x);

// Mean squared difference between x and its reconstruction.
double reconstruction_error(const AEModel& model, std::span<const double> x);

// Mean reconstruction error over rows; 0 for an empty set.
double mean_reconstruction_error(const AEModel& model, const Matrix& rows);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

// Batch loss is the mean of per-row reconstruction errors.
LossAndGradients loss_and_gradients(const AEModel& model, std::span<const std::vector<double>> batch);

struct TrainResult {
  AEModel model;
  std::vector<double> epoch_loss;  // mean batch loss seen during each epoch
};

// Plain mini-batch SGD. Each epoch reshuffles rows and applies one step per
// batch in order.
TrainResult train_local(AEModel model, const Matrix& rows, const TrainConfig& config);

// model += scale * gradients
void apply_update(AEModel& model, const Gradients& gradients, double scale);

// Versioned text serialization. Numbers are written with 17 significant
// digits so a save/load cycle is bit-exact. A fitted feature schema may be
// stored alongside the model.
struct ModelFile {
  AEModel model;
  std::optional<FeatureSchema> schema;
};

std::string serialize_model(const AEModel& model, const FeatureSchema* schema = nullptr);
ModelFile deserialize_model(std::string_view text);
void save_model(const std::filesystem::path& path, const AEModel& model,
                const FeatureSchema* schema = nullptr);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace fedids
