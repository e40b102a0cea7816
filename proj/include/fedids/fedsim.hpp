#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedids/autoenc.hpp"
#include "fedids/detector.hpp"
#include "fedids/flowlens.hpp"

namespace fedids {

struct ServerRetrain {
  bool enabled = false;
  std::size_t sample_size = 1000;
  std::size_t retrain_epochs = 5;
};

struct FedConfig {
  std::size_t k_clients = 10;
  double c_fraction = 1.0;
  std::size_t batch_size = 128;
  std::size_t local_epochs = 15;
  double learning_rate = 0.012;
  std::size_t n_rounds = 20;
  std::uint64_t seed = 0;
  ServerRetrain server_retrain;
  // Epoch budget for stand-alone (non-federated) local training.
  std::size_t standalone_epochs = 50;
  Activation activation = Activation::Tanh;
  double mad_multiplier = kDefaultMadMultiplier;
  // Run the selected clients of a round on separate threads.
  bool parallel_clients = true;

  // Number of clients sampled per round: max(floor(C * K), 1).
  std::size_t clients_per_round() const;
};

// Throws InvalidArgument on out-of-range fields.
void validate(const FedConfig& config);

// Keys are the FedConfig field names; the short hyperparameter names
// (lr, Nb_clients, Nb_selected, Batch_size, R_samp_sz, Nb_rounds, Epochs,
// Nb_retrain_epochs, Nb_local_epochs) are accepted as aliases. Nb_selected
// is a client count and is converted to c_fraction.
FedConfig parse_fed_config(std::string_view text, FedConfig base = {});
FedConfig load_fed_config(const std::filesystem::path& path, FedConfig base = {});
std::string serialize_fed_config(const FedConfig& config);

struct ClientState {
  std::size_t client_id = 0;
  Matrix local_rows;

  std::size_t n_k() const { return local_rows.size(); }
};

// Seeded shuffle, then contiguous chunks whose sizes differ by at most one
// (the first `n % k` clients get the extra row).
std::vector<ClientState> partition_clients(const Matrix& benign_rows, std::size_t k_clients,
                                           std::uint64_t seed);

// Sorted ids of the clients sampled for round `round_index`.
std::vector<std::size_t> select_clients(std::size_t k_clients, double c_fraction,
                                        std::uint64_t seed, std::size_t round_index);

struct ClientUpdate {
  std::size_t n_k = 0;
  AEModel model;
};

// Entrywise sum_k (n_k / n) * w_k.
AEModel aggregate(const std::vector<ClientUpdate>& updates);

// Data held by the aggregation server.
struct ServerData {
  Matrix validation;    // benign rows for per-round loss and threshold calibration
  Matrix retrain_pool;  // benign rows used for optional post-aggregation fine-tuning
};

struct GlobalModel {
  std::size_t round_index = 0;
  AEModel model;
  std::vector<double> loss_history;
};

struct RoundTelemetry {
  std::size_t round = 0;
  double loss = 0.0;
  double seconds = 0.0;
  std::vector<std::size_t> selected;
};

// Seed of client `client_id`'s training stream; its local epoch e in round t
// uses shuffle stream (client_seed, t * E + e).
std::uint64_t client_seed(std::uint64_t seed, std::size_t client_id);

// One FedAvg round: sample clients, train each from the current global
// weights, average, optionally fine-tune on the server, record loss.
GlobalModel run_round(const GlobalModel& global, const std::vector<ClientState>& clients,
                      const ServerData& server, const FedConfig& config,
                      RoundTelemetry* telemetry = nullptr);

struct FederatedResult {
  GlobalModel global;
  DetectionThreshold threshold;
  std::vector<RoundTelemetry> telemetry;
};

// Runs config.n_rounds rounds from `initial`, then calibrates the threshold
// on the server's validation reconstruction errors.
FederatedResult run_training(const AEModel& initial, const std::vector<ClientState>& clients,
                             const ServerData& server, const FedConfig& config);

// round,loss,seconds
std::string telemetry_csv(const std::vector<RoundTelemetry>& telemetry);

}  // namespace fedids
