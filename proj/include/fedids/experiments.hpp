#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fedids/autoenc.hpp"
#include "fedids/detector.hpp"
#include "fedids/fedsim.hpp"
#include "fedids/flowlens.hpp"
#include "fedids/metrics.hpp"

namespace fedids {

struct PrepareOptions {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  double correlation_cutoff = 0.95;
};

// Scaled, filtered matrices ready for training. The correlation filter and
// the scaler are fitted on training rows only.
struct PreparedData {
  FeatureSchema schema;
  Matrix train;
  Matrix validation;
  std::vector<FeatureVector> test;
};

PreparedData prepare_dataset(const std::vector<FeatureVector>& rows, const PrepareOptions& options);

struct TrainedDetector {
  AEModel model;
  DetectionThreshold threshold;
  std::vector<double> loss_history;
  std::vector<RoundTelemetry> telemetry;  // empty for centralized training
  double seconds = 0.0;
};

TrainedDetector train_federated(const PreparedData& data, const FedConfig& config);

// Trains one model on the pooled client data (client order) from the same
// initial weights and with client 0's shuffle stream. `epochs` defaults to
// n_rounds * local_epochs, the federated epoch budget.
TrainedDetector train_centralized(const PreparedData& data, const FedConfig& config,
                                  std::optional<std::size_t> epochs = std::nullopt);

struct EvalReport {
  std::string name;
  ConfusionCounts counts;
  double accuracy = 0.0;
  std::optional<double> f1;
  std::optional<double> fpr;
  std::vector<std::pair<Label, EvalReport>> per_attack;
  double wall_time_seconds = 0.0;
  std::string config_snapshot;
};

// Throws EmptyConfusion when counts are empty.
EvalReport make_report(std::string name, const ConfusionCounts& counts);

// Overall report plus one-vs-benign sub-reports for each attack class present.
EvalReport evaluate(const AEModel& model, const DetectionThreshold& threshold,
                    const std::vector<FeatureVector>& test_rows);

// Throws MissingClass unless the rows hold benign and at least one attack class.
std::vector<std::pair<Label, EvalReport>> per_attack_eval(const AEModel& model,
                                                          const DetectionThreshold& threshold,
                                                          const std::vector<FeatureVector>& test_rows);

struct SweepRow {
  std::size_t k_clients = 0;
  EvalReport report;
};

std::vector<SweepRow> sweep_clients(const PreparedData& data, const FedConfig& base,
                                    const std::vector<std::size_t>& k_values);

struct Comparison {
  EvalReport centralized;
  EvalReport federated;
};

Comparison compare_central_vs_federated(const PreparedData& data, const FedConfig& config);

// name,tp,tn,fp,fn,accuracy,f1,fpr,seconds (undefined metrics left blank);
// per-attack rows are named <report>/<class>.
std::string report_csv(const std::vector<EvalReport>& reports);

// clients,accuracy,f1,fpr,seconds
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace fedids
