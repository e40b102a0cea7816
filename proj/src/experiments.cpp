#include "fedids/experiments.hpp"

#include <algorithm>
#include <chrono>

#include "fedids/error.hpp"
#include "fedids/textio.hpp"

namespace fedids {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix scaled_values(const FeatureSchema& schema, const std::vector<FeatureVector>& rows) {
  Matrix out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(apply_scaler(schema, r.values));
  return out;
}

Matrix pooled(const std::vector<ClientState>& clients) {
  Matrix rows;
  for (const auto& c : clients) rows.insert(rows.end(), c.local_rows.begin(), c.local_rows.end());
  return rows;
}

DetectionThreshold calibrate_on(const AEModel& model, const Matrix& validation, double multiplier) {
  std::vector<double> re;
  re.reserve(validation.size());
  for (const auto& row : validation) re.push_back(reconstruction_error(model, row));
  return calibrate_threshold(re, multiplier);
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? textio::format_shortest(*v) : std::string{};
}

}  // namespace

PreparedData prepare_dataset(const std::vector<FeatureVector>& rows, const PrepareOptions& options) {
  const auto split = split_dataset(rows, options.ratios, options.seed);
  Matrix raw_train;
  raw_train.reserve(split.train.size());
  for (const auto& r : split.train) raw_train.push_back(r.values);

  PreparedData data;
  data.schema = FeatureSchema::standard();
  if (!raw_train.empty() && raw_train.front().size() != data.schema.names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rows do not match the standard feature schema");
  }
  data.schema.retained_indices = correlation_filter(raw_train, options.correlation_cutoff);
  data.schema = fit_scaler(std::move(data.schema), raw_train);
  data.train = scaled_values(data.schema, split.train);
  data.validation = scaled_values(data.schema, split.validation);
  data.test.reserve(split.test.size());
  for (const auto& r : split.test) data.test.push_back(apply_scaler(data.schema, r));
  return data;
}

TrainedDetector train_federated(const PreparedData& data, const FedConfig& config) {
  validate(config);
  const auto start = Clock::now();
  const auto clients = partition_clients(data.train, config.k_clients, config.seed);
  const ServerData server{data.validation, data.train};
  const auto initial = init_model(data.schema.input_dim(), config.activation, config.seed);
  auto run = run_training(initial, clients, server, config);

  TrainedDetector out;
  out.model = std::move(run.global.model);
  out.threshold = run.threshold;
  out.loss_history = std::move(run.global.loss_history);
  out.telemetry = std::move(run.telemetry);
  out.seconds = seconds_since(start);
  return out;
}

TrainedDetector train_centralized(const PreparedData& data, const FedConfig& config,
                                  std::optional<std::size_t> epochs) {
  validate(config);
  const auto start = Clock::now();
  const auto rows = pooled(partition_clients(data.train, config.k_clients, config.seed));
  const auto initial = init_model(data.schema.input_dim(), config.activation, config.seed);
  TrainConfig tc{config.learning_rate, config.batch_size,
                 epochs.value_or(config.n_rounds * config.local_epochs), client_seed(config.seed, 0), 0};

  TrainedDetector out;
  if (tc.epochs == 0) {
    out.model = initial;
  } else {
    auto trained = train_local(initial, rows, tc);
    out.model = std::move(trained.model);
    out.loss_history = std::move(trained.epoch_loss);
  }
  out.threshold = calibrate_on(out.model, data.validation, config.mad_multiplier);
  out.seconds = seconds_since(start);
  return out;
}

EvalReport make_report(std::string name, const ConfusionCounts& counts) {
  EvalReport r;
  r.name = std::move(name);
  r.counts = counts;
  r.accuracy = accuracy(counts);
  r.f1 = f1(counts);
  r.fpr = fpr(counts);
  return r;
}

namespace {

std::vector<std::pair<Label, EvalReport>> one_vs_benign(const std::vector<Verdict>& verdicts,
                                                       const std::vector<FeatureVector>& rows,
                                                       const std::string& parent) {
  std::vector<std::pair<Label, EvalReport>> out;
  for (Label attack : {Label::SynFlood, Label::UdpFlood}) {
    ConfusionCounts c;
    bool present = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const bool flagged = verdicts[i].label == VerdictLabel::Malicious;
      if (rows[i].label == attack) {
        present = true;
        (flagged ? c.tp : c.fn) += 1;
      } else if (rows[i].label == Label::Benign) {
        (flagged ? c.fp : c.tn) += 1;
      }
    }
    if (present && c.tn + c.fp > 0) {
      out.emplace_back(attack, make_report(parent + "/" + std::string(to_string(attack)), c));
    }
  }
  return out;
}

}  // namespace

EvalReport evaluate(const AEModel& model, const DetectionThreshold& threshold,
                    const std::vector<FeatureVector>& test_rows) {
  const auto start = Clock::now();
  const auto result = detect_batch(model, threshold, test_rows);
  auto report = make_report("overall", result.confusion);
  report.per_attack = one_vs_benign(result.verdicts, test_rows, report.name);
  report.wall_time_seconds = seconds_since(start);
  return report;
}

std::vector<std::pair<Label, EvalReport>> per_attack_eval(const AEModel& model,
                                                          const DetectionThreshold& threshold,
                                                          const std::vector<FeatureVector>& test_rows) {
  const bool has_benign = std::any_of(test_rows.begin(), test_rows.end(),
                                      [](const auto& r) { return r.label == Label::Benign; });
  const bool has_attack = std::any_of(test_rows.begin(), test_rows.end(),
                                      [](const auto& r) { return is_attack(r.label); });
  if (!has_benign || !has_attack) {
    throw Error(ErrorCode::MissingClass, "per-attack evaluation needs benign and attack rows");
  }
  const auto result = detect_batch(model, threshold, test_rows);
  return one_vs_benign(result.verdicts, test_rows, "overall");
}

std::vector<SweepRow> sweep_clients(const PreparedData& data, const FedConfig& base,
                                    const std::vector<std::size_t>& k_values) {
  if (k_values.empty()) throw Error(ErrorCode::InvalidArgument, "no client counts to sweep");
  std::vector<SweepRow> rows;
  for (auto k : k_values) {
    FedConfig config = base;
    config.k_clients = k;
    const auto start = Clock::now();
    const auto trained = train_federated(data, config);
    auto report = evaluate(trained.model, trained.threshold, data.test);
    report.name = "k=" + std::to_string(k);
    report.wall_time_seconds = seconds_since(start);
    report.config_snapshot = serialize_fed_config(config);
    rows.push_back(SweepRow{k, std::move(report)});
  }
  return rows;
}

Comparison compare_central_vs_federated(const PreparedData& data, const FedConfig& config) {
  Comparison out;
  {
    const auto start = Clock::now();
    const auto trained = train_centralized(data, config);
    out.centralized = evaluate(trained.model, trained.threshold, data.test);
    out.centralized.name = "centralized";
    out.centralized.wall_time_seconds = seconds_since(start);
    out.centralized.config_snapshot = serialize_fed_config(config);
  }
  {
    const auto start = Clock::now();
    const auto trained = train_federated(data, config);
    out.federated = evaluate(trained.model, trained.threshold, data.test);
    out.federated.name = "federated";
    out.federated.wall_time_seconds = seconds_since(start);
    out.federated.config_snapshot = serialize_fed_config(config);
  }
  return out;
}

std::string report_csv(const std::vector<EvalReport>& reports) {
  std::string out = "name,tp,tn,fp,fn,accuracy,f1,fpr,seconds\n";
  auto line = [&out](const EvalReport& r, const std::string& name, double seconds) {
    out += name + ',' + std::to_string(r.counts.tp) + ',' + std::to_string(r.counts.tn) + ',' +
           std::to_string(r.counts.fp) + ',' + std::to_string(r.counts.fn) + ',' +
           textio::format_shortest(r.accuracy) + ',' + optional_cell(r.f1) + ',' +
           optional_cell(r.fpr) + ',' + textio::format_shortest(seconds) + '\n';
  };
  for (const auto& r : reports) {
    line(r, r.name, r.wall_time_seconds);
    for (const auto& [label, sub] : r.per_attack) {
      line(sub, r.name + "/" + std::string(to_string(label)), r.wall_time_seconds);
    }
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "clients,accuracy,f1,fpr,seconds\n";
  for (const auto& row : rows) {
    const auto& r = row.report;
    out += std::to_string(row.k_clients) + ',' + textio::format_shortest(r.accuracy) + ',' +
           optional_cell(r.f1) + ',' + optional_cell(r.fpr) + ',' +
           textio::format_shortest(r.wall_time_seconds) + '\n';
  }
  return out;
}

}  // namespace fedids
