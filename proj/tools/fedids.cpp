// Command-line front end: dataset generation, training, calibration,
// detection and the evaluation experiments.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedids/autoenc.hpp"
#include "fedids/detector.hpp"
#include "fedids/error.hpp"
#include "fedids/experiments.hpp"
#include "fedids/fedsim.hpp"
#include "fedids/flowlens.hpp"
#include "fedids/textio.hpp"
#include "fedids/trafficgen.hpp"

using namespace fedids;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct Options {
  std::optional<std::uint64_t> seed;

  // shared paths
  std::string packets, data, config, model, threshold, test, val, out, report;
  std::string model_out, threshold_out, telemetry, test_out, manifest, manifest_out;

  double tw = 1.0;
  std::string profile = "reference";
  std::size_t n = 0;
  std::vector<std::size_t> k_values{3, 6, 8, 10};
};

FedConfig load_config(const Options& o) {
  FedConfig c = o.config.empty() ? FedConfig{} : load_fed_config(o.config);
  if (o.seed) c.seed = *o.seed;
  validate(c);
  return c;
}

PreparedData prepare(const Options& o, const FedConfig& c) {
  PrepareOptions p;
  p.seed = c.seed;
  return prepare_dataset(load_dataset(o.data), p);
}

// Loads a model file that carries the fitted feature schema.
struct LoadedModel {
  AEModel model;
  FeatureSchema schema;
};

LoadedModel load_detector_model(const std::string& path) {
  auto file = load_model(path);
  if (!file.schema || !file.schema->fitted()) {
    throw Error(ErrorCode::SchemaNotFitted, "model file '" + path + "' has no fitted feature schema");
  }
  return {std::move(file.model), std::move(*file.schema)};
}

std::vector<FeatureVector> load_scaled(const std::string& path, const FeatureSchema& schema) {
  auto rows = load_dataset(path);
  for (auto& r : rows) r = apply_scaler(schema, r);
  return rows;
}

void print_report(const EvalReport& r) {
  auto show = [](const std::optional<double>& v) { return v ? textio::format_shortest(*v) : std::string("n/a"); };
  std::cout << r.name << ": accuracy=" << textio::format_shortest(r.accuracy) << " f1=" << show(r.f1)
            << " fpr=" << show(r.fpr) << " (tp=" << r.counts.tp << " tn=" << r.counts.tn
            << " fp=" << r.counts.fp << " fn=" << r.counts.fn << ")\n";
}

void cmd_featurize(const Options& o) {
  const auto packets = load_packet_csv(o.packets);
  std::vector<FeatureVector> rows;
  for (const auto& flow : extract_flows(packets, o.tw)) rows.push_back(featurize(flow));
  save_dataset(rows, o.out);
  std::cout << rows.size() << " flows from " << packets.size() << " packets\n";
}

void cmd_gen(const Options& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  std::vector<FeatureVector> rows;
  if (o.profile == "reference") {
    DatasetManifest m = o.manifest.empty() ? DatasetManifest::reference(seed) : load_manifest(o.manifest);
    if (o.seed) m.seed = *o.seed;
    if (o.manifest.empty()) m.tw = o.tw;
    validate(m);
    rows = build_reference_dataset(m);
    if (!o.manifest_out.empty()) textio::write_file(o.manifest_out, serialize_manifest(m));
  } else {
    if (o.n == 0) throw Error(ErrorCode::InvalidArgument, "--n must be >= 1 for a single profile");
    rows = generate_flows(TrafficProfile::for_label(parse_label(o.profile)), o.n, seed, o.tw);
  }
  save_dataset(rows, o.out);
  std::cout << rows.size() << " rows written to " << o.out << "\n";
}

void cmd_train_fed(const Options& o) {
  const auto config = load_config(o);
  const auto data = prepare(o, config);
  const auto trained = train_federated(data, config);
  save_model(o.model_out, trained.model, &data.schema);
  if (!o.threshold_out.empty()) save_threshold(o.threshold_out, trained.threshold);
  if (!o.telemetry.empty()) textio::write_file(o.telemetry, telemetry_csv(trained.telemetry));
  if (!o.test_out.empty()) {
    PrepareOptions p;
    p.seed = config.seed;
    save_dataset(split_dataset(load_dataset(o.data), p.ratios, p.seed).test, o.test_out);
  }
  std::cout << "rounds=" << trained.loss_history.size() << " final_loss="
            << (trained.loss_history.empty() ? std::string("n/a")
                                             : textio::format_shortest(trained.loss_history.back()))
            << " alpha=" << textio::format_shortest(trained.threshold.alpha)
            << " seconds=" << textio::format_shortest(trained.seconds) << "\n";
}

void cmd_train_local(const Options& o) {
  const auto config = load_config(o);
  const auto data = prepare(o, config);
  const auto trained = train_centralized(data, config, config.standalone_epochs);
  save_model(o.model_out, trained.model, &data.schema);
  if (!o.threshold_out.empty()) save_threshold(o.threshold_out, trained.threshold);
  std::cout << "epochs=" << trained.loss_history.size()
            << " alpha=" << textio::format_shortest(trained.threshold.alpha)
            << " seconds=" << textio::format_shortest(trained.seconds) << "\n";
}

void cmd_calibrate(const Options& o) {
  const auto m = load_detector_model(o.model);
  std::vector<double> re;
  for (const auto& r : load_scaled(o.val, m.schema)) {
    if (!is_attack(r.label)) re.push_back(reconstruction_error(m.model, r.values));
  }
  const auto t = calibrate_threshold(re);
  save_threshold(o.out, t);
  std::cout << "alpha=" << textio::format_shortest(t.alpha) << " n=" << t.n_validation << "\n";
}

void cmd_detect(const Options& o) {
  const auto m = load_detector_model(o.model);
  const auto t = load_threshold(o.threshold);
  const auto rows = load_scaled(o.data, m.schema);
  const auto result = detect_batch(m.model, t, rows);
  textio::write_file(o.out, verdict_csv(result.verdicts));
  std::size_t flagged = 0;
  for (const auto& v : result.verdicts) flagged += v.label == VerdictLabel::Malicious;
  std::cout << flagged << " of " << rows.size() << " flows flagged\n";
  if (result.confusion.total() > 0) print_report(make_report("labelled", result.confusion));
}

void cmd_eval(const Options& o) {
  const auto m = load_detector_model(o.model);
  const auto t = load_threshold(o.threshold);
  const auto report = evaluate(m.model, t, load_scaled(o.test, m.schema));
  textio::write_file(o.report, report_csv({report}));
  print_report(report);
  for (const auto& [label, sub] : report.per_attack) print_report(sub);
}

void cmd_per_attack(const Options& o) {
  const auto m = load_detector_model(o.model);
  const auto t = load_threshold(o.threshold);
  std::vector<EvalReport> reports;
  for (auto& [label, sub] : per_attack_eval(m.model, t, load_scaled(o.test, m.schema))) {
    print_report(sub);
    reports.push_back(std::move(sub));
  }
  textio::write_file(o.report, report_csv(reports));
}

void cmd_sweep(const Options& o) {
  const auto config = load_config(o);
  const auto rows = sweep_clients(prepare(o, config), config, o.k_values);
  for (const auto& r : rows) print_report(r.report);
  textio::write_file(o.report, sweep_csv(rows));
}

void cmd_central_vs_fed(const Options& o) {
  const auto config = load_config(o);
  const auto cmp = compare_central_vs_federated(prepare(o, config), config);
  print_report(cmp.centralized);
  print_report(cmp.federated);
  textio::write_file(o.report, report_csv({cmp.centralized, cmp.federated}));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Federated autoencoder intrusion detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Seed for generation, splitting and training");

  auto* featurize = app.add_subcommand("featurize", "Packet CSV to flow feature CSV");
  featurize->add_option("--packets", o.packets)->required();
  featurize->add_option("--tw", o.tw, "Time window in seconds")->capture_default_str();
  featurize->add_option("--out", o.out)->required();

  auto* gen = app.add_subcommand("gen", "Generate a synthetic labelled dataset");
  gen->add_option("--profile", o.profile)
      ->check(CLI::IsMember({"benign", "synflood", "udpflood", "reference"}))
      ->capture_default_str();
  gen->add_option("--n", o.n, "Flow count for a single profile");
  gen->add_option("--tw", o.tw)->capture_default_str();
  gen->add_option("--manifest", o.manifest, "Manifest for the reference dataset");
  gen->add_option("--manifest-out", o.manifest_out);
  gen->add_option("--out", o.out)->required();

  auto* train_fed = app.add_subcommand("train-fed", "Federated training and calibration");
  train_fed->add_option("--data", o.data)->required();
  train_fed->add_option("--config", o.config);
  train_fed->add_option("--model-out", o.model_out)->required();
  train_fed->add_option("--threshold-out", o.threshold_out);
  train_fed->add_option("--telemetry", o.telemetry);
  train_fed->add_option("--test-out", o.test_out, "Write the held-out test split (raw features)");

  auto* train_local = app.add_subcommand("train-local", "Stand-alone training on the pooled data");
  train_local->add_option("--data", o.data)->required();
  train_local->add_option("--config", o.config);
  train_local->add_option("--model-out", o.model_out)->required();
  train_local->add_option("--threshold-out", o.threshold_out);

  auto* calibrate = app.add_subcommand("calibrate", "Fit the detection threshold on benign rows");
  calibrate->add_option("--model", o.model)->required();
  calibrate->add_option("--val", o.val)->required();
  calibrate->add_option("--out", o.out)->required();

  auto* detect = app.add_subcommand("detect", "Score flows and write verdicts");
  detect->add_option("--model", o.model)->required();
  detect->add_option("--threshold", o.threshold)->required();
  detect->add_option("--data", o.data)->required();
  detect->add_option("--out", o.out)->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a detector or run an experiment");
  eval->require_subcommand(0, 1);
  eval->add_option("--model", o.model);
  eval->add_option("--threshold", o.threshold);
  eval->add_option("--test", o.test);
  eval->add_option("--report", o.report);

  auto* sweep = eval->add_subcommand("sweep-clients", "Metrics and wall time per client count");
  sweep->add_option("--data", o.data)->required();
  sweep->add_option("--config", o.config);
  sweep->add_option("--k", o.k_values, "Client counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--report", o.report)->required();

  auto* per_attack = eval->add_subcommand("per-attack", "One-vs-benign metrics per attack class");
  per_attack->add_option("--model", o.model)->required();
  per_attack->add_option("--threshold", o.threshold)->required();
  per_attack->add_option("--test", o.test)->required();
  per_attack->add_option("--report", o.report)->required();

  auto* cvf = eval->add_subcommand("central-vs-fed", "Centralized against federated training");
  cvf->add_option("--data", o.data)->required();
  cvf->add_option("--config", o.config);
  cvf->add_option("--report", o.report)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*featurize) cmd_featurize(o);
    else if (*gen) cmd_gen(o);
    else if (*train_fed) cmd_train_fed(o);
    else if (*train_local) cmd_train_local(o);
    else if (*calibrate) cmd_calibrate(o);
    else if (*detect) cmd_detect(o);
    else if (*sweep) cmd_sweep(o);
    else if (*per_attack) cmd_per_attack(o);
    else if (*cvf) cmd_central_vs_fed(o);
    else if (*eval) {
      if (o.model.empty() || o.threshold.empty() || o.test.empty() || o.report.empty()) {
        std::cerr << "eval needs --model, --threshold, --test and --report (or a subcommand)\n";
        return kExitValidation;
      }
      cmd_eval(o);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
