#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "fedids/error.hpp"
#include "fedids/experiments.hpp"
#include "fedids/trafficgen.hpp"

using namespace fedids;

namespace {

std::vector<FeatureVector> small_dataset() {
  DatasetManifest m;
  m.environments = {{"highway", {600, 300, 300}}};
  m.seed = 3;
  return build_reference_dataset(m);
}

const PreparedData& small_prepared() {
  static const PreparedData data = prepare_dataset(small_dataset(), {});
  return data;
}

const PreparedData& reference_prepared() {
  static const PreparedData data =
      prepare_dataset(build_reference_dataset(DatasetManifest::reference(0)), {});
  return data;
}

FedConfig quick_config() {
  FedConfig c;
  c.n_rounds = 4;
  c.local_epochs = 3;
  c.k_clients = 4;
  return c;
}

void check_consistent(const EvalReport& r) {
  const auto& c = r.counts;
  REQUIRE(c.total() > 0);
  CHECK(std::fabs(r.accuracy - static_cast<double>(c.tp + c.tn) / c.total()) <= 1e-12);
  if (r.f1) CHECK(std::fabs(*r.f1 - 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn)) <= 1e-12);
  if (r.fpr) CHECK(std::fabs(*r.fpr - static_cast<double>(c.fp) / (c.fp + c.tn)) <= 1e-12);
  for (double v : {r.accuracy, r.f1.value_or(0.0), r.fpr.value_or(0.0)}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

}  // namespace

TEST_CASE("prepare_dataset keeps attacks out of training") {
  const auto& d = small_prepared();
  CHECK(d.train.size() == 360);
  CHECK(d.validation.size() == 120);
  CHECK(d.test.size() == 720);
  CHECK(d.schema.fitted());
  std::size_t benign_test = 0;
  for (const auto& r : d.test) benign_test += r.label == Label::Benign;
  CHECK(benign_test == 120);
  for (const auto& row : d.train) {
    REQUIRE(row.size() == d.schema.input_dim());
    for (double v : row) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("evaluate produces consistent reports") {
  const auto& d = small_prepared();
  const auto trained = train_federated(d, quick_config());
  CHECK(trained.loss_history.size() == 4);
  const auto report = evaluate(trained.model, trained.threshold, d.test);
  check_consistent(report);
  REQUIRE(report.per_attack.size() == 2);
  CHECK(report.per_attack[0].first == Label::SynFlood);
  CHECK(report.per_attack[1].first == Label::UdpFlood);
  ConfusionCounts merged_attacks;
  for (const auto& [label, sub] : report.per_attack) {
    check_consistent(sub);
    CHECK(sub.counts.tn + sub.counts.fp == report.counts.tn + report.counts.fp);
    merged_attacks.tp += sub.counts.tp;
    merged_attacks.fn += sub.counts.fn;
  }
  CHECK(merged_attacks.tp == report.counts.tp);
  CHECK(merged_attacks.fn == report.counts.fn);

  // Deterministic per seed.
  const auto again = train_federated(d, quick_config());
  CHECK(again.model == trained.model);
  CHECK(evaluate(again.model, again.threshold, d.test).counts == report.counts);
}

TEST_CASE("per_attack_eval class handling") {
  const auto& d = small_prepared();
  const auto trained = train_federated(d, quick_config());

  std::vector<FeatureVector> syn_only;
  std::vector<FeatureVector> benign_only;
  for (const auto& r : d.test) {
    if (r.label != Label::UdpFlood) syn_only.push_back(r);
    if (r.label == Label::Benign) benign_only.push_back(r);
  }
  const auto one = per_attack_eval(trained.model, trained.threshold, syn_only);
  REQUIRE(one.size() == 1);
  CHECK(one[0].first == Label::SynFlood);
  CHECK_THROWS_AS(per_attack_eval(trained.model, trained.threshold, benign_only), Error);
  CHECK_THROWS_AS(per_attack_eval(trained.model, trained.threshold, {}), Error);

  // A threshold below every score flags everything, one above flags nothing.
  DetectionThreshold low;
  low.alpha = -1.0;
  for (const auto& [label, sub] : per_attack_eval(trained.model, low, d.test)) {
    CHECK(sub.counts.fn == 0);
    CHECK(sub.counts.tn == 0);
  }
  DetectionThreshold high;
  high.alpha = std::numeric_limits<double>::max();
  for (const auto& [label, sub] : per_attack_eval(trained.model, high, d.test)) {
    CHECK(sub.counts.tp == 0);
    CHECK(sub.f1.value_or(0.0) == 0.0);
  }
}

TEST_CASE("per-attack metrics stay close on the reference dataset") {
  const auto& d = reference_prepared();
  const auto trained = train_federated(d, FedConfig{});
  const auto subs = per_attack_eval(trained.model, trained.threshold, d.test);
  REQUIRE(subs.size() == 2);
  const auto& syn = subs[0].second;
  const auto& udp = subs[1].second;
  CHECK(std::fabs(syn.accuracy - udp.accuracy) <= 0.03);
  CHECK(std::fabs(*syn.f1 - *udp.f1) <= 0.03);
  CHECK(std::fabs(*syn.fpr - *udp.fpr) <= 0.03);
}

TEST_CASE("sweep_clients rows") {
  const auto& d = small_prepared();
  auto cfg = quick_config();
  const auto rows = sweep_clients(d, cfg, {3, 6, 8, 10});
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].k_clients == 3);
  CHECK(rows[3].k_clients == 10);
  for (const auto& r : rows) {
    check_consistent(r.report);
    CHECK(r.report.wall_time_seconds > 0.0);
    CHECK(r.report.config_snapshot.find("k_clients = " + std::to_string(r.k_clients)) != std::string::npos);
  }
  const auto csv = sweep_csv(rows);
  CHECK(csv.rfind("clients,accuracy,f1,fpr,seconds\n3,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK_THROWS_AS(sweep_clients(d, cfg, {}), Error);

  // One client reproduces the stand-alone baseline.
  const auto single = sweep_clients(d, cfg, {1});
  REQUIRE(single.size() == 1);
  cfg.k_clients = 1;
  const auto local = train_centralized(d, cfg);
  CHECK(single[0].report.counts == evaluate(local.model, local.threshold, d.test).counts);
}

TEST_CASE("sweep wall time grows from 3 to 10 clients") {
  const auto& d = reference_prepared();
  FedConfig cfg;
  cfg.parallel_clients = false;
  double best3 = 1e9;
  double best10 = 1e9;
  for (int rep = 0; rep < 3; ++rep) {
    const auto rows = sweep_clients(d, cfg, {3, 10});
    best3 = std::min(best3, rows[0].report.wall_time_seconds);
    best10 = std::min(best10, rows[1].report.wall_time_seconds);
  }
  CHECK(best3 < best10);
}

TEST_CASE("centralized and federated coincide with one client") {
  const auto& d = small_prepared();
  auto cfg = quick_config();
  cfg.k_clients = 1;
  const auto fed = train_federated(d, cfg);
  const auto cen = train_centralized(d, cfg);
  double worst = 0.0;
  for (std::size_t i = 0; i < fed.model.layers.size(); ++i) {
    for (std::size_t k = 0; k < fed.model.layers[i].weights.size(); ++k) {
      worst = std::max(worst, std::fabs(fed.model.layers[i].weights[k] - cen.model.layers[i].weights[k]));
    }
  }
  CHECK(worst <= 1e-12);
  const auto cmp = compare_central_vs_federated(d, cfg);
  CHECK(cmp.centralized.counts == cmp.federated.counts);
  CHECK(cmp.centralized.name == "centralized");
  CHECK(cmp.federated.name == "federated");
}

TEST_CASE("zero rounds still yields well-formed reports") {
  const auto& d = small_prepared();
  auto cfg = quick_config();
  cfg.n_rounds = 0;
  const auto cmp = compare_central_vs_federated(d, cfg);
  check_consistent(cmp.centralized);
  check_consistent(cmp.federated);
  CHECK(cmp.centralized.counts == cmp.federated.counts);
  CHECK(train_federated(d, cfg).loss_history.empty());
}

TEST_CASE("report CSV layout") {
  const auto r = make_report("demo", {3, 2, 0, 1});
  auto with_blank = make_report("attacks_only", {4, 0, 0, 0});
  const auto csv = report_csv({r, with_blank});
  CHECK(csv.rfind("name,tp,tn,fp,fn,accuracy,f1,fpr,seconds\n", 0) == 0);
  CHECK(csv.find("demo,3,2,0,1,") != std::string::npos);
  CHECK(csv.find("attacks_only,4,0,0,0,1,1,,") != std::string::npos);
  CHECK_THROWS_AS(make_report("empty", {}), Error);
}
