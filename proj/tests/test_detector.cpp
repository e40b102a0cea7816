#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "fedids/detector.hpp"
#include "fedids/error.hpp"
#include "oracles.hpp"

using namespace fedids;

TEST_CASE("calibrate_threshold on a constant list") {
  const auto t = calibrate_threshold({0.25, 0.25, 0.25});
  CHECK(t.median_re == 0.25);
  CHECK(t.mad == 0.0);
  CHECK(t.alpha == 0.25);
  CHECK(t.n_validation == 3);
}

TEST_CASE("calibrate_threshold odd and even examples") {
  const auto odd = calibrate_threshold({1, 2, 3, 4, 100});
  CHECK(odd.median_re == 3.0);
  CHECK(odd.mad == 1.0);
  CHECK(odd.alpha == 8.0);

  const auto even = calibrate_threshold({1, 2, 3, 4});
  CHECK(even.median_re == 2.5);
  CHECK(even.mad == 1.0);
  CHECK(even.alpha == 7.5);
}

TEST_CASE("calibrate_threshold errors and multiplier knob") {
  CHECK_THROWS_AS(calibrate_threshold({}), Error);
  CHECK_THROWS_AS(calibrate_threshold({1.0, -0.5}), Error);
  const auto t = calibrate_threshold({1, 2, 3, 4, 100}, 2.0);
  CHECK(t.alpha == 5.0);
  CHECK(t.multiplier == 2.0);
}

TEST_CASE("classify uses a strict inequality") {
  const auto t = calibrate_threshold({1, 2, 3, 4, 100});
  CHECK(classify(t.alpha, t) == VerdictLabel::Benign);
  CHECK(classify(std::nextafter(t.alpha, 1e9), t) == VerdictLabel::Malicious);
  CHECK(classify(t.alpha + 1.0, t) == VerdictLabel::Malicious);
  CHECK(classify(0.0, t) == VerdictLabel::Benign);
}

TEST_CASE("threshold properties on random validation lists") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> len(1, 60);
  std::exponential_distribution<double> re(3.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> v(len(rng));
    for (auto& x : v) x = re(rng);
    const auto t = calibrate_threshold(v);
    const auto ref = oracle::median_mad(v);
    CHECK(std::fabs(t.alpha - ref.alpha) <= 1e-12);
    CHECK(t.alpha == t.median_re + 5.0 * t.mad);

    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(calibrate_threshold(shuffled) == t);

    // Median and MAD are positively homogeneous.
    const double k = 0.5 + trial % 7;
    auto scaled = v;
    for (auto& x : scaled) x *= k;
    CHECK(calibrate_threshold(scaled).alpha == doctest::Approx(k * t.alpha).epsilon(1e-12));

    // Monotone decisions.
    const double a = re(rng);
    const double b = a + re(rng);
    if (classify(a, t) == VerdictLabel::Malicious) CHECK(classify(b, t) == VerdictLabel::Malicious);
  }
}

TEST_CASE("one huge outlier barely moves the threshold") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(5 + trial % 20);
    for (auto& x : v) x = u(rng);
    const auto before = oracle::median_mad(v);
    auto with = v;
    with.push_back(1e12);
    const auto after = calibrate_threshold(with);
    // The outlier can only push the median up to the next order statistic.
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(after.median_re >= sorted.front());
    CHECK(after.median_re <= sorted.back());
    CHECK(after.alpha < 1e6);
    CHECK(after.median_re >= before.median - 1e-12);
  }
}

TEST_CASE("detect_batch confusion counts") {
  auto m = init_model(4, Activation::Tanh, 0);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  // Zero model: RE(x) = mean(x^2).
  DetectionThreshold t;
  t.alpha = 0.5;

  SUBCASE("empty") {
    const auto r = detect_batch(m, t, {});
    CHECK(r.verdicts.empty());
    CHECK(r.confusion == ConfusionCounts{});
  }
  SUBCASE("all benign below alpha") {
    std::vector<FeatureVector> rows(5, FeatureVector{{0.1, 0.2, 0.3, 0.4}, Label::Benign, ""});
    const auto r = detect_batch(m, t, rows);
    CHECK(r.confusion.fp == 0);
    CHECK(r.confusion.tn == 5);
    CHECK(r.verdicts[3].flow_id == "3");
  }
  SUBCASE("mixed rows agree with a per-row recount") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.2);
    std::vector<FeatureVector> rows;
    const Label labels[] = {Label::Benign, Label::SynFlood, Label::UdpFlood, Label::Unknown};
    for (int i = 0; i < 200; ++i) rows.push_back({{u(rng), u(rng), u(rng), u(rng)}, labels[i % 4], ""});
    const auto r = detect_batch(m, t, rows);
    ConfusionCounts expect;
    for (const auto& row : rows) {
      double re = 0;
      for (double x : row.values) re += x * x / 4.0;
      const bool flagged = re > 0.5;
      if (row.label == Label::Unknown) continue;
      if (is_attack(row.label)) {
        (flagged ? expect.tp : expect.fn)++;
      } else {
        (flagged ? expect.fp : expect.tn)++;
      }
    }
    CHECK(r.confusion == expect);
    CHECK(r.confusion.total() == 150);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(detect_batch(m, t, {FeatureVector{{0.1}, Label::Benign, ""}}), Error);
  }
}

TEST_CASE("threshold serialization round-trips bit-exactly") {
  const auto t = calibrate_threshold({0.1, 0.7, 1.0 / 3.0, 0.123456789012345678, 2e-300});
  const auto back = deserialize_threshold(serialize_threshold(t));
  CHECK(back == t);
  CHECK_THROWS_AS(deserialize_threshold("alpha = 1\n"), Error);
}

TEST_CASE("verdict CSV layout") {
  const std::string csv = verdict_csv({{"f0", 0.5, VerdictLabel::Malicious}, {"f1", 0.25, VerdictLabel::Benign}});
  CHECK(csv == "flow_id,re,label\nf0,0.5,malicious\nf1,0.25,benign\n");
}
