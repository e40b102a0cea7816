#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "fedids/error.hpp"
#include "fedids/flowlens.hpp"
#include "oracles.hpp"

using namespace fedids;

namespace {

PacketRecord tcp(double t, std::uint32_t len = 60, std::uint8_t flags = 0) {
  PacketRecord p;
  p.timestamp = t;
  p.src_ip = "10.0.0.1";
  p.dst_ip = "10.0.0.2";
  p.src_port = 40000;
  p.dst_port = 80;
  p.protocol = Protocol::Tcp;
  p.length_bytes = len;
  p.tcp_flags = flags;
  p.ttl = 64;
  p.tcp_window = 29200;
  return p;
}

FlowAggregate flow_of(std::vector<PacketRecord> pkts, double tw = 1.0) {
  FlowAggregate f;
  f.key = FlowKey::of(pkts.front());
  f.tw = tw;
  f.packets = std::move(pkts);
  return f;
}

double feat(const FeatureVector& fv, feature::Index i) { return fv.values[i]; }

}  // namespace

TEST_CASE("extract_flows on empty input yields no flows") {
  CHECK(extract_flows({}, 1.0).empty());
}

TEST_CASE("extract_flows groups one 5-tuple inside one window") {
  const auto flows = extract_flows({tcp(0.1), tcp(0.5)}, 1.0);
  REQUIRE(flows.size() == 1);
  CHECK(flows[0].packets.size() == 2);
  CHECK(flows[0].window_index == 0);
}

TEST_CASE("extract_flows anchors windows at the first packet") {
  // floor((t - 0.2) / 1.0) for t = 0.2, 0.9, 1.4 gives windows 0, 0, 1.
  const auto flows = extract_flows({tcp(0.2), tcp(0.9), tcp(1.4)}, 1.0);
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].packets.size() == 2);
  CHECK(flows[0].window_index == 0);
  CHECK(flows[1].packets.size() == 1);
  CHECK(flows[1].window_index == 1);
}

TEST_CASE("extract_flows keeps directions apart and orders by first sight") {
  auto a = tcp(0.0);
  auto b = tcp(0.1);
  std::swap(b.src_ip, b.dst_ip);
  std::swap(b.src_port, b.dst_port);
  const auto flows = extract_flows({a, b, tcp(0.2)}, 1.0);
  REQUIRE(flows.size() == 2);
  CHECK(flows[0].key == FlowKey::of(a));
  CHECK(flows[0].packets.size() == 2);
  CHECK(flows[1].key == FlowKey::of(b));
}

TEST_CASE("extract_flows rejects out-of-order timestamps and bad windows") {
  CHECK_THROWS_AS(extract_flows({tcp(0.5), tcp(0.4)}, 1.0), Error);
  try {
    extract_flows({tcp(0.5), tcp(0.4)}, 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotoneTimestamps);
  }
  CHECK_THROWS_AS(extract_flows({tcp(0.0)}, 0.0), Error);
}

TEST_CASE("featurize handles a single UDP packet") {
  PacketRecord p;
  p.timestamp = 0.0;
  p.src_ip = "1.1.1.1";
  p.dst_ip = "2.2.2.2";
  p.src_port = 5000;
  p.dst_port = 53;
  p.protocol = Protocol::Udp;
  p.length_bytes = 100;
  p.ttl = 64;
  const auto fv = featurize(flow_of({p}));
  REQUIRE(fv.values.size() == kFeatureCount);
  CHECK(feat(fv, feature::NumPktsSnt) == 1);
  CHECK(feat(fv, feature::NumByteSnt) == 100);
  CHECK(feat(fv, feature::AvePktSize) == 100);
  CHECK(feat(fv, feature::StdPktSize) == 0);
  CHECK(feat(fv, feature::Duration) == 0);
  CHECK(feat(fv, feature::AveIAT) == 0);
  CHECK(feat(fv, feature::StdIAT) == 0);
  CHECK(feat(fv, feature::Pktps) == 1);
  CHECK(feat(fv, feature::Bytps) == 100);
  CHECK(feat(fv, feature::TcpFlags) == 0);
  CHECK(feat(fv, feature::L4Proto) == 17);
}

TEST_CASE("featurize IAT statistics on three packets") {
  const auto fv = featurize(flow_of({tcp(0.0), tcp(0.1), tcp(0.3)}));
  // IATs {0.1, 0.2}: mean 0.15, population std 0.05.
  CHECK(feat(fv, feature::MinIAT) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(feat(fv, feature::MaxIAT) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(feat(fv, feature::AveIAT) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(feat(fv, feature::StdIAT) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(feat(fv, feature::Duration) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(feat(fv, feature::AvePktSize) == 60);
  CHECK(feat(fv, feature::StdPktSize) == 0);
  CHECK(feat(fv, feature::Pktps) == doctest::Approx(3 / 0.3));
}

TEST_CASE("featurize aggregates TCP flags") {
  const auto fv = featurize(flow_of({tcp(0.0, 60, tcp_flags::syn),
                                     tcp(0.1, 60, tcp_flags::syn | tcp_flags::ack)}));
  CHECK(feat(fv, feature::TcpFlags) == (tcp_flags::syn | tcp_flags::ack));
  CHECK(feat(fv, feature::SynCount) == 2);
  CHECK(feat(fv, feature::AckCount) == 1);
  CHECK(feat(fv, feature::RstFinCount) == 0);
}

TEST_CASE("featurize counts TTL changes and records the initial window") {
  auto a = tcp(0.0);
  auto b = tcp(0.1);
  b.ttl = 63;
  b.tcp_window = 1;
  auto c = tcp(0.2, 60, tcp_flags::fin);
  c.ttl = 63;
  const auto fv = featurize(flow_of({a, b, c}));
  CHECK(feat(fv, feature::IpTTLChg) == 1);
  CHECK(feat(fv, feature::TcpInitWinSz) == 29200);
  CHECK(feat(fv, feature::RstFinCount) == 1);
}

TEST_CASE("featurize rejects an empty flow") {
  FlowAggregate f;
  f.key = FlowKey::of(tcp(0));
  CHECK_THROWS_AS(featurize(f), Error);
}

TEST_CASE("correlation_filter drops an exact duplicate column") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix m;
  for (int r = 0; r < 50; ++r) {
    std::vector<double> row{u(rng), u(rng), u(rng)};
    row.push_back(row[0]);
    m.push_back(row);
  }
  CHECK(correlation_filter(m, 0.95) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("correlation_filter keeps independent noise columns") {
  Matrix m(400, std::vector<double>(6));
  for (std::size_t j = 0; j < 6; ++j) {
    std::mt19937_64 rng(100 + j);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& row : m) row[j] = u(rng);
  }
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = a + 1; b < 6; ++b) REQUIRE(std::fabs(oracle::pearson(m, a, b)) < 0.95);
  }
  CHECK(correlation_filter(m, 0.95).size() == 6);
}

TEST_CASE("correlation_filter edge cases") {
  CHECK(correlation_filter(Matrix{{1.0}, {2.0}, {5.0}}, 0.95) == std::vector<std::size_t>{0});
  // Constant column has no defined correlation and is dropped.
  CHECK(correlation_filter(Matrix{{1.0, 7.0}, {2.0, 7.0}}, 0.95) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(correlation_filter(Matrix{{1.0, 2.0}, {1.0}}, 0.95), Error);
  CHECK_THROWS_AS(correlation_filter(Matrix{}, 0.95), Error);
  CHECK_THROWS_AS(correlation_filter(Matrix{{1.0}}, 0.0), Error);
}

TEST_CASE("min-max scaler") {
  FeatureSchema s;
  s.names = {"a"};
  s.retained_indices = {0};
  SUBCASE("not fitted") { CHECK_THROWS_AS(apply_scaler(s, std::vector<double>{1.0}), Error); }
  SUBCASE("midpoint and clamp") {
    const auto fitted = fit_scaler(s, Matrix{{0.0}, {10.0}});
    CHECK(apply_scaler(fitted, std::vector<double>{5.0})[0] == 0.5);
    CHECK(apply_scaler(fitted, std::vector<double>{20.0})[0] == 1.0);
    CHECK(apply_scaler(fitted, std::vector<double>{-3.0})[0] == 0.0);
  }
  SUBCASE("constant column") {
    const auto fitted = fit_scaler(s, Matrix{{7.0}, {7.0}, {7.0}});
    CHECK(apply_scaler(fitted, std::vector<double>{7.0})[0] == 0.0);
  }
  SUBCASE("projection onto retained columns") {
    FeatureSchema wide;
    wide.names = {"a", "b", "c"};
    wide.retained_indices = {0, 2};
    const auto fitted = fit_scaler(wide, Matrix{{0, 5, 10}, {2, 5, 20}});
    const auto out = apply_scaler(fitted, std::vector<double>{1, 99, 15});
    CHECK(out == std::vector<double>{0.5, 0.5});
  }
}

TEST_CASE("split_dataset") {
  std::vector<FeatureVector> benign;
  for (int i = 0; i < 10; ++i) benign.push_back({{double(i)}, Label::Benign, std::to_string(i)});

  SUBCASE("exact proportions") {
    const auto s = split_dataset(benign, {}, 1);
    CHECK(s.train.size() == 6);
    CHECK(s.validation.size() == 2);
    CHECK(s.test.size() == 2);
  }
  SUBCASE("deterministic per seed") {
    const auto a = split_dataset(benign, {}, 9);
    const auto b = split_dataset(benign, {}, 9);
    CHECK(a.train == b.train);
    CHECK(a.validation == b.validation);
    CHECK(a.test == b.test);
  }
  SUBCASE("attack rows only reach the test split") {
    std::vector<FeatureVector> rows(benign.begin(), benign.begin() + 5);
    for (int i = 0; i < 5; ++i) rows.push_back({{100.0 + i}, Label::SynFlood, "a" + std::to_string(i)});
    const auto s = split_dataset(rows, {}, 4);
    auto attacks = [](const std::vector<FeatureVector>& v) {
      return std::count_if(v.begin(), v.end(), [](const auto& r) { return is_attack(r.label); });
    };
    CHECK(attacks(s.train) == 0);
    CHECK(attacks(s.validation) == 0);
    CHECK(attacks(s.test) == 5);
    CHECK(s.train.size() + s.validation.size() + s.test.size() == 10);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(split_dataset(std::vector<FeatureVector>(benign.begin(), benign.begin() + 2), {}, 0), Error);
    CHECK_THROWS_AS(split_dataset(benign, SplitRatios{0.5, 0.2, 0.2}, 0), Error);
  }
}

TEST_CASE("packet CSV parsing") {
  const std::string text =
      "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags,ttl,tcp_window\n"
      "0.5,10.0.0.1,10.0.0.2,1234,80,TCP,60,18,64,29200\n"
      "0.75,10.0.0.3,10.0.0.4,0,0,OTHER,84,0,255,0\n";
  const auto pkts = parse_packet_csv(text);
  REQUIRE(pkts.size() == 2);
  CHECK(pkts[0].tcp_flags == (tcp_flags::syn | tcp_flags::ack));
  CHECK(pkts[1].protocol == Protocol::Other);
  CHECK(parse_packet_csv(packet_csv(pkts)) == pkts);

  CHECK_THROWS_AS(parse_packet_csv("time,src\n"), Error);
  try {
    parse_packet_csv(
        "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags,ttl,tcp_window\n"
        "0.5,a,b,70000,80,TCP,60,0,64,0\n");
    FAIL("expected a cell error");
  } catch (const CellError& e) {
    CHECK(e.row() == 1);
    CHECK(e.column() == 3);
  }
  // OTHER with ports breaks the record invariant.
  CHECK_THROWS_AS(parse_packet_csv(
                      "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags,ttl,tcp_window\n"
                      "0.5,a,b,1,2,OTHER,60,0,64,0\n"),
                  Error);
}

// Properties over randomly generated traces.

TEST_CASE("flow pipeline properties over random traces") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> tw_dist(0.05, 3.0);
  for (int trial = 0; trial < 250; ++trial) {
    const auto trace = oracle::random_trace(rng);
    const double tw = tw_dist(rng);
    const auto flows = extract_flows(trace, tw);

    // Partition: the multiset of packets is preserved.
    std::vector<PacketRecord> collected;
    for (const auto& f : flows) {
      REQUIRE_FALSE(f.packets.empty());
      collected.insert(collected.end(), f.packets.begin(), f.packets.end());
    }
    auto by_content = [](const PacketRecord& a, const PacketRecord& b) {
      return std::tie(a.timestamp, a.src_ip, a.dst_ip, a.src_port, a.dst_port, a.length_bytes, a.ttl,
                      a.tcp_flags) < std::tie(b.timestamp, b.src_ip, b.dst_ip, b.src_port, b.dst_port,
                                              b.length_bytes, b.ttl, b.tcp_flags);
    };
    auto expected = trace;
    std::sort(expected.begin(), expected.end(), by_content);
    std::sort(collected.begin(), collected.end(), by_content);
    REQUIRE(collected == expected);

    const double start = trace.front().timestamp;
    for (const auto& f : flows) {
      // Window width and window-index agreement.
      const double span = f.packets.back().timestamp - f.packets.front().timestamp;
      REQUIRE(span < tw);
      for (const auto& p : f.packets) {
        REQUIRE(static_cast<std::size_t>(std::floor((p.timestamp - start) / tw)) == f.window_index);
        REQUIRE(FlowKey::of(p) == f.key);
      }

      // Determinism and the two-pass std oracle.
      const auto a = featurize(f);
      const auto b = featurize(f);
      REQUIRE(a == b);
      for (double v : a.values) REQUIRE(std::isfinite(v));

      std::vector<double> sizes;
      std::vector<double> iats;
      for (std::size_t i = 0; i < f.packets.size(); ++i) {
        sizes.push_back(f.packets[i].length_bytes);
        if (i > 0) iats.push_back(f.packets[i].timestamp - f.packets[i - 1].timestamp);
      }
      const long double size_std = oracle::pop_std(sizes);
      const long double iat_std = oracle::pop_std(iats);
      REQUIRE(std::fabs(a.values[feature::StdPktSize] - size_std) <= 1e-12 * std::max(1.0L, size_std));
      REQUIRE(std::fabs(a.values[feature::StdIAT] - iat_std) <= 1e-12 * std::max(1e-300L, iat_std));
    }

    // Correlation filter postcondition on this trace's feature matrix.
    Matrix m;
    for (const auto& f : flows) m.push_back(featurize(f).values);
    const auto kept = correlation_filter(m, 0.95);
    for (std::size_t x = 0; x < kept.size(); ++x) {
      for (std::size_t y = x + 1; y < kept.size(); ++y) {
        REQUIRE(std::fabs(oracle::pearson(m, kept[x], kept[y])) <= 0.95 + 1e-12);
      }
    }
  }
}

TEST_CASE("scaled training matrix lies in the unit box") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 50);
  Matrix train(200, std::vector<double>(kFeatureCount));
  for (auto& row : train) {
    for (auto& v : row) v = g(rng);
  }
  const auto schema = fit_scaler(FeatureSchema::standard(), train);
  for (const auto& row : train) {
    for (double v : apply_scaler(schema, row)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
