#include "fedids/flowlens.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "fedids/error.hpp"
#include "fedids/random.hpp"
#include "fedids/textio.hpp"

namespace fedids {

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::Tcp: return "TCP";
    case Protocol::Udp: return "UDP";
    case Protocol::Other: return "OTHER";
  }
  return "OTHER";
}

Protocol parse_protocol(std::string_view text) {
  text = textio::trim(text);
  if (text == "TCP") return Protocol::Tcp;
  if (text == "UDP") return Protocol::Udp;
  if (text == "OTHER") return Protocol::Other;
  throw Error(ErrorCode::InvalidArgument, "unknown protocol '" + std::string(text) + "'");
}

double protocol_code(Protocol p) {
  switch (p) {
    case Protocol::Tcp: return 6.0;
    case Protocol::Udp: return 17.0;
    case Protocol::Other: return 0.0;
  }
  return 0.0;
}

void validate(const PacketRecord& p) {
  if (!std::isfinite(p.timestamp)) {
    throw Error(ErrorCode::InvalidArgument, "packet timestamp is not finite");
  }
  if (p.length_bytes == 0) throw Error(ErrorCode::InvalidArgument, "packet length must be > 0");
  if (p.protocol == Protocol::Other && (p.src_port != 0 || p.dst_port != 0)) {
    throw Error(ErrorCode::InvalidArgument, "ports must be 0 for protocol OTHER");
  }
  if (p.protocol != Protocol::Tcp && (p.tcp_flags != 0 || p.tcp_window != 0)) {
    throw Error(ErrorCode::InvalidArgument, "tcp_flags and tcp_window must be 0 for non-TCP");
  }
}

FlowKey FlowKey::of(const PacketRecord& p) {
  return FlowKey{p.src_ip, p.dst_ip, p.src_port, p.dst_port, p.protocol};
}

std::string FlowKey::str() const {
  return src_ip + ":" + std::to_string(src_port) + ">" + dst_ip + ":" + std::to_string(dst_port) +
         "/" + std::string(to_string(protocol));
}

std::size_t FlowKeyHash::operator()(const FlowKey& k) const noexcept {
  std::size_t h = std::hash<std::string>{}(k.src_ip);
  auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
  mix(std::hash<std::string>{}(k.dst_ip));
  mix(k.src_port);
  mix(static_cast<std::size_t>(k.dst_port) << 16);
  mix(static_cast<std::size_t>(k.protocol));
  return h;
}

std::string FlowAggregate::id() const { return "w" + std::to_string(window_index) + ":" + key.str(); }

std::string_view to_string(Label label) {
  switch (label) {
    case Label::Benign: return "benign";
    case Label::SynFlood: return "synflood";
    case Label::UdpFlood: return "udpflood";
    case Label::Unknown: return "unknown";
  }
  return "unknown";
}

Label parse_label(std::string_view text) {
  text = textio::trim(text);
  if (text == "benign") return Label::Benign;
  if (text == "synflood") return Label::SynFlood;
  if (text == "udpflood") return Label::UdpFlood;
  if (text == "unknown") return Label::Unknown;
  throw Error(ErrorCode::InvalidArgument, "unknown label '" + std::string(text) + "'");
}

bool is_attack(Label label) { return label == Label::SynFlood || label == Label::UdpFlood; }

const std::array<std::string_view, kFeatureCount>& feature_names() {
  static const std::array<std::string_view, kFeatureCount> names = {
      "numPktsSnt", "numByteSnt", "minPktSz",  "maxPktSz",     "avePktSize",
      "stdPktSize", "duration",   "minIAT",    "maxIAT",       "aveIAT",
      "stdIAT",     "pktps",      "bytps",     "l4Proto",      "tcpFlags",
      "synCount",   "ackCount",   "rstFinCount", "ipTTLChg",   "tcpInitWinSz"};
  return names;
}

FeatureSchema FeatureSchema::standard() {
  FeatureSchema s;
  for (auto n : feature_names()) s.names.emplace_back(n);
  s.retained_indices.resize(kFeatureCount);
  std::iota(s.retained_indices.begin(), s.retained_indices.end(), std::size_t{0});
  return s;
}

std::vector<FlowAggregate> extract_flows(const std::vector<PacketRecord>& packets, double tw) {
  if (!(tw > 0.0) || !std::isfinite(tw)) {
    throw Error(ErrorCode::InvalidArgument, "time window must be positive");
  }
  for (std::size_t i = 1; i < packets.size(); ++i) {
    if (packets[i].timestamp < packets[i - 1].timestamp) {
      throw Error(ErrorCode::NonMonotoneTimestamps,
                  "packet " + std::to_string(i) + " precedes packet " + std::to_string(i - 1));
    }
  }
  std::vector<FlowAggregate> flows;
  if (packets.empty()) return flows;

  const double start = packets.front().timestamp;
  // Windows are visited in increasing order, so one open map per window suffices.
  std::unordered_map<FlowKey, std::size_t, FlowKeyHash> open;
  std::size_t current_window = 0;
  for (const auto& p : packets) {
    validate(p);
    const auto window = static_cast<std::size_t>(std::floor((p.timestamp - start) / tw));
    if (window != current_window) {
      open.clear();
      current_window = window;
    }
    auto key = FlowKey::of(p);
    auto it = open.find(key);
    if (it == open.end()) {
      it = open.emplace(key, flows.size()).first;
      flows.push_back(FlowAggregate{std::move(key), window, tw, {}});
    }
    flows[it->second].packets.push_back(p);
  }
  return flows;
}

namespace {

struct Moments {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  if (xs.empty()) return m;
  m.min = *std::min_element(xs.begin(), xs.end());
  m.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

}  // namespace

FeatureVector featurize(const FlowAggregate& flow) {
  const auto& pkts = flow.packets;
  if (pkts.empty()) throw Error(ErrorCode::EmptyFlow, "flow " + flow.key.str() + " has no packets");

  std::vector<double> sizes;
  sizes.reserve(pkts.size());
  std::vector<double> iats;
  iats.reserve(pkts.size());
  double bytes = 0.0;
  std::uint8_t flags = 0;
  double syn = 0, ack = 0, rst_fin = 0, ttl_changes = 0;
  for (std::size_t i = 0; i < pkts.size(); ++i) {
    const auto& p = pkts[i];
    sizes.push_back(static_cast<double>(p.length_bytes));
    bytes += static_cast<double>(p.length_bytes);
    flags |= p.tcp_flags;
    if (p.tcp_flags & tcp_flags::syn) ++syn;
    if (p.tcp_flags & tcp_flags::ack) ++ack;
    if (p.tcp_flags & (tcp_flags::rst | tcp_flags::fin)) ++rst_fin;
    if (i > 0) {
      iats.push_back(p.timestamp - pkts[i - 1].timestamp);
      if (p.ttl != pkts[i - 1].ttl) ++ttl_changes;
    }
  }

  const auto sz = moments(sizes);
  const auto iat = moments(iats);
  const double n = static_cast<double>(pkts.size());
  const double duration = pkts.back().timestamp - pkts.front().timestamp;
  const double rate_denominator = duration > 0.0 ? duration : flow.tw;

  FeatureVector fv;
  fv.flow_id = flow.id();
  fv.values.resize(kFeatureCount);
  auto& v = fv.values;
  v[feature::NumPktsSnt] = n;
  v[feature::NumByteSnt] = bytes;
  v[feature::MinPktSz] = sz.min;
  v[feature::MaxPktSz] = sz.max;
  v[feature::AvePktSize] = sz.mean;
  v[feature::StdPktSize] = sz.std;
  v[feature::Duration] = duration;
  v[feature::MinIAT] = iat.min;
  v[feature::MaxIAT] = iat.max;
  v[feature::AveIAT] = iat.mean;
  v[feature::StdIAT] = iat.std;
  v[feature::Pktps] = n / rate_denominator;
  v[feature::Bytps] = bytes / rate_denominator;
  v[feature::L4Proto] = protocol_code(flow.key.protocol);
  v[feature::TcpFlags] = static_cast<double>(flags);
  v[feature::SynCount] = syn;
  v[feature::AckCount] = ack;
  v[feature::RstFinCount] = rst_fin;
  v[feature::IpTTLChg] = ttl_changes;
  v[feature::TcpInitWinSz] = static_cast<double>(pkts.front().tcp_window);
  return fv;
}

std::vector<std::size_t> correlation_filter(const Matrix& rows, double cutoff) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "correlation filter needs rows");
  if (!(cutoff > 0.0 && cutoff <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "cutoff must lie in (0, 1]");
  }
  const std::size_t d = rows.front().size();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "row " + std::to_string(r) + " has " +
                                                    std::to_string(rows[r].size()) +
                                                    " columns, expected " + std::to_string(d));
    }
  }

  // Centered columns and their norms.
  const double n = static_cast<double>(rows.size());
  std::vector<std::vector<double>> centered(d, std::vector<double>(rows.size()));
  std::vector<double> norm(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    // Exactly constant columns are dropped; a rounded mean would leave them
    // with a tiny spurious spread.
    bool constant = true;
    for (const auto& row : rows) constant = constant && row[j] == rows.front()[j];
    if (constant) continue;
    double mean = 0.0;
    for (const auto& row : rows) mean += row[j];
    mean /= n;
    double ss = 0.0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double c = rows[r][j] - mean;
      centered[j][r] = c;
      ss += c * c;
    }
    norm[j] = std::sqrt(ss);
  }

  std::vector<std::size_t> retained;
  for (std::size_t j = 0; j < d; ++j) {
    if (!(norm[j] > 0.0)) continue;
    bool keep = true;
    for (auto i : retained) {
      double dot = 0.0;
      for (std::size_t r = 0; r < rows.size(); ++r) dot += centered[i][r] * centered[j][r];
      const double corr = dot / (norm[i] * norm[j]);
      if (std::abs(corr) > cutoff) {
        keep = false;
        break;
      }
    }
    if (keep) retained.push_back(j);
  }
  return retained;
}

FeatureSchema fit_scaler(FeatureSchema schema, const Matrix& train_rows) {
  if (train_rows.empty()) throw Error(ErrorCode::EmptyDataset, "scaler needs training rows");
  const std::size_t d = schema.names.size();
  for (std::size_t k = 0; k < schema.retained_indices.size(); ++k) {
    if (schema.retained_indices[k] >= d || (k > 0 && schema.retained_indices[k] <= schema.retained_indices[k - 1])) {
      throw Error(ErrorCode::InvalidArgument, "retained indices must be strictly increasing and < d");
    }
  }
  schema.scale_min.assign(schema.retained_indices.size(), std::numeric_limits<double>::infinity());
  schema.scale_max.assign(schema.retained_indices.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < train_rows.size(); ++r) {
    const auto& row = train_rows[r];
    if (row.size() != d) {
      throw Error(ErrorCode::DimensionMismatch,
                  "training row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " columns, expected " + std::to_string(d));
    }
    for (std::size_t k = 0; k < schema.retained_indices.size(); ++k) {
      const double x = row[schema.retained_indices[k]];
      schema.scale_min[k] = std::min(schema.scale_min[k], x);
      schema.scale_max[k] = std::max(schema.scale_max[k], x);
    }
  }
  return schema;
}

std::vector<double> apply_scaler(const FeatureSchema& schema, const std::vector<double>& row) {
  if (schema.scale_min.size() != schema.retained_indices.size() || !schema.fitted()) {
    throw Error(ErrorCode::SchemaNotFitted, "scaler has not been fitted");
  }
  if (row.size() != schema.names.size()) {
    throw Error(ErrorCode::DimensionMismatch, "row has " + std::to_string(row.size()) +
                                                  " columns, schema has " +
                                                  std::to_string(schema.names.size()));
  }
  std::vector<double> out(schema.retained_indices.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double lo = schema.scale_min[k];
    const double hi = schema.scale_max[k];
    const double x = row[schema.retained_indices[k]];
    out[k] = hi > lo ? std::clamp((x - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  }
  return out;
}

FeatureVector apply_scaler(const FeatureSchema& schema, const FeatureVector& row) {
  return FeatureVector{apply_scaler(schema, row.values), row.label, row.flow_id};
}

DatasetSplit split_dataset(const std::vector<FeatureVector>& rows, SplitRatios ratios,
                           std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.validation > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "split ratios must be positive and sum to 1");
  }
  std::vector<std::size_t> benign;
  std::vector<std::size_t> other;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    (rows[i].label == Label::Benign ? benign : other).push_back(i);
  }
  auto rng = make_rng({seed});
  std::shuffle(benign.begin(), benign.end(), rng);

  const double n = static_cast<double>(benign.size());
  const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train));
  const auto n_val = static_cast<std::size_t>(std::llround(n * ratios.validation));
  if (n_train == 0 || n_val == 0 || n_train + n_val > benign.size() ||
      (n_train + n_val == benign.size() && other.empty())) {
    throw Error(ErrorCode::InsufficientRows,
                std::to_string(benign.size()) + " benign rows cannot fill every partition");
  }

  DatasetSplit split;
  for (std::size_t k = 0; k < benign.size(); ++k) {
    const auto& row = rows[benign[k]];
    if (k < n_train) {
      split.train.push_back(row);
    } else if (k < n_train + n_val) {
      split.validation.push_back(row);
    } else {
      split.test.push_back(row);
    }
  }
  for (auto i : other) split.test.push_back(rows[i]);
  return split;
}

namespace {

constexpr std::string_view kPacketHeader =
    "timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags,ttl,tcp_window";

template <typename T>
T parse_bounded(const std::string& cell, std::uint64_t max, std::size_t row, std::size_t col,
                std::string_view name) {
  auto v = textio::parse_uint(cell);
  if (!v || *v > max) {
    throw CellError(ErrorCode::NonNumericCell, row, col, std::string(name),
                    "expected integer in [0, " + std::to_string(max) + "], got '" + cell + "'");
  }
  return static_cast<T>(*v);
}

}  // namespace

std::vector<PacketRecord> parse_packet_csv(std::string_view text) {
  auto lines = textio::split(text, '\n');
  if (lines.empty() || textio::trim(lines.front()) != kPacketHeader) {
    throw Error(ErrorCode::MalformedHeader,
                "packet CSV header must be '" + std::string(kPacketHeader) + "'");
  }
  const auto header = textio::split(kPacketHeader, ',');
  std::vector<PacketRecord> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = textio::trim(lines[li]);
    if (line.empty()) continue;
    const auto cells = textio::split(line, ',');
    const std::size_t row = li;
    if (cells.size() != header.size()) {
      throw CellError(ErrorCode::MalformedHeader, row, cells.size(), "",
                      "expected " + std::to_string(header.size()) + " cells");
    }
    PacketRecord p;
    auto ts = textio::parse_double(cells[0]);
    if (!ts || !std::isfinite(*ts)) {
      throw CellError(ErrorCode::NonNumericCell, row, 0, header[0], "bad timestamp '" + cells[0] + "'");
    }
    p.timestamp = *ts;
    p.src_ip = std::string(textio::trim(cells[1]));
    p.dst_ip = std::string(textio::trim(cells[2]));
    p.src_port = parse_bounded<std::uint16_t>(cells[3], 65535, row, 3, header[3]);
    p.dst_port = parse_bounded<std::uint16_t>(cells[4], 65535, row, 4, header[4]);
    try {
      p.protocol = parse_protocol(cells[5]);
    } catch (const Error& e) {
      throw CellError(ErrorCode::NonNumericCell, row, 5, header[5], e.what());
    }
    p.length_bytes = parse_bounded<std::uint32_t>(cells[6], 0xffffffffu, row, 6, header[6]);
    p.tcp_flags = parse_bounded<std::uint8_t>(cells[7], 255, row, 7, header[7]);
    p.ttl = parse_bounded<std::uint8_t>(cells[8], 255, row, 8, header[8]);
    p.tcp_window = parse_bounded<std::uint32_t>(cells[9], 0xffffffffu, row, 9, header[9]);
    validate(p);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PacketRecord> load_packet_csv(const std::filesystem::path& path) {
  return parse_packet_csv(textio::read_file(path));
}

std::string packet_csv(const std::vector<PacketRecord>& packets) {
  std::string out(kPacketHeader);
  out += '\n';
  for (const auto& p : packets) {
    out += textio::format_shortest(p.timestamp);
    out += ',' + p.src_ip + ',' + p.dst_ip + ',' + std::to_string(p.src_port) + ',' +
           std::to_string(p.dst_port) + ',' + std::string(to_string(p.protocol)) + ',' +
           std::to_string(p.length_bytes) + ',' + std::to_string(p.tcp_flags) + ',' +
           std::to_string(p.ttl) + ',' + std::to_string(p.tcp_window) + '\n';
  }
  return out;
}

}  // namespace fedids
