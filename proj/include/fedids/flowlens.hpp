#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

namespace fedids {

enum class Protocol : std::uint8_t { Tcp, Udp, Other };

std::string_view to_string(Protocol p);
Protocol parse_protocol(std::string_view text);  // throws InvalidArgument

// IANA protocol number used as the l4Proto feature.
double protocol_code(Protocol p);

namespace tcp_flags {
inline constexpr std::uint8_t fin = 0x01;
inline constexpr std::uint8_t syn = 0x02;
inline constexpr std::uint8_t rst = 0x04;
inline constexpr std::uint8_t psh = 0x08;
inline constexpr std::uint8_t ack = 0x10;
inline constexpr std::uint8_t urg = 0x20;
inline constexpr std::uint8_t ecn = 0x40;
inline constexpr std::uint8_t cwr = 0x80;
}  // namespace tcp_flags

struct PacketRecord {
  double timestamp = 0.0;  // seconds
  std::string src_ip;
  std::string dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::Other;
  std::uint32_t length_bytes = 0;  // layer-3 size
  std::uint8_t tcp_flags = 0;
  std::uint8_t ttl = 0;
  std::uint32_t tcp_window = 0;

  bool operator==(const PacketRecord&) const = default;
};

// Throws InvalidArgument if the record breaks a field invariant.
void validate(const PacketRecord& p);

// Unidirectional 5-tuple: A->B and B->A are different keys.
struct FlowKey {
  std::string src_ip;
  std::string dst_ip;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  Protocol protocol = Protocol::Other;

  static FlowKey of(const PacketRecord& p);
  std::string str() const;

  bool operator==(const FlowKey&) const = default;
};

struct FlowKeyHash {
  std::size_t operator()(const FlowKey& k) const noexcept;
};

struct FlowAggregate {
  FlowKey key;
  std::size_t window_index = 0;
  double tw = 1.0;
  std::vector<PacketRecord> packets;

  std::string id() const;
};

enum class Label : std::uint8_t { Benign, SynFlood, UdpFlood, Unknown };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);  // throws InvalidArgument
bool is_attack(Label label);

struct FeatureVector {
  std::vector<double> values;
  Label label = Label::Unknown;
  std::string flow_id;

  bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::size_t kFeatureCount = 20;

// Column order of featurize() output.
const std::array<std::string_view, kFeatureCount>& feature_names();

namespace feature {
enum Index : std::size_t {
  NumPktsSnt,
  NumByteSnt,
  MinPktSz,
  MaxPktSz,
  AvePktSize,
  StdPktSize,
  Duration,
  MinIAT,
  MaxIAT,
  AveIAT,
  StdIAT,
  Pktps,
  Bytps,
  L4Proto,
  TcpFlags,
  SynCount,
  AckCount,
  RstFinCount,
  IpTTLChg,
  TcpInitWinSz,
};
}  // namespace feature

using Matrix = std::vector<std::vector<double>>;

struct FeatureSchema {
  std::vector<std::string> names;            // full schema, length d
  std::vector<std::size_t> retained_indices;  // strictly increasing
  std::vector<double> scale_min;              // one per retained feature
  std::vector<double> scale_max;

  // Full 20-feature schema with every column retained, scaler not fitted.
  static FeatureSchema standard();

  bool fitted() const { return !scale_min.empty() || retained_indices.empty(); }
  std::size_t input_dim() const { return retained_indices.size(); }
  bool operator==(const FeatureSchema&) const = default;
};

// Groups packets into tumbling windows of width tw anchored at the first
// packet's timestamp. Output is ordered by (window_index, first-seen key).
std::vector<FlowAggregate> extract_flows(const std::vector<PacketRecord>& packets, double tw);

FeatureVector featurize(const FlowAggregate& flow);

// Greedy left-to-right Pearson filter. Column j survives iff it has nonzero
// variance and |r(i, j)| <= cutoff for every already retained i < j.
std::vector<std::size_t> correlation_filter(const Matrix& rows, double cutoff = 0.95);

// Fits min/max over the schema's retained columns of full-width training rows.
FeatureSchema fit_scaler(FeatureSchema schema, const Matrix& train_rows);

// Projects a full-width row onto the retained columns and min-max scales it
// into [0, 1] (clamped). Constant columns map to 0.
std::vector<double> apply_scaler(const FeatureSchema& schema, const std::vector<double>& row);
FeatureVector apply_scaler(const FeatureSchema& schema, const FeatureVector& row);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> validation;
  std::vector<FeatureVector> test;
};

// Benign rows are shuffled and cut into train/validation/test by ratio;
// every attack (and unknown) row goes to test. Test keeps benign rows first,
// then the remaining rows in input order.
DatasetSplit split_dataset(const std::vector<FeatureVector>& rows, SplitRatios ratios,
                           std::uint64_t seed);

// Packet CSV: timestamp,src_ip,dst_ip,src_port,dst_port,protocol,length,tcp_flags,ttl,tcp_window
std::vector<PacketRecord> parse_packet_csv(std::string_view text);
std::vector<PacketRecord> load_packet_csv(const std::filesystem::path& path);
std::string packet_csv(const std::vector<PacketRecord>& packets);

}  // namespace fedids
