#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedids/flowlens.hpp"

namespace fedids {

// Per-flow packet rate drawn from a normal distribution clamped to [min, max].
struct RateModel {
  double mean = 1.0;
  double std = 0.0;
  double min = 1.0;
  double max = 1.0;
};

enum class FlagPattern : std::uint8_t {
  Session,  // SYN opener, ACK/PSH data, optional FIN/RST closer
  SynOnly,
  None,
};

struct PortModel {
  std::vector<std::uint16_t> tcp_dst_ports;
  std::vector<std::uint16_t> udp_dst_ports;
  bool random_dst_port = false;  // uniform over 1..65535 instead of the lists
};

struct TrafficProfile {
  Label name = Label::Benign;
  RateModel packet_rate;
  double size_mean = 500.0;   // bytes
  double size_std = 0.0;      // 0 means fixed size per flow
  bool lognormal_sizes = false;
  std::vector<double> fixed_sizes;  // per-flow size choices when size_std == 0 and non-empty
  double iat_jitter = 1.0;    // coefficient of variation of inter-arrival times
  double tcp_share = 1.0;     // probability that a flow is TCP rather than UDP
  FlagPattern flag_pattern = FlagPattern::None;
  PortModel port_model;
  double ttl_change_prob = 0.0;     // per packet
  double active_min = 0.5;          // flow activity as a fraction of tw
  double active_max = 1.0;
  std::uint32_t tcp_window = 0;     // 0 draws a window in [8192, 65535]

  static TrafficProfile benign();
  static TrafficProfile syn_flood();
  static TrafficProfile udp_flood();
  static TrafficProfile for_label(Label label);
};

// Synthesizes one packet trace per flow (all packets inside a single window).
std::vector<std::vector<PacketRecord>> generate_packet_traces(const TrafficProfile& profile,
                                                              std::size_t n_flows, std::uint64_t seed,
                                                              double tw);

// Generates packet traces and runs them through extract_flows + featurize.
std::vector<FeatureVector> generate_flows(const TrafficProfile& profile, std::size_t n_flows,
                                          std::uint64_t seed, double tw = 1.0);

struct ClassCounts {
  std::size_t benign = 0;
  std::size_t synflood = 0;
  std::size_t udpflood = 0;

  std::size_t total() const { return benign + synflood + udpflood; }
  bool operator==(const ClassCounts&) const = default;
};

struct DatasetManifest {
  // (environment tag, counts); tags are metadata only.
  std::vector<std::pair<std::string, ClassCounts>> environments;
  std::uint64_t seed = 0;
  double tw = 1.0;
  std::string schema = "standard";

  // Highway row ratios scaled to desk size: 2000 benign, 2700 of each attack.
  static DatasetManifest reference(std::uint64_t seed = 0);

  ClassCounts totals() const;
  bool operator==(const DatasetManifest&) const = default;
};

void validate(const DatasetManifest& manifest);
std::string serialize_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& path);

// All classes of all environments, shuffled with the manifest seed.
std::vector<FeatureVector> build_reference_dataset(const DatasetManifest& manifest);

// Feature CSV: schema names followed by `label`.
std::string dataset_csv(const std::vector<FeatureVector>& rows,
                        const std::vector<std::string>& names = FeatureSchema::standard().names);
// Columns are matched by name, extra columns are ignored. Rows get their
// 0-based data-row index as flow_id.
std::vector<FeatureVector> parse_dataset_csv(
    std::string_view text, const std::vector<std::string>& names = FeatureSchema::standard().names);
void save_dataset(const std::vector<FeatureVector>& rows, const std::filesystem::path& path);
std::vector<FeatureVector> load_dataset(const std::filesystem::path& path);

}  // namespace fedids
