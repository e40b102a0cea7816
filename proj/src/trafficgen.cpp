#include "fedids/trafficgen.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fedids/error.hpp"
#include "fedids/random.hpp"
#include "fedids/textio.hpp"

namespace fedids {

TrafficProfile TrafficProfile::benign() {
  TrafficProfile p;
  p.name = Label::Benign;
  p.packet_rate = {27.5, 12.0, 5.0, 50.0};
  p.size_mean = 420.0;
  p.size_std = 300.0;
  p.lognormal_sizes = true;
  p.iat_jitter = 0.8;
  p.tcp_share = 0.6;
  p.flag_pattern = FlagPattern::Session;
  p.port_model.tcp_dst_ports = {443, 80, 8080, 1935, 5228};
  p.port_model.udp_dst_ports = {53, 443, 3478, 5004};
  p.ttl_change_prob = 0.01;
  p.active_min = 0.4;
  p.active_max = 0.95;
  return p;
}

TrafficProfile TrafficProfile::syn_flood() {
  TrafficProfile p;
  p.name = Label::SynFlood;
  p.packet_rate = {1250.0, 150.0, 500.0, 2000.0};
  p.size_mean = 54.0;
  p.size_std = 4.0;
  p.iat_jitter = 0.15;
  p.tcp_share = 1.0;
  p.flag_pattern = FlagPattern::SynOnly;
  p.port_model.tcp_dst_ports = {80};
  p.ttl_change_prob = 0.3;
  p.active_min = 0.9;
  p.active_max = 0.99;
  p.tcp_window = 1024;
  return p;
}

TrafficProfile TrafficProfile::udp_flood() {
  TrafficProfile p;
  p.name = Label::UdpFlood;
  p.packet_rate = {1250.0, 150.0, 500.0, 2000.0};
  p.size_std = 0.0;
  p.fixed_sizes = {540.0, 1052.0, 1500.0};
  p.iat_jitter = 0.15;
  p.tcp_share = 0.0;
  p.flag_pattern = FlagPattern::None;
  p.port_model.random_dst_port = true;
  p.active_min = 0.9;
  p.active_max = 0.99;
  return p;
}

TrafficProfile TrafficProfile::for_label(Label label) {
  switch (label) {
    case Label::Benign: return benign();
    case Label::SynFlood: return syn_flood();
    case Label::UdpFlood: return udp_flood();
    case Label::Unknown: break;
  }
  throw Error(ErrorCode::InvalidArgument, "no traffic profile for label 'unknown'");
}

namespace {

std::string random_ip(Rng& rng, int first_octet, int second_octet) {
  std::uniform_int_distribution<int> octet(1, 254);
  return std::to_string(first_octet) + "." + std::to_string(second_octet) + "." +
         std::to_string(octet(rng)) + "." + std::to_string(octet(rng));
}

template <typename T>
const T& pick(const std::vector<T>& xs, Rng& rng) {
  std::uniform_int_distribution<std::size_t> idx(0, xs.size() - 1);
  return xs[idx(rng)];
}

std::uint8_t session_flags(Rng& rng, std::size_t i, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (i == 0 && u(rng) < 0.15) return tcp_flags::syn;
  if (i + 1 == n && n > 1) {
    const double r = u(rng);
    if (r < 0.15) return tcp_flags::fin | tcp_flags::ack;
    if (r < 0.17) return tcp_flags::rst;
  }
  return u(rng) < 0.4 ? tcp_flags::psh | tcp_flags::ack : tcp_flags::ack;
}

std::vector<PacketRecord> generate_trace(const TrafficProfile& profile, Rng& rng, double tw) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const bool tcp = unit(rng) < profile.tcp_share;
  const Protocol proto = tcp ? Protocol::Tcp : Protocol::Udp;
  const double rate = std::clamp(profile.packet_rate.mean + profile.packet_rate.std * normal(rng),
                                 profile.packet_rate.min, profile.packet_rate.max);
  const double active =
      tw * (profile.active_min + (profile.active_max - profile.active_min) * unit(rng));

  PacketRecord tmpl;
  tmpl.src_ip = random_ip(rng, 10, 0);
  tmpl.dst_ip = random_ip(rng, 172, 16);
  tmpl.protocol = proto;
  std::uniform_int_distribution<int> ephemeral(32768, 60999);
  tmpl.src_port = static_cast<std::uint16_t>(ephemeral(rng));
  if (profile.port_model.random_dst_port) {
    tmpl.dst_port = static_cast<std::uint16_t>(std::uniform_int_distribution<int>(1, 65535)(rng));
  } else {
    const auto& ports = tcp ? profile.port_model.tcp_dst_ports : profile.port_model.udp_dst_ports;
    tmpl.dst_port = ports.empty() ? 0 : pick(ports, rng);
  }
  tmpl.ttl = unit(rng) < 0.5 ? 64 : 128;
  if (tcp) {
    tmpl.tcp_window = profile.tcp_window != 0
                          ? profile.tcp_window
                          : static_cast<std::uint32_t>(std::uniform_int_distribution<int>(8192, 65535)(rng));
  }

  const double fixed_size = profile.fixed_sizes.empty() ? profile.size_mean : pick(profile.fixed_sizes, rng);
  // Lognormal parameters matching the requested mean and std.
  const double cv2 = (profile.size_std / profile.size_mean) * (profile.size_std / profile.size_mean);
  const double ln_sigma = std::sqrt(std::log1p(cv2));
  const double ln_mu = std::log(profile.size_mean) - 0.5 * ln_sigma * ln_sigma;
  auto draw_size = [&]() {
    double s = fixed_size;
    if (profile.size_std > 0.0) {
      s = profile.lognormal_sizes ? std::exp(ln_mu + ln_sigma * normal(rng))
                                  : profile.size_mean + profile.size_std * normal(rng);
    }
    return static_cast<std::uint32_t>(std::clamp(std::round(s), 40.0, 1500.0));
  };

  // Gamma-distributed gaps with mean 1/rate and the profile's CV.
  const double shape = 1.0 / (profile.iat_jitter * profile.iat_jitter);
  std::gamma_distribution<double> gap(shape, 1.0 / (rate * shape));

  std::vector<double> times;
  const double start = 0.25 * tw * unit(rng);
  double t = start;
  do {
    times.push_back(t);
    t += gap(rng);
  } while (t - start < active);

  std::vector<PacketRecord> trace;
  trace.reserve(times.size());
  std::uint8_t ttl = tmpl.ttl;
  for (std::size_t i = 0; i < times.size(); ++i) {
    PacketRecord p = tmpl;
    p.timestamp = times[i];
    p.length_bytes = draw_size();
    if (tcp) {
      switch (profile.flag_pattern) {
        case FlagPattern::Session: p.tcp_flags = session_flags(rng, i, times.size()); break;
        case FlagPattern::SynOnly: p.tcp_flags = tcp_flags::syn; break;
        case FlagPattern::None: p.tcp_flags = 0; break;
      }
    }
    if (i > 0 && unit(rng) < profile.ttl_change_prob) {
      ttl = static_cast<std::uint8_t>(ttl + (unit(rng) < 0.5 ? -1 : 1));
    }
    p.ttl = ttl;
    trace.push_back(std::move(p));
  }
  return trace;
}

}  // namespace

std::vector<std::vector<PacketRecord>> generate_packet_traces(const TrafficProfile& profile,
                                                              std::size_t n_flows, std::uint64_t seed,
                                                              double tw) {
  if (!(tw > 0.0)) throw Error(ErrorCode::InvalidArgument, "time window must be positive");
  if (!(profile.packet_rate.min > 0.0) || !(profile.size_mean > 0.0) || !(profile.iat_jitter > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "profile rate, size and jitter must be positive");
  }
  if (!(profile.active_max < 1.0 && profile.active_min > 0.0 && profile.active_min <= profile.active_max)) {
    throw Error(ErrorCode::InvalidArgument, "profile activity must lie in (0, 1)");
  }
  auto rng = make_rng({seed, static_cast<std::uint64_t>(profile.name)});
  std::vector<std::vector<PacketRecord>> traces;
  traces.reserve(n_flows);
  for (std::size_t i = 0; i < n_flows; ++i) traces.push_back(generate_trace(profile, rng, tw));
  return traces;
}

std::vector<FeatureVector> generate_flows(const TrafficProfile& profile, std::size_t n_flows,
                                          std::uint64_t seed, double tw) {
  if (!(tw > 0.0)) throw Error(ErrorCode::InvalidArgument, "time window must be positive");
  auto rng = make_rng({seed, static_cast<std::uint64_t>(profile.name)});
  std::vector<FeatureVector> rows;
  rows.reserve(n_flows);
  for (std::size_t i = 0; i < n_flows; ++i) {
    const auto trace = generate_trace(profile, rng, tw);
    auto flows = extract_flows(trace, tw);
    for (const auto& flow : flows) {
      auto fv = featurize(flow);
      fv.label = profile.name;
      fv.flow_id = std::string(to_string(profile.name)) + ":" + std::to_string(i) + ":" + fv.flow_id;
      rows.push_back(std::move(fv));
    }
  }
  return rows;
}

DatasetManifest DatasetManifest::reference(std::uint64_t seed) {
  DatasetManifest m;
  m.environments = {{"highway", ClassCounts{2000, 2700, 2700}}};
  m.seed = seed;
  return m;
}

ClassCounts DatasetManifest::totals() const {
  ClassCounts c;
  for (const auto& [tag, counts] : environments) {
    c.benign += counts.benign;
    c.synflood += counts.synflood;
    c.udpflood += counts.udpflood;
  }
  return c;
}

void validate(const DatasetManifest& m) {
  if (!(m.tw > 0.0) || !std::isfinite(m.tw)) throw Error(ErrorCode::InvalidArgument, "manifest tw must be > 0");
  if (m.totals().total() == 0) throw Error(ErrorCode::InvalidArgument, "manifest requests no rows");
  if (m.schema != "standard") {
    throw Error(ErrorCode::InvalidArgument, "unsupported feature schema '" + m.schema + "'");
  }
  for (const auto& [tag, counts] : m.environments) {
    if (tag.empty() || tag.find_first_of(" .=\t") != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "invalid environment tag '" + tag + "'");
    }
  }
}

std::string serialize_manifest(const DatasetManifest& m) {
  textio::KeyValueDoc doc;
  doc.set("seed", std::to_string(m.seed));
  doc.set_number("tw", m.tw);
  doc.set("schema", m.schema);
  for (const auto& [tag, c] : m.environments) {
    doc.set(tag + ".benign", std::to_string(c.benign));
    doc.set(tag + ".synflood", std::to_string(c.synflood));
    doc.set(tag + ".udpflood", std::to_string(c.udpflood));
  }
  return doc.str();
}

DatasetManifest parse_manifest(std::string_view text) {
  const auto doc = textio::KeyValueDoc::parse(text);
  DatasetManifest m;
  for (const auto& key : doc.keys()) {
    if (key == "seed") {
      auto v = textio::parse_uint(doc.get(key));
      if (!v) throw Error(ErrorCode::MalformedDocument, "seed must be an unsigned integer");
      m.seed = *v;
      continue;
    }
    if (key == "tw") {
      m.tw = doc.get_number(key);
      continue;
    }
    if (key == "schema") {
      m.schema = doc.get(key);
      continue;
    }
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) throw Error(ErrorCode::MalformedDocument, "unknown manifest key '" + key + "'");
    const auto tag = key.substr(0, dot);
    const auto cls = key.substr(dot + 1);
    const auto count = doc.get_int(key);
    if (count < 0) throw Error(ErrorCode::MalformedDocument, "class counts must be non-negative");
    auto it = std::find_if(m.environments.begin(), m.environments.end(),
                           [&](const auto& e) { return e.first == tag; });
    if (it == m.environments.end()) {
      m.environments.emplace_back(tag, ClassCounts{});
      it = std::prev(m.environments.end());
    }
    const auto n = static_cast<std::size_t>(count);
    if (cls == "benign") {
      it->second.benign = n;
    } else if (cls == "synflood") {
      it->second.synflood = n;
    } else if (cls == "udpflood") {
      it->second.udpflood = n;
    } else {
      throw Error(ErrorCode::MalformedDocument, "unknown traffic class '" + cls + "'");
    }
  }
  validate(m);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(textio::read_file(path));
}

std::vector<FeatureVector> build_reference_dataset(const DatasetManifest& manifest) {
  validate(manifest);
  std::vector<FeatureVector> rows;
  rows.reserve(manifest.totals().total());
  for (std::size_t e = 0; e < manifest.environments.size(); ++e) {
    const auto& [tag, counts] = manifest.environments[e];
    const std::pair<Label, std::size_t> classes[] = {
        {Label::Benign, counts.benign}, {Label::SynFlood, counts.synflood}, {Label::UdpFlood, counts.udpflood}};
    for (const auto& [label, n] : classes) {
      if (n == 0) continue;
      const auto seed = derive_seed({manifest.seed, e, static_cast<std::uint64_t>(label)});
      for (auto& row : generate_flows(TrafficProfile::for_label(label), n, seed, manifest.tw)) {
        row.flow_id = tag + ":" + row.flow_id;
        rows.push_back(std::move(row));
      }
    }
  }
  auto rng = make_rng({manifest.seed, 0x5f1e5ULL});
  std::shuffle(rows.begin(), rows.end(), rng);
  return rows;
}

std::string dataset_csv(const std::vector<FeatureVector>& rows, const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += n + ',';
  out += "label\n";
  for (const auto& row : rows) {
    if (row.values.size() != names.size()) {
      throw Error(ErrorCode::DimensionMismatch, "row width differs from schema width");
    }
    for (double v : row.values) {
      out += textio::format_shortest(v);
      out += ',';
    }
    out += to_string(row.label);
    out += '\n';
  }
  return out;
}

std::vector<FeatureVector> parse_dataset_csv(std::string_view text, const std::vector<std::string>& names) {
  const auto lines = textio::split(text, '\n');
  if (lines.empty() || textio::trim(lines.front()).empty()) {
    throw Error(ErrorCode::MalformedHeader, "dataset has no header row");
  }
  std::vector<std::string> header;
  for (const auto& cell : textio::split(textio::trim(lines.front()), ',')) {
    header.emplace_back(textio::trim(cell));
  }
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) position.emplace(header[c], c);

  std::vector<std::size_t> columns;
  for (const auto& name : names) {
    auto it = position.find(name);
    if (it == position.end()) throw Error(ErrorCode::MalformedHeader, "missing column '" + name + "'");
    columns.push_back(it->second);
  }
  auto label_it = position.find("label");
  if (label_it == position.end()) throw Error(ErrorCode::MalformedHeader, "missing column 'label'");
  const std::size_t label_col = label_it->second;

  std::vector<FeatureVector> rows;
  std::size_t row_no = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = textio::trim(lines[li]);
    if (line.empty()) continue;
    ++row_no;
    const auto cells = textio::split(line, ',');
    if (cells.size() != header.size()) {
      throw CellError(ErrorCode::MalformedHeader, row_no, cells.size(), "",
                      "row has " + std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(header.size()));
    }
    FeatureVector fv;
    fv.flow_id = std::to_string(row_no - 1);
    fv.values.reserve(columns.size());
    for (std::size_t k = 0; k < columns.size(); ++k) {
      const auto c = columns[k];
      auto v = textio::parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw CellError(ErrorCode::NonNumericCell, row_no, c, header[c],
                        "expected a finite number, got '" + cells[c] + "'");
      }
      fv.values.push_back(*v);
    }
    try {
      fv.label = parse_label(cells[label_col]);
    } catch (const Error& e) {
      throw CellError(ErrorCode::NonNumericCell, row_no, label_col, "label", e.what());
    }
    rows.push_back(std::move(fv));
  }
  return rows;
}

void save_dataset(const std::vector<FeatureVector>& rows, const std::filesystem::path& path) {
  textio::write_file(path, dataset_csv(rows));
}

std::vector<FeatureVector> load_dataset(const std::filesystem::path& path) {
  return parse_dataset_csv(textio::read_file(path));
}

}  // namespace fedids
