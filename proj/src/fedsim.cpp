#include "fedids/fedsim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <iterator>
#include <numeric>
#include <optional>

#include "fedids/error.hpp"
#include "fedids/random.hpp"
#include "fedids/textio.hpp"

namespace fedids {

std::size_t FedConfig::clients_per_round() const {
  // The small slack keeps e.g. 0.3 * 10 from flooring to 2.
  const auto m = static_cast<std::size_t>(std::floor(c_fraction * static_cast<double>(k_clients) + 1e-9));
  return std::max<std::size_t>(m, 1);
}

void validate(const FedConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (c.k_clients == 0) fail("k_clients must be >= 1");
  if (!(c.c_fraction > 0.0 && c.c_fraction <= 1.0)) fail("c_fraction must lie in (0, 1]");
  if (c.batch_size == 0) fail("batch_size must be >= 1");
  if (c.local_epochs == 0) fail("local_epochs must be >= 1");
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate must be >= 0");
  if (c.standalone_epochs == 0) fail("standalone_epochs must be >= 1");
  if (c.server_retrain.enabled && (c.server_retrain.sample_size == 0 || c.server_retrain.retrain_epochs == 0)) {
    fail("server retraining needs a positive sample size and epoch count");
  }
  if (!(c.mad_multiplier >= 0.0) || !std::isfinite(c.mad_multiplier)) fail("mad_multiplier must be >= 0");
}

namespace {

std::size_t to_count(const textio::KeyValueDoc& doc, const std::string& key) {
  const auto v = doc.get_int(key);
  if (v < 0) throw Error(ErrorCode::InvalidArgument, "'" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorCode::InvalidArgument, "'" + key + "' must be a boolean, got '" + text + "'");
}

}  // namespace

FedConfig parse_fed_config(std::string_view text, FedConfig base) {
  const auto doc = textio::KeyValueDoc::parse(text);
  FedConfig c = base;
  std::optional<std::size_t> selected;
  for (const auto& key : doc.keys()) {
    if (key == "k_clients" || key == "Nb_clients") {
      c.k_clients = to_count(doc, key);
    } else if (key == "c_fraction") {
      c.c_fraction = doc.get_number(key);
    } else if (key == "Nb_selected") {
      selected = to_count(doc, key);
    } else if (key == "batch_size" || key == "Batch_size") {
      c.batch_size = to_count(doc, key);
    } else if (key == "local_epochs" || key == "Epochs" || key == "E") {
      c.local_epochs = to_count(doc, key);
    } else if (key == "learning_rate" || key == "lr") {
      c.learning_rate = doc.get_number(key);
    } else if (key == "n_rounds" || key == "Nb_rounds") {
      c.n_rounds = to_count(doc, key);
    } else if (key == "seed") {
      auto v = textio::parse_uint(doc.get(key));
      if (!v) throw Error(ErrorCode::InvalidArgument, "seed must be an unsigned integer");
      c.seed = *v;
    } else if (key == "server_retrain.enabled" || key == "server_retrain") {
      c.server_retrain.enabled = to_bool(key, doc.get(key));
    } else if (key == "server_retrain.sample_size" || key == "R_samp_sz") {
      c.server_retrain.sample_size = to_count(doc, key);
    } else if (key == "server_retrain.retrain_epochs" || key == "Nb_retrain_epochs") {
      c.server_retrain.retrain_epochs = to_count(doc, key);
    } else if (key == "standalone_epochs" || key == "Nb_local_epochs") {
      c.standalone_epochs = to_count(doc, key);
    } else if (key == "activation") {
      c.activation = parse_activation(doc.get(key));
    } else if (key == "mad_multiplier") {
      c.mad_multiplier = doc.get_number(key);
    } else if (key == "parallel_clients") {
      c.parallel_clients = to_bool(key, doc.get(key));
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  }
  if (selected) {
    if (*selected == 0 || *selected > c.k_clients) {
      throw Error(ErrorCode::InvalidArgument, "Nb_selected must lie in [1, k_clients]");
    }
    c.c_fraction = static_cast<double>(*selected) / static_cast<double>(c.k_clients);
  }
  validate(c);
  return c;
}

FedConfig load_fed_config(const std::filesystem::path& path, FedConfig base) {
  return parse_fed_config(textio::read_file(path), base);
}

std::string serialize_fed_config(const FedConfig& c) {
  textio::KeyValueDoc doc;
  doc.set("k_clients", std::to_string(c.k_clients));
  doc.set_number("c_fraction", c.c_fraction);
  doc.set("batch_size", std::to_string(c.batch_size));
  doc.set("local_epochs", std::to_string(c.local_epochs));
  doc.set_number("learning_rate", c.learning_rate);
  doc.set("n_rounds", std::to_string(c.n_rounds));
  doc.set("seed", std::to_string(c.seed));
  doc.set("server_retrain.enabled", c.server_retrain.enabled ? "true" : "false");
  doc.set("server_retrain.sample_size", std::to_string(c.server_retrain.sample_size));
  doc.set("server_retrain.retrain_epochs", std::to_string(c.server_retrain.retrain_epochs));
  doc.set("standalone_epochs", std::to_string(c.standalone_epochs));
  doc.set("activation", std::string(to_string(c.activation)));
  doc.set_number("mad_multiplier", c.mad_multiplier);
  doc.set("parallel_clients", c.parallel_clients ? "true" : "false");
  return doc.str();
}

std::vector<ClientState> partition_clients(const Matrix& benign_rows, std::size_t k_clients,
                                           std::uint64_t seed) {
  if (k_clients == 0) throw Error(ErrorCode::InvalidArgument, "k_clients must be >= 1");
  if (benign_rows.size() < k_clients) {
    throw Error(ErrorCode::TooFewRows, std::to_string(benign_rows.size()) + " rows for " +
                                           std::to_string(k_clients) + " clients");
  }
  std::vector<std::size_t> order(benign_rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng({seed, 0xc11e47ULL});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t base = benign_rows.size() / k_clients;
  const std::size_t extra = benign_rows.size() % k_clients;
  std::vector<ClientState> clients(k_clients);
  std::size_t next = 0;
  for (std::size_t k = 0; k < k_clients; ++k) {
    clients[k].client_id = k;
    const std::size_t n = base + (k < extra ? 1 : 0);
    clients[k].local_rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) clients[k].local_rows.push_back(benign_rows[order[next++]]);
  }
  return clients;
}

std::vector<std::size_t> select_clients(std::size_t k_clients, double c_fraction, std::uint64_t seed,
                                        std::size_t round_index) {
  FedConfig c;
  c.k_clients = k_clients;
  c.c_fraction = c_fraction;
  if (k_clients == 0 || !(c_fraction > 0.0 && c_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "select_clients needs k >= 1 and c in (0, 1]");
  }
  const std::size_t m = c.clients_per_round();
  std::vector<std::size_t> all(k_clients);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (m >= k_clients) return all;
  std::vector<std::size_t> picked;
  picked.reserve(m);
  auto rng = make_rng({seed, 0x5e1ec7ULL, round_index});
  std::sample(all.begin(), all.end(), std::back_inserter(picked), m, rng);
  return picked;
}

AEModel aggregate(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw Error(ErrorCode::EmptyUpdateSet, "no client updates to aggregate");
  std::size_t n = 0;
  for (const auto& u : updates) {
    if (!same_architecture(u.model, updates.front().model)) {
      throw Error(ErrorCode::ArchitectureMismatch, "client models differ in architecture");
    }
    n += u.n_k;
  }
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "client sample counts sum to zero");

  AEModel out = updates.front().model;
  for (auto& l : out.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  for (const auto& u : updates) {
    const double share = static_cast<double>(u.n_k) / static_cast<double>(n);
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
      auto& dst = out.layers[i];
      const auto& src = u.model.layers[i];
      for (std::size_t k = 0; k < dst.weights.size(); ++k) dst.weights[k] += share * src.weights[k];
      for (std::size_t k = 0; k < dst.bias.size(); ++k) dst.bias[k] += share * src.bias[k];
    }
  }
  return out;
}

std::uint64_t client_seed(std::uint64_t seed, std::size_t client_id) {
  return derive_seed({seed, 0xc1e47ULL, client_id});
}

namespace {

constexpr std::size_t kServerStream = ~std::size_t{0};

}  // namespace

GlobalModel run_round(const GlobalModel& global, const std::vector<ClientState>& clients,
                      const ServerData& server, const FedConfig& config, RoundTelemetry* telemetry) {
  validate(config);
  if (clients.size() != config.k_clients) {
    throw Error(ErrorCode::InvalidArgument, std::to_string(clients.size()) +
                                                " clients supplied, config expects " +
                                                std::to_string(config.k_clients));
  }
  if (server.validation.empty()) {
    throw Error(ErrorCode::EmptyValidationSet, "server holds no validation rows");
  }
  const auto started = std::chrono::steady_clock::now();
  const std::size_t t = global.round_index;
  const auto selected = select_clients(config.k_clients, config.c_fraction, config.seed, t);

  auto client_update = [&](std::size_t id) {
    const auto& client = clients[id];
    TrainConfig tc{config.learning_rate, config.batch_size, config.local_epochs,
                   client_seed(config.seed, client.client_id), t * config.local_epochs};
    return ClientUpdate{client.n_k(), train_local(global.model, client.local_rows, tc).model};
  };

  std::vector<ClientUpdate> updates;
  updates.reserve(selected.size());
  if (config.parallel_clients && selected.size() > 1) {
    std::vector<std::future<ClientUpdate>> pending;
    pending.reserve(selected.size());
    for (auto id : selected) pending.push_back(std::async(std::launch::async, client_update, id));
    for (auto& f : pending) updates.push_back(f.get());
  } else {
    for (auto id : selected) updates.push_back(client_update(id));
  }

  GlobalModel next;
  next.round_index = t + 1;
  next.model = aggregate(updates);

  if (config.server_retrain.enabled && !server.retrain_pool.empty()) {
    const auto& pool = server.retrain_pool;
    Matrix sample;
    auto rng = make_rng({config.seed, 0x7e7a1ULL, t});
    std::sample(pool.begin(), pool.end(), std::back_inserter(sample),
                std::min(config.server_retrain.sample_size, pool.size()), rng);
    TrainConfig tc{config.learning_rate, config.batch_size, config.server_retrain.retrain_epochs,
                   client_seed(config.seed, kServerStream), t * config.server_retrain.retrain_epochs};
    next.model = train_local(std::move(next.model), sample, tc).model;
  }

  next.loss_history = global.loss_history;
  next.loss_history.push_back(mean_reconstruction_error(next.model, server.validation));

  if (telemetry) {
    telemetry->round = next.round_index;
    telemetry->loss = next.loss_history.back();
    telemetry->seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    telemetry->selected = selected;
  }
  return next;
}

FederatedResult run_training(const AEModel& initial, const std::vector<ClientState>& clients,
                             const ServerData& server, const FedConfig& config) {
  validate(config);
  validate(initial);
  FederatedResult result;
  result.global.model = initial;
  for (std::size_t r = 0; r < config.n_rounds; ++r) {
    RoundTelemetry tel;
    result.global = run_round(result.global, clients, server, config, &tel);
    result.telemetry.push_back(std::move(tel));
  }
  if (server.validation.empty()) {
    throw Error(ErrorCode::EmptyValidationSet, "server holds no validation rows");
  }
  std::vector<double> re;
  re.reserve(server.validation.size());
  for (const auto& row : server.validation) re.push_back(reconstruction_error(result.global.model, row));
  result.threshold = calibrate_threshold(re, config.mad_multiplier);
  return result;
}

std::string telemetry_csv(const std::vector<RoundTelemetry>& telemetry) {
  std::string out = "round,loss,seconds\n";
  for (const auto& t : telemetry) {
    out += std::to_string(t.round) + ',' + textio::format_shortest(t.loss) + ',' +
           textio::format_shortest(t.seconds) + '\n';
  }
  return out;
}

}  // namespace fedids
