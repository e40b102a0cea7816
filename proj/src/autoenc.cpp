#include "fedids/autoenc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedids/error.hpp"
#include "fedids/random.hpp"
#include "fedids/textio.hpp"

namespace fedids {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "tanh";
}

Activation parse_activation(std::string_view text) {
  text = textio::trim(text);
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  if (text == "sigmoid") return Activation::Sigmoid;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + std::string(text) + "'");
}

LayerParams LayerParams::zeros(std::size_t in_dim, std::size_t out_dim) {
  return LayerParams{in_dim, out_dim, std::vector<double>(in_dim * out_dim, 0.0),
                     std::vector<double>(out_dim, 0.0)};
}

std::vector<std::size_t> AEModel::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers.empty()) return dims;
  dims.push_back(layers.front().in_dim);
  for (const auto& l : layers) dims.push_back(l.out_dim);
  return dims;
}

std::size_t AEModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

void validate(const AEModel& model) {
  if (model.layers.empty()) throw Error(ErrorCode::ArchitectureMismatch, "model has no layers");
  if (model.encoder_layers > model.layers.size()) {
    throw Error(ErrorCode::ArchitectureMismatch, "encoder depth exceeds layer count");
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    if (l.in_dim == 0 || l.out_dim == 0 || l.weights.size() != l.in_dim * l.out_dim ||
        l.bias.size() != l.out_dim) {
      throw Error(ErrorCode::ArchitectureMismatch, "layer " + std::to_string(i) + " is malformed");
    }
    if (i > 0 && model.layers[i - 1].out_dim != l.in_dim) {
      throw Error(ErrorCode::ArchitectureMismatch,
                  "layer " + std::to_string(i) + " does not chain with its predecessor");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(l.weights.begin(), l.weights.end(), finite) ||
        !std::all_of(l.bias.begin(), l.bias.end(), finite)) {
      throw Error(ErrorCode::ArchitectureMismatch, "layer " + std::to_string(i) + " is not finite");
    }
  }
  if (model.layers.back().out_dim != model.input_dim()) {
    throw Error(ErrorCode::ArchitectureMismatch, "output width differs from input width");
  }
}

bool same_architecture(const AEModel& a, const AEModel& b) {
  return a.activation == b.activation && a.encoder_layers == b.encoder_layers &&
         a.layer_dims() == b.layer_dims();
}

AEModel init_model(std::size_t input_dim, Activation activation, std::uint64_t seed) {
  if (input_dim < 4) {
    throw Error(ErrorCode::DimensionTooSmall,
                "input dimension " + std::to_string(input_dim) + " is below 4");
  }
  const std::size_t half = (input_dim + 1) / 2;
  const std::size_t quarter = (input_dim + 3) / 4;
  const std::size_t dims[] = {input_dim, half, quarter, half, input_dim};

  AEModel model;
  model.activation = activation;
  model.encoder_layers = 2;
  auto rng = make_rng({seed});
  for (std::size_t i = 0; i + 1 < std::size(dims); ++i) {
    auto layer = LayerParams::zeros(dims[i], dims[i + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(dims[i] + dims[i + 1]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& w : layer.weights) w = dist(rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return z;
}

// Derivative expressed through the pre-activation z and output a = s(z).
double activate_grad(Activation a, double z, double out) {
  switch (a) {
    case Activation::Tanh: return 1.0 - out * out;
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return out * (1.0 - out);
  }
  return 1.0;
}

// y = W x + b
void affine(const LayerParams& l, std::span<const double> x, std::vector<double>& y) {
  y.assign(l.bias.begin(), l.bias.end());
  for (std::size_t r = 0; r < l.out_dim; ++r) {
    const double* row = l.weights.data() + r * l.in_dim;
    double acc = 0.0;
    for (std::size_t c = 0; c < l.in_dim; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// Runs layers [first, last) on x. The network's final layer is linear.
std::vector<double> run_layers(const AEModel& model, std::size_t first, std::size_t last,
                               std::span<const double> x) {
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t i = first; i < last; ++i) {
    affine(model.layers[i], cur, next);
    if (i + 1 < model.layers.size()) {
      for (auto& v : next) v = activate(model.activation, v);
    }
    cur.swap(next);
  }
  return cur;
}

void check_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " has length " +
                                                  std::to_string(got) + ", expected " +
                                                  std::to_string(want));
  }
}

}  // namespace

std::vector<double> encode(const AEModel& model, std::span<const double> x) {
  check_dim(x.size(), model.input_dim(), "input");
  return run_layers(model, 0, model.encoder_layers, x);
}

std::vector<double> decode(const AEModel& model, std::span<const double> h) {
  check_dim(h.size(), model.latent_dim(), "latent vector");
  return run_layers(model, model.encoder_layers, model.layers.size(), h);
}

std::vector<double> reconstruct(const AEModel& model, std::span<const double> x) {
  check_dim(x.size(), model.input_dim(), "input");
  return run_layers(model, 0, model.layers.size(), x);
}

double reconstruction_error(const AEModel& model, std::span<const double> x) {
  const auto y = reconstruct(model, x);
  double ss = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) ss += (x[j] - y[j]) * (x[j] - y[j]);
  return ss / static_cast<double>(x.size());
}

double mean_reconstruction_error(const AEModel& model, const Matrix& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& row : rows) sum += reconstruction_error(model, row);
  return sum / static_cast<double>(rows.size());
}

LossAndGradients loss_and_gradients(const AEModel& model,
                                    std::span<const std::vector<double>> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "batch is empty");
  const std::size_t depth = model.layers.size();
  const std::size_t d = model.input_dim();

  LossAndGradients out;
  out.gradients.reserve(depth);
  for (const auto& l : model.layers) out.gradients.push_back(LayerParams::zeros(l.in_dim, l.out_dim));

  // acts[i] is the input to layer i; acts[depth] is the reconstruction.
  std::vector<std::vector<double>> pre(depth);
  std::vector<std::vector<double>> acts(depth + 1);
  std::vector<double> delta;
  std::vector<double> prev_delta;
  double loss_sum = 0.0;

  for (const auto& x : batch) {
    check_dim(x.size(), d, "batch row");
    acts[0] = x;
    for (std::size_t i = 0; i < depth; ++i) {
      affine(model.layers[i], acts[i], pre[i]);
      acts[i + 1] = pre[i];
      if (i + 1 < depth) {
        for (auto& v : acts[i + 1]) v = activate(model.activation, v);
      }
    }

    const auto& y = acts[depth];
    delta.resize(d);
    double ss = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = y[j] - x[j];
      ss += diff * diff;
      delta[j] = 2.0 * diff / static_cast<double>(d);
    }
    loss_sum += ss / static_cast<double>(d);

    for (std::size_t i = depth; i-- > 0;) {
      const auto& layer = model.layers[i];
      auto& g = out.gradients[i];
      const auto& input = acts[i];
      for (std::size_t r = 0; r < layer.out_dim; ++r) {
        double* grow = g.weights.data() + r * layer.in_dim;
        for (std::size_t c = 0; c < layer.in_dim; ++c) grow[c] += delta[r] * input[c];
        g.bias[r] += delta[r];
      }
      if (i == 0) break;
      prev_delta.assign(layer.in_dim, 0.0);
      for (std::size_t r = 0; r < layer.out_dim; ++r) {
        const double* wrow = layer.weights.data() + r * layer.in_dim;
        for (std::size_t c = 0; c < layer.in_dim; ++c) prev_delta[c] += wrow[c] * delta[r];
      }
      for (std::size_t c = 0; c < layer.in_dim; ++c) {
        prev_delta[c] *= activate_grad(model.activation, pre[i - 1][c], acts[i][c]);
      }
      delta.swap(prev_delta);
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss = loss_sum * inv;
  for (auto& g : out.gradients) {
    for (auto& v : g.weights) v *= inv;
    for (auto& v : g.bias) v *= inv;
  }
  return out;
}

void apply_update(AEModel& model, const Gradients& gradients, double scale) {
  if (gradients.size() != model.layers.size()) {
    throw Error(ErrorCode::ArchitectureMismatch, "gradient depth differs from model depth");
  }
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    auto& l = model.layers[i];
    const auto& g = gradients[i];
    if (g.weights.size() != l.weights.size() || g.bias.size() != l.bias.size()) {
      throw Error(ErrorCode::ArchitectureMismatch, "gradient shape differs at layer " + std::to_string(i));
    }
    for (std::size_t k = 0; k < l.weights.size(); ++k) l.weights[k] += scale * g.weights[k];
    for (std::size_t k = 0; k < l.bias.size(); ++k) l.bias[k] += scale * g.bias[k];
  }
}

TrainResult train_local(AEModel model, const Matrix& rows, const TrainConfig& config) {
  if (rows.empty()) throw Error(ErrorCode::EmptyDataset, "no training rows");
  if (!(config.learning_rate >= 0.0) || config.batch_size == 0 || config.epochs == 0) {
    throw Error(ErrorCode::InvalidArgument, "learning rate, batch size and epochs must be valid");
  }
  TrainResult result;
  result.epoch_loss.reserve(config.epochs);

  std::vector<std::size_t> order(rows.size());
  std::vector<std::vector<double>> batch;
  batch.reserve(std::min(config.batch_size, rows.size()));
  for (std::size_t e = 0; e < config.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng({config.seed, config.first_epoch + e});
    std::shuffle(order.begin(), order.end(), rng);

    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(rows[order[k]]);
      auto lg = loss_and_gradients(model, batch);
      weighted_loss += lg.loss * static_cast<double>(batch.size());
      apply_update(model, lg.gradients, -config.learning_rate);
    }
    result.epoch_loss.push_back(weighted_loss / static_cast<double>(rows.size()));
  }
  result.model = std::move(model);
  return result;
}

namespace {

constexpr int kModelFormatVersion = 1;

std::vector<double> to_doubles(const std::vector<std::size_t>& xs) {
  return std::vector<double>(xs.begin(), xs.end());
}

std::vector<std::size_t> to_sizes(const std::vector<double>& xs, const std::string& key) {
  std::vector<std::size_t> out;
  for (double x : xs) {
    if (!(x >= 0.0) || x != std::floor(x)) {
      throw Error(ErrorCode::MalformedDocument, "key '" + key + "' must hold non-negative integers");
    }
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

std::string serialize_model(const AEModel& model, const FeatureSchema* schema) {
  textio::KeyValueDoc doc;
  doc.set("format_version", std::to_string(kModelFormatVersion));
  doc.set("input_dim", std::to_string(model.input_dim()));
  doc.set("activation", std::string(to_string(model.activation)));
  std::string dims;
  for (auto d : model.layer_dims()) dims += (dims.empty() ? "" : " ") + std::to_string(d);
  doc.set("layer_dims", dims);
  doc.set("encoder_layers", std::to_string(model.encoder_layers));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto prefix = "layer." + std::to_string(i) + ".";
    doc.set_numbers(prefix + "weights", model.layers[i].weights);
    doc.set_numbers(prefix + "bias", model.layers[i].bias);
  }
  if (schema) {
    std::string names;
    for (const auto& n : schema->names) names += (names.empty() ? "" : " ") + n;
    doc.set("schema.names", names);
    doc.set_numbers("schema.retained_indices", to_doubles(schema->retained_indices));
    doc.set_numbers("schema.scale_min", schema->scale_min);
    doc.set_numbers("schema.scale_max", schema->scale_max);
  }
  return doc.str();
}

ModelFile deserialize_model(std::string_view text) {
  const auto doc = textio::KeyValueDoc::parse(text);
  if (doc.get_int("format_version") != kModelFormatVersion) {
    throw Error(ErrorCode::MalformedDocument, "unsupported model format_version " + doc.get("format_version"));
  }
  ModelFile file;
  auto& model = file.model;
  model.activation = parse_activation(doc.get("activation"));
  const auto dims = to_sizes(doc.get_numbers("layer_dims"), "layer_dims");
  if (dims.size() < 2) throw Error(ErrorCode::MalformedDocument, "layer_dims needs two entries");
  model.encoder_layers = doc.contains("encoder_layers")
                             ? static_cast<std::size_t>(doc.get_int("encoder_layers"))
                             : (dims.size() - 1) / 2;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto prefix = "layer." + std::to_string(i) + ".";
    LayerParams l{dims[i], dims[i + 1], doc.get_numbers(prefix + "weights"),
                  doc.get_numbers(prefix + "bias")};
    model.layers.push_back(std::move(l));
  }
  validate(model);
  if (static_cast<std::size_t>(doc.get_int("input_dim")) != model.input_dim()) {
    throw Error(ErrorCode::MalformedDocument, "input_dim disagrees with layer_dims");
  }
  if (doc.contains("schema.names")) {
    FeatureSchema s;
    s.names = textio::split_whitespace(doc.get("schema.names"));
    s.retained_indices = to_sizes(doc.get_numbers("schema.retained_indices"), "schema.retained_indices");
    s.scale_min = doc.get_numbers("schema.scale_min");
    s.scale_max = doc.get_numbers("schema.scale_max");
    if (s.scale_min.size() != s.retained_indices.size() ||
        s.scale_max.size() != s.retained_indices.size() ||
        s.retained_indices.size() != model.input_dim()) {
      throw Error(ErrorCode::MalformedDocument, "schema does not match the model input");
    }
    for (std::size_t k = 0; k < s.retained_indices.size(); ++k) {
      if (s.retained_indices[k] >= s.names.size() ||
          (k > 0 && s.retained_indices[k] <= s.retained_indices[k - 1]) ||
          s.scale_max[k] < s.scale_min[k]) {
        throw Error(ErrorCode::MalformedDocument, "schema retained indices or ranges are invalid");
      }
    }
    file.schema = std::move(s);
  }
  return file;
}

void save_model(const std::filesystem::path& path, const AEModel& model, const FeatureSchema* schema) {
  textio::write_file(path, serialize_model(model, schema));
}

ModelFile load_model(const std::filesystem::path& path) {
  return deserialize_model(textio::read_file(path));
}

}  // namespace fedids
