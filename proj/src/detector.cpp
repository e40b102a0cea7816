#include "fedids/detector.hpp"

#include <algorithm>
#include <cmath>

#include "fedids/error.hpp"
#include "fedids/textio.hpp"

namespace fedids {

std::string_view to_string(VerdictLabel v) {
  return v == VerdictLabel::Malicious ? "malicious" : "benign";
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyValidationSet, "median of an empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

DetectionThreshold calibrate_threshold(const std::vector<double>& re_validation, double multiplier) {
  if (re_validation.empty()) {
    throw Error(ErrorCode::EmptyValidationSet, "no validation reconstruction errors");
  }
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
    throw Error(ErrorCode::InvalidArgument, "MAD multiplier must be finite and non-negative");
  }
  for (double re : re_validation) {
    if (!(re >= 0.0) || !std::isfinite(re)) {
      throw Error(ErrorCode::InvalidArgument, "reconstruction errors must be finite and >= 0");
    }
  }
  DetectionThreshold t;
  t.n_validation = re_validation.size();
  t.multiplier = multiplier;
  t.median_re = median(re_validation);
  std::vector<double> deviations;
  deviations.reserve(re_validation.size());
  for (double re : re_validation) deviations.push_back(std::abs(re - t.median_re));
  t.mad = median(std::move(deviations));
  t.alpha = t.median_re + multiplier * t.mad;
  return t;
}

VerdictLabel classify(double re, const DetectionThreshold& threshold) {
  return re > threshold.alpha ? VerdictLabel::Malicious : VerdictLabel::Benign;
}

ConfusionCounts tally(const std::vector<Verdict>& verdicts, const std::vector<FeatureVector>& rows) {
  if (verdicts.size() != rows.size()) {
    throw Error(ErrorCode::DimensionMismatch, "verdict count differs from row count");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].label == Label::Unknown) continue;
    const bool predicted = verdicts[i].label == VerdictLabel::Malicious;
    if (is_attack(rows[i].label)) {
      (predicted ? c.tp : c.fn) += 1;
    } else {
      (predicted ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

DetectionResult detect_batch(const AEModel& model, const DetectionThreshold& threshold,
                             const std::vector<FeatureVector>& rows) {
  DetectionResult result;
  result.verdicts.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const double re = reconstruction_error(model, row.values);
    result.verdicts.push_back(Verdict{row.flow_id.empty() ? std::to_string(i) : row.flow_id, re,
                                      classify(re, threshold)});
  }
  result.confusion = tally(result.verdicts, rows);
  return result;
}

std::string serialize_threshold(const DetectionThreshold& t) {
  textio::KeyValueDoc doc;
  doc.set_number("alpha", t.alpha);
  doc.set_number("median_re", t.median_re);
  doc.set_number("mad", t.mad);
  doc.set("n_validation", std::to_string(t.n_validation));
  doc.set_number("multiplier", t.multiplier);
  return doc.str();
}

DetectionThreshold deserialize_threshold(std::string_view text) {
  const auto doc = textio::KeyValueDoc::parse(text);
  DetectionThreshold t;
  t.alpha = doc.get_number("alpha");
  t.median_re = doc.get_number("median_re");
  t.mad = doc.get_number("mad");
  const auto n = doc.get_int("n_validation");
  if (n < 0) throw Error(ErrorCode::MalformedDocument, "n_validation must be >= 0");
  t.n_validation = static_cast<std::size_t>(n);
  t.multiplier = doc.contains("multiplier") ? doc.get_number("multiplier") : kDefaultMadMultiplier;
  if (!(t.mad >= 0.0) || !std::isfinite(t.alpha)) {
    throw Error(ErrorCode::MalformedDocument, "threshold values are invalid");
  }
  return t;
}

void save_threshold(const std::filesystem::path& path, const DetectionThreshold& t) {
  textio::write_file(path, serialize_threshold(t));
}

DetectionThreshold load_threshold(const std::filesystem::path& path) {
  return deserialize_threshold(textio::read_file(path));
}

std::string verdict_csv(const std::vector<Verdict>& verdicts) {
  std::string out = "flow_id,re,label\n";
  for (const auto& v : verdicts) {
    out += v.flow_id + ',' + textio::format_shortest(v.re) + ',' + std::string(to_string(v.label)) + '\n';
  }
  return out;
}

}  // namespace fedids
