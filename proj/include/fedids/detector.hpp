#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedids/autoenc.hpp"
#include "fedids/flowlens.hpp"
#include "fedids/metrics.hpp"

namespace fedids {

inline constexpr double kDefaultMadMultiplier = 5.0;

// alpha = median_re + multiplier * mad over validation reconstruction errors.
struct DetectionThreshold {
  double alpha = 0.0;
  double median_re = 0.0;
  double mad = 0.0;
  std::size_t n_validation = 0;
  double multiplier = kDefaultMadMultiplier;

  bool operator==(const DetectionThreshold&) const = default;
};

enum class VerdictLabel : unsigned char { Benign, Malicious };

std::string_view to_string(VerdictLabel v);

struct Verdict {
  std::string flow_id;
  double re = 0.0;
  VerdictLabel label = VerdictLabel::Benign;
};

// Median of a copy of values; the mean of the two middle order statistics
// when the size is even. Throws EmptyValidationSet on empty input.
double median(std::vector<double> values);

DetectionThreshold calibrate_threshold(const std::vector<double>& re_validation,
                                       double multiplier = kDefaultMadMultiplier);

// Malicious iff re > alpha; a tie is benign.
VerdictLabel classify(double re, const DetectionThreshold& threshold);

struct DetectionResult {
  std::vector<Verdict> verdicts;
  // Attack labels are positives, benign negatives; unknown rows are skipped.
  ConfusionCounts confusion;
};

DetectionResult detect_batch(const AEModel& model, const DetectionThreshold& threshold,
                             const std::vector<FeatureVector>& rows);

// Tallies verdicts against their ground-truth labels.
ConfusionCounts tally(const std::vector<Verdict>& verdicts, const std::vector<FeatureVector>& rows);

std::string serialize_threshold(const DetectionThreshold& t);
DetectionThreshold deserialize_threshold(std::string_view text);
void save_threshold(const std::filesystem::path& path, const DetectionThreshold& t);
DetectionThreshold load_threshold(const std::filesystem::path& path);

// flow_id,re,label
std::string verdict_csv(const std::vector<Verdict>& verdicts);

}  // namespace fedids
