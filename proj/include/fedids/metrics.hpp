#pragma once

#include <cstddef>
#include <optional>

namespace fedids {

// Positive class is "attack".
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;
};

// (TP + TN) / total. Throws EmptyConfusion when total is 0.
double accuracy(const ConfusionCounts& c);

// 2TP / (2TP + FP + FN); absent when the denominator is 0.
std::optional<double> f1(const ConfusionCounts& c);

// FP / (FP + TN); absent when the denominator is 0.
std::optional<double> fpr(const ConfusionCounts& c);

}  // namespace fedids
