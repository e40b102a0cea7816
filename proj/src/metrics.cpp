#include "fedids/metrics.hpp"

#include "fedids/error.hpp"

namespace fedids {

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tp += o.tp;
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

double accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) throw Error(ErrorCode::EmptyConfusion, "no classified rows");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::optional<double> f1(const ConfusionCounts& c) {
  const auto denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

std::optional<double> fpr(const ConfusionCounts& c) {
  const auto denom = c.fp + c.tn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(c.fp) / static_cast<double>(denom);
}

}  // namespace fedids
