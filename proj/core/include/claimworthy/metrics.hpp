#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "claimworthy/corpus.hpp"

namespace claimworthy {

// Yes is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }

  bool operator==(const ConfusionMatrix&) const = default;
};

// Carried at full precision; rendered at four decimals via render4().
struct MetricsReport {
  double f1 = 0.0;
  double recall = 0.0;
  double precision = 0.0;
  double accuracy = 0.0;
};

ConfusionMatrix confusion(std::span<const Label> predictions,
                          std::span<const Label> gold);

// precision = tp/(tp+fp), recall = tp/(tp+fn), both with the 0/0 -> 0
// convention; f1 = 0 when precision+recall = 0, else 2PR/(P+R).
MetricsReport report(const ConfusionMatrix& cm);

// Arithmetic mean per metric at full precision (per-round averaging).
MetricsReport average_rounds(std::span<const MetricsReport> reports);

// Four-decimal rendering, half-even ("0.6604").
std::string render4(double value);

}  // namespace claimworthy
