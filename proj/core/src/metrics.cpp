#include "claimworthy/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "claimworthy/error.hpp"

namespace claimworthy {

ConfusionMatrix confusion(std::span<const Label> predictions,
                          std::span<const Label> gold) {
  if (predictions.size() != gold.size()) {
    std::ostringstream msg;
    msg << "prediction/gold length mismatch: " << predictions.size() << " vs "
        << gold.size();
    throw Error(ErrorKind::Validation, msg.str());
  }
  if (predictions.empty()) {
    throw Error(ErrorKind::Validation, "cannot score an empty prediction list");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool predicted_yes = predictions[i] == Label::Yes;
    const bool gold_yes = gold[i] == Label::Yes;
    if (predicted_yes && gold_yes) ++cm.tp;
    else if (predicted_yes && !gold_yes) ++cm.fp;
    else if (!predicted_yes && gold_yes) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) {
    throw Error(ErrorKind::Validation, "empty confusion matrix");
  }
  MetricsReport r;
  const double tp = static_cast<double>(cm.tp);
  r.precision = (cm.tp + cm.fp) == 0 ? 0.0 : tp / static_cast<double>(cm.tp + cm.fp);
  r.recall = (cm.tp + cm.fn) == 0 ? 0.0 : tp / static_cast<double>(cm.tp + cm.fn);
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
  return r;
}

MetricsReport average_rounds(std::span<const MetricsReport> reports) {
  if (reports.empty()) {
    throw Error(ErrorKind::Validation, "cannot average zero rounds");
  }
  MetricsReport mean;
  for (const MetricsReport& r : reports) {
    mean.f1 += r.f1;
    mean.recall += r.recall;
    mean.precision += r.precision;
    mean.accuracy += r.accuracy;
  }
  const double n = static_cast<double>(reports.size());
  mean.f1 /= n;
  mean.recall /= n;
  mean.precision /= n;
  mean.accuracy /= n;
  return mean;
}

std::string render4(double value) {
  // glibc's binary-to-decimal conversion rounds to nearest under the default
  // FP environment, which is half-even at the 4th decimal.
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.4f", value);
  return buffer;
}

}  // namespace claimworthy
