#include <cmath>
#include <vector>

#include "claimworthy/error.hpp"
#include "claimworthy/metrics.hpp"
#include "claimworthy/rng.hpp"
#include "doctest.h"

using namespace claimworthy;

namespace {

// Brute-force tally straight from the definition, used as the oracle for
// the randomized equivalence test.
MetricsReport brute_force(const std::vector<Label>& pred,
                          const std::vector<Label>& gold) {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == Label::Yes;
    const bool g = gold[i] == Label::Yes;
    if (p && g) tp++;
    else if (p && !g) fp++;
    else if (!p && g) fn++;
    else tn++;
  }
  MetricsReport r;
  r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0
             ? 2 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.accuracy = pred.empty() ? 0.0 : (tp + tn) / static_cast<double>(pred.size());
  return r;
}

}  // namespace

TEST_CASE("confusion matrix cell placement") {
  // Yes is the positive class.
  const std::vector<Label> pred{Label::Yes, Label::Yes, Label::No, Label::No};
  const std::vector<Label> gold{Label::Yes, Label::No, Label::Yes, Label::No};
  const ConfusionMatrix cm = confusion(pred, gold);
  CHECK(cm.tp == 1);
  CHECK(cm.fp == 1);
  CHECK(cm.fn == 1);
  CHECK(cm.tn == 1);
  CHECK(cm.total() == 4);
}

TEST_CASE("confusion rejects mismatched spans") {
  const std::vector<Label> pred{Label::Yes};
  const std::vector<Label> gold{Label::Yes, Label::No};
  CHECK_THROWS((void)confusion(pred, gold));
}

TEST_CASE("majority row anchor: 108 positives predicted all-No") {
  const ConfusionMatrix cm{0, 0, 108, 210};
  const MetricsReport r = report(cm);
  CHECK(render4(r.accuracy) == "0.6604");
  CHECK(render4(r.f1) == "0.0000");
  CHECK(render4(r.recall) == "0.0000");
  CHECK(render4(r.precision) == "0.0000");
}

TEST_CASE("all-Yes on the 108/210 split") {
  const MetricsReport r = report({108, 210, 0, 0});
  CHECK(render4(r.recall) == "1.0000");
  CHECK(render4(r.precision) == "0.3396");
  CHECK(render4(r.accuracy) == "0.3396");
  CHECK(render4(r.f1) == "0.5070");
}

TEST_CASE("zero-division conventions on degenerate matrices") {
  // No positives anywhere.
  MetricsReport r = report({0, 0, 0, 10});
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.accuracy == 1.0);

  // Predicted positives only (no gold positives).
  r = report({0, 5, 0, 0});
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.accuracy == 0.0);

  // Gold positives only (no predicted positives).
  r = report({0, 0, 5, 0});
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f1 == 0.0);

  // Everything correct.
  r = report({5, 0, 0, 5});
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.accuracy == 1.0);

  // The empty matrix has no defined accuracy and is refused outright.
  CHECK_THROWS_AS((void)report({0, 0, 0, 0}), Error);
}

TEST_CASE("report agrees with a brute-force tally on random cases") {
  rng::Engine engine = rng::make_engine(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng::bounded(engine, 64);
    std::vector<Label> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = rng::fair_bit(engine) ? Label::Yes : Label::No;
      gold[i] = rng::fair_bit(engine) ? Label::Yes : Label::No;
    }
    const MetricsReport fast = report(confusion(pred, gold));
    const MetricsReport slow = brute_force(pred, gold);
    CHECK(std::abs(fast.f1 - slow.f1) <= 1e-12);
    CHECK(std::abs(fast.recall - slow.recall) <= 1e-12);
    CHECK(std::abs(fast.precision - slow.precision) <= 1e-12);
    CHECK(std::abs(fast.accuracy - slow.accuracy) <= 1e-12);
  }
}

TEST_CASE("metric ranges and f1 bounds") {
  rng::Engine engine = rng::make_engine(7);
  for (int trial = 0; trial < 200; ++trial) {
    const ConfusionMatrix cm{rng::bounded(engine, 20), rng::bounded(engine, 20),
                             rng::bounded(engine, 20), rng::bounded(engine, 20)};
    const MetricsReport r = report(cm);
    for (double v : {r.f1, r.recall, r.precision, r.accuracy}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    // F1 is the harmonic mean: between min and max of P and R.
    CHECK(r.f1 <= std::max(r.precision, r.recall) + 1e-12);
    if (r.precision > 0 && r.recall > 0) {
      CHECK(r.f1 >= std::min(r.precision, r.recall) - 1e-12);
    }
  }
}

TEST_CASE("average_rounds is the per-metric arithmetic mean") {
  const std::vector<MetricsReport> rounds{
      {0.2, 0.4, 0.6, 0.8},
      {0.4, 0.6, 0.8, 1.0},
      {0.6, 0.8, 1.0, 0.0},
  };
  const MetricsReport mean = average_rounds(rounds);
  CHECK(mean.f1 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(mean.recall == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(mean.precision == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mean.accuracy == doctest::Approx(0.6).epsilon(1e-15));

  // Permutation-invariant.
  const std::vector<MetricsReport> flipped{rounds[2], rounds[0], rounds[1]};
  const MetricsReport mean2 = average_rounds(flipped);
  CHECK(mean2.f1 == mean.f1);
  CHECK(mean2.accuracy == mean.accuracy);

  // Singleton average is the identity.
  const MetricsReport one = average_rounds({rounds.data(), 1});
  CHECK(one.f1 == rounds[0].f1);
}

TEST_CASE("render4 renders four decimals with half-even ties") {
  CHECK(render4(0.0) == "0.0000");
  CHECK(render4(1.0) == "1.0000");
  CHECK(render4(210.0 / 318.0) == "0.6604");
  CHECK(render4(0.47484) == "0.4748");
  CHECK(render4(0.5) == "0.5000");

  // 3/32 and 1/32 are exact in binary, so their fifth decimal digit is a
  // genuine tie: 0.09375 and 0.03125 round to the even neighbour.
  CHECK(render4(0.09375) == "0.0938");
  CHECK(render4(0.03125) == "0.0312");
}
