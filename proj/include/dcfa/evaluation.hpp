#pragma once

#include "dcfa/metrics.hpp"
#include "dcfa/trainer.hpp"

namespace dcfa {

/// Test pairs and labels for a plan. Balanced: held-out positives plus the
/// plan's sampled negatives. All: held-out positives against every
/// non-associated pair.
void testPairs(const Dataset& ds, const SplitPlan& plan, bool balanced, std::vector<Pair>& pairs,
               std::vector<double>& labels);

MetricValues evaluateTrainer(Trainer& trainer, const Dataset& ds, bool balancedNegatives);

/// Train once per seed on a fresh warm split and aggregate the test metrics.
MetricsReport runWarm(const Dataset& ds, const TrainConfig& cfg, const std::vector<uint64_t>& seeds,
                      std::vector<MetricValues>* perRun = nullptr);

/// Cold-start protocol: train per (fraction, seed), average metrics over all
/// runs. Degenerate selections (no test positives) are skipped.
MetricsReport runColdStart(const Dataset& ds, const TrainConfig& cfg, SplitMode side,
                           const std::vector<double>& fractions,
                           const std::vector<uint64_t>& seeds,
                           std::vector<MetricValues>* perRun = nullptr);

}  // namespace dcfa
