#include "dcfa/evaluation.hpp"

namespace dcfa {

void testPairs(const Dataset& ds, const SplitPlan& plan, bool balanced, std::vector<Pair>& pairs,
               std::vector<double>& labels) {
    pairs = plan.testPositives;
    labels.assign(pairs.size(), 1.0);
    if (balanced) {
        pairs.insert(pairs.end(), plan.testNegatives.begin(), plan.testNegatives.end());
    } else {
        for (int i = 0; i < ds.drugCount; ++i)
            for (int j = 0; j < ds.microbeCount; ++j)
                if (ds.associations(i, j) == 0.0) pairs.push_back({i, j});
    }
    labels.resize(pairs.size(), 0.0);
}

MetricValues evaluateTrainer(Trainer& trainer, const Dataset& ds, bool balancedNegatives) {
    std::vector<Pair> pairs;
    std::vector<double> labels;
    testPairs(ds, trainer.plan(), balancedNegatives, pairs, labels);
    if (pairs.empty()) throw DataError("no test pairs in split plan");
    return computeMetrics(trainer.scorePairs(pairs), labels);
}

MetricsReport runWarm(const Dataset& ds, const TrainConfig& cfg, const std::vector<uint64_t>& seeds,
                      std::vector<MetricValues>* perRun) {
    std::vector<MetricValues> runs;
    for (uint64_t seed : seeds) {
        TrainConfig c = cfg;
        c.seed = seed;
        Dataset local = ds;
        SplitPlan plan = warmSplit(local, c.testFraction, seed);
        applyGaussianFallback(local, plan);
        Trainer trainer(local, plan, c);
        trainer.fit();
        runs.push_back(evaluateTrainer(trainer, local, c.balancedTestNegatives));
    }
    if (perRun) *perRun = runs;
    return aggregateMetrics(runs);
}

MetricsReport runColdStart(const Dataset& ds, const TrainConfig& cfg, SplitMode side,
                           const std::vector<double>& fractions,
                           const std::vector<uint64_t>& seeds,
                           std::vector<MetricValues>* perRun) {
    std::vector<MetricValues> runs;
    for (double fraction : fractions) {
        for (uint64_t seed : seeds) {
            TrainConfig c = cfg;
            c.seed = seed;
            Dataset local = ds;
            SplitPlan plan = coldStartSplit(local, side, fraction, seed);
            if (plan.degenerate || plan.testNegatives.empty()) continue;
            applyGaussianFallback(local, plan);
            Trainer trainer(local, plan, c);
            trainer.fit();
            runs.push_back(evaluateTrainer(trainer, local, c.balancedTestNegatives));
        }
    }
    if (runs.empty()) throw DataError("cold-start protocol produced no usable runs");
    if (perRun) *perRun = runs;
    return aggregateMetrics(runs);
}

}  // namespace dcfa
