#pragma once

#include <iosfwd>
#include <optional>

#include "dcfa/model.hpp"

namespace dcfa {

struct EpochLosses {
    double rel = 0.0;
    double advDrug = 0.0;
    double advMicrobe = 0.0;
    double total = 0.0;
};

/// Owns the full training state: graphs, model parameters, optimizer moments
/// and the RNG. One trainer per run; everything is derived deterministically
/// from (dataset, plan, config).
class Trainer {
public:
    Trainer(const Dataset& ds, const SplitPlan& plan, const TrainConfig& cfg);

    /// One full-batch gradient step over all training pairs.
    EpochLosses trainEpoch();

    /// Run epochs up to config().epochs, writing one tab-separated log line
    /// per epoch when log is non-null.
    std::vector<EpochLosses> fit(std::ostream* log = nullptr);

    /// Probabilities sigmoid(logit) for arbitrary pairs, evaluation mode.
    std::vector<double> scorePairs(const std::vector<Pair>& pairs);

    void saveCheckpoint(const std::string& path) const;
    void loadCheckpoint(const std::string& path);
    /// Reads only the config block of a checkpoint file.
    static TrainConfig checkpointConfig(const std::string& path);

    DcfaModel& model() { return model_; }
    HeteroGraph& hetero() { return hetero_; }
    const SplitPlan& plan() const { return plan_; }
    int epoch() const { return epoch_; }
    double positiveWeight() const { return wPos_; }

private:
    const Dataset& ds_;
    SplitPlan plan_;
    TrainConfig cfg_;
    std::mt19937_64 eng_;
    KnnGraph knnDrug_;
    KnnGraph knnMicrobe_;
    HeteroGraph hetero_;
    DcfaModel model_;
    std::vector<Pair> trainPairs_;
    std::vector<double> trainLabels_;
    double wPos_ = 1.0;
    int epoch_ = 0;
    long adamT_ = 0;
};

}  // namespace dcfa
