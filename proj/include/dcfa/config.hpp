#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dcfa/matrix.hpp"

namespace dcfa {

enum class FusionMode { Bsam, Add, Multiply, ConcatReduce, CrossAttention };
enum class OptimizerKind { Adam, Sgd };

FusionMode parseFusionMode(const std::string& s);
std::string fusionModeName(FusionMode m);

struct TrainConfig {
    int epochs = 4000;
    double learningRate = 0.005;
    double dropout = 0.5;
    double beta1 = 0.03;   // weight of the drug divergence loss
    double beta2 = 0.03;   // weight of the microbe divergence loss
    double gamma = 1.0;    // divergence margin
    int knn = 8;           // neighbor count N of the similarity KNN graphs
    int dim = 64;          // embedding dimension d
    int heads = 4;
    int blocks = 2;        // alternating transformer/GNN blocks B
    int sampleSize = 15;   // attention sample set size s
    uint64_t seed = 42;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double testFraction = 0.1;
    double positiveWeight = 0.0;  // <= 0: use train-negative/positive ratio
    bool sumReduction = false;    // literal summed BCE instead of the mean
    bool noResidual = false;      // drop residual + layer norm after attention
    bool softBias = true;         // sample-update score as an attention bias (trains U)
    bool balancedTestNegatives = true;
    FusionMode fusion = FusionMode::Bsam;
    // ablation switches
    bool noTrans = false;
    bool noGnn = false;
    bool attentionSwap = false;  // single-head unprojected attention
    bool gcnSwap = false;        // GNN layer replaced by GCN propagation
    bool noAdvDrug = false;
    bool noAdvMicrobe = false;
    bool advClose = false;       // hinge flipped to attraction

    void validate() const;
    std::map<std::string, std::string> toEntries() const;
    static TrainConfig fromEntries(const std::map<std::string, std::string>& entries);
};

/// Applies one of the ablation scenario labels to a config. Known scenarios:
/// -Trans, -GNN, Attention, GCN, -drug, -micro, "-drug microbe", close,
/// fusion:{add|multiply|concatDim|cross|bsam}, full.
void applyScenario(TrainConfig& cfg, const std::string& scenario);

/// Flat key=value config file; '#' starts a comment line.
std::map<std::string, std::string> readKeyValueFile(const std::string& path);
void writeKeyValueFile(const std::string& path, const std::map<std::string, std::string>& kv);

}  // namespace dcfa
