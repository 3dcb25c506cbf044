#pragma once

#include "dcfa/data.hpp"

namespace dcfa {

/// Planted block-model specification for synthetic datasets: drugs and
/// microbes are assigned round-robin to `communities` blocks; associations
/// are Bernoulli(pIn) inside a block and Bernoulli(pOut) across blocks;
/// similarity is the same-community indicator plus N(0, simNoise), clamped
/// to [0,1] with unit diagonal.
struct SynthSpec {
    int nDrugs = 60;
    int nMicrobes = 30;
    int communities = 3;
    double pIn = 0.6;
    double pOut = 0.02;
    double simNoise = 0.1;
    uint64_t seed = 42;
};

Dataset generateSynthetic(const SynthSpec& spec);

/// Write the dataset in the association/similarity file format consumed by
/// loadDataset: <outDir>/associations.tsv, drug_sim.tsv, microbe_sim.tsv.
void writeSyntheticFiles(const std::string& outDir, const Dataset& ds);

}  // namespace dcfa
