#include "dcfa/synth.hpp"

#include <algorithm>
#include <filesystem>

namespace dcfa {

namespace {

DenseMatrix communitySimilarity(const std::vector<int>& comm, double noise,
                                std::mt19937_64& eng) {
    const int n = static_cast<int>(comm.size());
    DenseMatrix sim(n, n);
    for (int i = 0; i < n; ++i) {
        sim(i, i) = 1.0;
        for (int j = 0; j < i; ++j) {
            double v = comm[i] == comm[j] ? 1.0 : 0.0;
            if (noise > 0.0) v += rng::normal(eng, 0.0, noise);
            v = std::clamp(v, 0.0, 1.0);
            sim(i, j) = sim(j, i) = v;
        }
    }
    return sim;
}

}  // namespace

Dataset generateSynthetic(const SynthSpec& spec) {
    if (spec.nDrugs < 1 || spec.nMicrobes < 1 || spec.communities < 1)
        throw ConfigError("synth: sizes and community count must be >= 1");
    if (spec.pIn < 0.0 || spec.pIn > 1.0 || spec.pOut < 0.0 || spec.pOut > 1.0)
        throw ConfigError("synth: probabilities must be in [0,1]");
    if (spec.simNoise < 0.0) throw ConfigError("synth: simNoise must be >= 0");
    Dataset ds;
    ds.drugCount = spec.nDrugs;
    ds.microbeCount = spec.nMicrobes;
    std::vector<int> drugComm(spec.nDrugs), microbeComm(spec.nMicrobes);
    for (int i = 0; i < spec.nDrugs; ++i) drugComm[i] = i % spec.communities;
    for (int j = 0; j < spec.nMicrobes; ++j) microbeComm[j] = j % spec.communities;
    std::mt19937_64 eng(spec.seed);
    ds.associations = DenseMatrix(spec.nDrugs, spec.nMicrobes);
    for (int i = 0; i < spec.nDrugs; ++i)
        for (int j = 0; j < spec.nMicrobes; ++j) {
            const double p = drugComm[i] == microbeComm[j] ? spec.pIn : spec.pOut;
            ds.associations(i, j) = rng::uniform(eng, 0.0, 1.0) < p ? 1.0 : 0.0;
        }
    ds.drugSim = communitySimilarity(drugComm, spec.simNoise, eng);
    ds.microbeSim = communitySimilarity(microbeComm, spec.simNoise, eng);
    ds.hasDrugSim = ds.hasMicrobeSim = true;
    ds.drugNames.resize(spec.nDrugs);
    ds.microbeNames.resize(spec.nMicrobes);
    for (int i = 0; i < spec.nDrugs; ++i) ds.drugNames[i] = "drug" + std::to_string(i);
    for (int j = 0; j < spec.nMicrobes; ++j) ds.microbeNames[j] = "microbe" + std::to_string(j);
    return ds;
}

void writeSyntheticFiles(const std::string& outDir, const Dataset& ds) {
    std::filesystem::create_directories(outDir);
    writeDelimitedMatrix(outDir + "/associations.tsv", ds.associations, ds.drugNames,
                         ds.microbeNames);
    writeDelimitedMatrix(outDir + "/drug_sim.tsv", ds.drugSim, ds.drugNames, ds.drugNames);
    writeDelimitedMatrix(outDir + "/microbe_sim.tsv", ds.microbeSim, ds.microbeNames,
                         ds.microbeNames);
}

}  // namespace dcfa
