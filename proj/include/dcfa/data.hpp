#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dcfa/matrix.hpp"

namespace dcfa {

/// Deterministic bounded draw / shuffle helpers. std::shuffle and the
/// distribution classes are implementation-defined; these are pinned so a
/// seed identifies one exact stream.
namespace rng {
inline uint64_t below(std::mt19937_64& eng, uint64_t n) { return eng() % n; }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& eng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(eng, i)]);
}

inline double uniform(std::mt19937_64& eng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(eng() >> 11) * 0x1.0p-53);
}

// Box-Muller, one draw per call (the second value is discarded to keep the
// stream position independent of call parity).
inline double normal(std::mt19937_64& eng, double mean, double stddev) {
    const double u1 = uniform(eng, 1e-300, 1.0);
    const double u2 = uniform(eng, 0.0, 1.0);
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}
}  // namespace rng

struct Pair {
    int drug = 0;
    int microbe = 0;
    bool operator==(const Pair&) const = default;
    bool operator<(const Pair& o) const {
        return drug != o.drug ? drug < o.drug : microbe < o.microbe;
    }
};

struct Dataset {
    int drugCount = 0;
    int microbeCount = 0;
    DenseMatrix associations;  // drugCount x microbeCount, entries in {0,1}
    DenseMatrix drugSim;       // drugCount x drugCount, symmetric, diag 1
    DenseMatrix microbeSim;    // microbeCount x microbeCount
    std::vector<std::string> drugNames;
    std::vector<std::string> microbeNames;
    bool hasDrugSim = false;
    bool hasMicrobeSim = false;

    std::vector<Pair> positives() const;
};

enum class SplitMode { Warm, ColdStartDrug, ColdStartMicrobe };

struct SplitPlan {
    SplitMode mode = SplitMode::Warm;
    uint64_t seed = 0;
    std::vector<Pair> trainPositives;
    std::vector<Pair> testPositives;
    std::vector<Pair> trainNegatives;
    std::vector<Pair> testNegatives;
    std::vector<int> heldOutNodes;  // cold-start only
    bool degenerate = false;        // cold-start selection with zero test positives
};

/// Load the association matrix plus both similarity matrices. Pass an empty
/// path for a similarity file to leave it unset (the Gaussian-kernel
/// fallback fills it after splitting).
Dataset loadDataset(const std::string& assocPath, const std::string& drugSimPath,
                    const std::string& microbeSimPath);

DenseMatrix readDelimitedMatrix(const std::string& path, std::vector<std::string>& rowNames,
                                std::vector<std::string>& colNames);
void writeDelimitedMatrix(const std::string& path, const DenseMatrix& m,
                          const std::vector<std::string>& rowNames,
                          const std::vector<std::string>& colNames);

SplitPlan warmSplit(const Dataset& ds, double testFraction, uint64_t seed);
SplitPlan coldStartSplit(const Dataset& ds, SplitMode side, double nodeFraction, uint64_t seed);

void writeSplitPlan(const std::string& path, const SplitPlan& plan);
SplitPlan readSplitPlan(const std::string& path);

/// Gaussian interaction-profile kernel similarity over the rows (forDrugs)
/// or columns of the given association structure; only train positives
/// contribute. Bandwidth = 1 / mean squared profile norm.
DenseMatrix gaussianProfileKernel(int drugCount, int microbeCount,
                                  const std::vector<Pair>& trainPositives, bool forDrugs);

/// Fill any missing similarity matrix of ds from the plan's train positives.
void applyGaussianFallback(Dataset& ds, const SplitPlan& plan);

}  // namespace dcfa
