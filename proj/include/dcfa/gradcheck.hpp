#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dcfa/model.hpp"

namespace dcfa {

struct GradCheckEntry {
    std::string param;
    int row = 0, col = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relError = 0.0;
    bool finite = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double maxRelError = 0.0;
    bool pass = false;

    std::string summary() const;
};

/// Scalar loss as a function of the current parameter values. When grads is
/// non-null the callback must also fill one gradient per parameter, in
/// registry order.
using LossFn = std::function<double(std::vector<DenseMatrix>* grads)>;

/// Compare analytic gradients against central finite differences on up to
/// samplesPerTensor random entries of every parameter. Passes iff the max
/// relative error is below tolerance and all perturbed losses were finite.
GradCheckReport gradCheck(ModelParams& params, const LossFn& lossFn, double eps = 1e-5,
                          int samplesPerTensor = 50, uint64_t seed = 0, double tolerance = 1e-4);

}  // namespace dcfa
