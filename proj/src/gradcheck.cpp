#include "dcfa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dcfa {

std::string GradCheckReport::summary() const {
    std::ostringstream os;
    os << (pass ? "PASS" : "FAIL") << " max relative error " << maxRelError << " over "
       << entries.size() << " sampled entries";
    return os.str();
}

GradCheckReport gradCheck(ModelParams& params, const LossFn& lossFn, double eps,
                          int samplesPerTensor, uint64_t seed, double tolerance) {
    if (eps <= 0.0) throw ConfigError("gradCheck eps must be > 0");
    std::vector<DenseMatrix> analytic;
    lossFn(&analytic);
    if (analytic.size() != params.all().size())
        throw NumericError("gradCheck: callback returned " + std::to_string(analytic.size()) +
                           " gradients for " + std::to_string(params.all().size()) + " parameters");

    std::mt19937_64 eng(seed);
    GradCheckReport report;
    for (size_t p = 0; p < params.all().size(); ++p) {
        Param& par = params.all()[p];
        const size_t total = par.value.size();
        std::vector<size_t> picks;
        if (total <= static_cast<size_t>(samplesPerTensor)) {
            picks.resize(total);
            for (size_t i = 0; i < total; ++i) picks[i] = i;
        } else {
            for (int i = 0; i < samplesPerTensor; ++i) picks.push_back(rng::below(eng, total));
            std::sort(picks.begin(), picks.end());
            picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
        }
        for (size_t flat : picks) {
            GradCheckEntry e;
            e.param = par.name;
            e.row = static_cast<int>(flat) / par.value.cols();
            e.col = static_cast<int>(flat) % par.value.cols();
            e.analytic = analytic[p].data()[flat];
            const double orig = par.value.data()[flat];
            par.value.data()[flat] = orig + eps;
            const double fPlus = lossFn(nullptr);
            par.value.data()[flat] = orig - eps;
            const double fMinus = lossFn(nullptr);
            par.value.data()[flat] = orig;
            if (!std::isfinite(fPlus) || !std::isfinite(fMinus)) {
                e.finite = false;
                e.relError = INFINITY;
            } else {
                e.numeric = (fPlus - fMinus) / (2.0 * eps);
                const double denom = std::max({std::abs(e.analytic), std::abs(e.numeric), 1e-3});
                e.relError = std::abs(e.analytic - e.numeric) / denom;
            }
            report.maxRelError = std::max(report.maxRelError, e.relError);
            report.entries.push_back(std::move(e));
        }
    }
    report.pass = report.maxRelError < tolerance;
    // keep the worst entries first for readable diagnostics
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const GradCheckEntry& a, const GradCheckEntry& b) {
                         return a.relError > b.relError;
                     });
    return report;
}

}  // namespace dcfa
