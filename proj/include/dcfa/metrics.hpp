#pragma once

#include <string>
#include <vector>

#include "dcfa/matrix.hpp"

namespace dcfa {

/// Rank-based (Mann-Whitney) AUROC; ties count as one half.
double auroc(const std::vector<double>& scores, const std::vector<double>& labels);

/// Area under the precision-recall curve, step-wise over descending unique
/// score thresholds (no interpolation).
double aupr(const std::vector<double>& scores, const std::vector<double>& labels);

struct ThresholdMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;  // zero-division encountered
};

ThresholdMetrics thresholdMetrics(const std::vector<double>& scores,
                                  const std::vector<double>& labels, double threshold = 0.5);

struct MetricValues {
    double auroc = 0.0;
    double aupr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

MetricValues computeMetrics(const std::vector<double>& scores, const std::vector<double>& labels,
                            double threshold = 0.5);

/// Mean and unbiased (n-1) sample std per metric over independent runs.
struct MetricsReport {
    MetricValues mean;
    MetricValues std;
    int runCount = 0;

    std::string table() const;                       // human-readable
    std::vector<std::pair<std::string, std::string>> entries() const;  // key=value export
};

MetricsReport aggregateMetrics(const std::vector<MetricValues>& runs);

struct RankedCandidate {
    int candidate = 0;
    int frequency = 0;
    double meanScore = 0.0;
};

/// Per-target top-k selection followed by frequency aggregation; the top
/// topFraction of ranked candidates is kept. scores is targets x candidates.
/// Ties break by mean score, then smaller index.
std::vector<RankedCandidate> rankCandidates(const DenseMatrix& scores, int topK,
                                            double topFraction);

}  // namespace dcfa
