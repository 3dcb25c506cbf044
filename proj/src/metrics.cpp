#include "dcfa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace dcfa {

namespace {

void checkSizes(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size())
        throw DimensionError("scores and labels differ in length");
    if (scores.empty()) throw DataError("empty score list");
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<double>& labels) {
    checkSizes(scores, labels);
    const size_t n = scores.size();
    size_t nPos = 0;
    for (double y : labels) nPos += y > 0.5;
    const size_t nNeg = n - nPos;
    if (nPos == 0 || nNeg == 0) throw DataError("auroc requires both classes");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // average ranks within tie groups, then the Mann-Whitney statistic
    double posRankSum = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avgRank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k)
            if (labels[order[k]] > 0.5) posRankSum += avgRank;
        i = j;
    }
    const double u = posRankSum - static_cast<double>(nPos) * (nPos + 1) / 2.0;
    return u / (static_cast<double>(nPos) * static_cast<double>(nNeg));
}

double aupr(const std::vector<double>& scores, const std::vector<double>& labels) {
    checkSizes(scores, labels);
    size_t nPos = 0;
    for (double y : labels) nPos += y > 0.5;
    if (nPos == 0) throw DataError("aupr requires at least one positive");
    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    double area = 0.0;
    double prevRecall = 0.0;
    size_t tp = 0, predicted = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        for (size_t k = i; k < j; ++k) {
            ++predicted;
            if (labels[order[k]] > 0.5) ++tp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(nPos);
        const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
        area += (recall - prevRecall) * precision;
        prevRecall = recall;
        i = j;
    }
    return area;
}

ThresholdMetrics thresholdMetrics(const std::vector<double>& scores,
                                  const std::vector<double>& labels, double threshold) {
    checkSizes(scores, labels);
    size_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool pos = labels[i] > 0.5;
        tp += pred && pos;
        fp += pred && !pos;
        fn += !pred && pos;
    }
    ThresholdMetrics m;
    if (tp + fp == 0) {
        m.degenerate = true;
    } else {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    if (tp + fn == 0) {
        m.degenerate = true;
    } else {
        m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (m.precision + m.recall > 0.0)
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

MetricValues computeMetrics(const std::vector<double>& scores, const std::vector<double>& labels,
                            double threshold) {
    MetricValues v;
    v.auroc = auroc(scores, labels);
    v.aupr = aupr(scores, labels);
    const ThresholdMetrics t = thresholdMetrics(scores, labels, threshold);
    v.precision = t.precision;
    v.recall = t.recall;
    v.f1 = t.f1;
    return v;
}

MetricsReport aggregateMetrics(const std::vector<MetricValues>& runs) {
    if (runs.empty()) throw DataError("aggregateMetrics: no runs");
    MetricsReport r;
    r.runCount = static_cast<int>(runs.size());
    auto each = [&](auto field) {
        double mean = 0.0;
        for (const MetricValues& v : runs) mean += v.*field;
        mean /= runs.size();
        double var = 0.0;
        for (const MetricValues& v : runs) var += (v.*field - mean) * (v.*field - mean);
        const double std = runs.size() > 1 ? std::sqrt(var / (runs.size() - 1)) : 0.0;
        r.mean.*field = mean;
        r.std.*field = std;
    };
    each(&MetricValues::auroc);
    each(&MetricValues::aupr);
    each(&MetricValues::precision);
    each(&MetricValues::recall);
    each(&MetricValues::f1);
    return r;
}

std::string MetricsReport::table() const {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "metric     mean     std    (over " << runCount << " run" << (runCount == 1 ? "" : "s")
       << ")\n";
    os << "AUROC      " << mean.auroc << "  " << std.auroc << '\n';
    os << "AUPR       " << mean.aupr << "  " << std.aupr << '\n';
    os << "Precision  " << mean.precision << "  " << std.precision << '\n';
    os << "Recall     " << mean.recall << "  " << std.recall << '\n';
    os << "F1         " << mean.f1 << "  " << std.f1 << '\n';
    return os.str();
}

std::vector<std::pair<std::string, std::string>> MetricsReport::entries() const {
    auto num = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    return {
        {"runs", std::to_string(runCount)},
        {"auroc_mean", num(mean.auroc)},         {"auroc_std", num(std.auroc)},
        {"aupr_mean", num(mean.aupr)},           {"aupr_std", num(std.aupr)},
        {"precision_mean", num(mean.precision)}, {"precision_std", num(std.precision)},
        {"recall_mean", num(mean.recall)},       {"recall_std", num(std.recall)},
        {"f1_mean", num(mean.f1)},               {"f1_std", num(std.f1)},
    };
}

std::vector<RankedCandidate> rankCandidates(const DenseMatrix& scores, int topK,
                                            double topFraction) {
    if (scores.rows() == 0) throw DataError("rankCandidates: no targets");
    if (topK < 1 || topFraction <= 0.0 || topFraction > 1.0)
        throw ConfigError("rankCandidates: bad topK/topFraction");
    const int nCand = scores.cols();
    std::vector<int> freq(nCand, 0);
    std::vector<double> scoreSum(nCand, 0.0);
    std::vector<int> order(nCand);
    for (int t = 0; t < scores.rows(); ++t) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return scores(t, a) > scores(t, b); });
        const int keep = std::min(topK, nCand);
        for (int k = 0; k < keep; ++k) {
            ++freq[order[k]];
            scoreSum[order[k]] += scores(t, order[k]);
        }
    }
    std::vector<RankedCandidate> ranked;
    for (int c = 0; c < nCand; ++c)
        if (freq[c] > 0) ranked.push_back({c, freq[c], scoreSum[c] / freq[c]});
    std::stable_sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a,
                                                      const RankedCandidate& b) {
        if (a.frequency != b.frequency) return a.frequency > b.frequency;
        if (a.meanScore != b.meanScore) return a.meanScore > b.meanScore;
        return a.candidate < b.candidate;
    });
    const size_t keep =
        static_cast<size_t>(std::ceil(topFraction * static_cast<double>(ranked.size())));
    if (ranked.size() > keep) ranked.resize(keep);
    return ranked;
}

}  // namespace dcfa
