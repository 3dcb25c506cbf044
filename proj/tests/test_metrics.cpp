#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dcfa/data.hpp"
#include "dcfa/metrics.hpp"

using namespace dcfa;

namespace {

// O(P*N) pair-counting AUROC, ties worth one half.
double aurocBruteForce(const std::vector<double>& scores, const std::vector<double>& labels) {
    double wins = 0.0;
    long pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] < 0.5) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] > 0.5) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

// Step-wise AUPR over descending unique thresholds, no interpolation.
double auprBruteForce(const std::vector<double>& scores, const std::vector<double>& labels) {
    std::vector<double> uniq = scores;
    std::sort(uniq.begin(), uniq.end(), std::greater<>());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    double totalPos = 0.0;
    for (double l : labels) totalPos += l > 0.5;
    double area = 0.0, prevRecall = 0.0;
    for (double th : uniq) {
        double tp = 0.0, fp = 0.0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= th) (labels[i] > 0.5 ? tp : fp) += 1.0;
        }
        const double precision = tp / (tp + fp);
        const double recall = tp / totalPos;
        area += (recall - prevRecall) * precision;
        prevRecall = recall;
    }
    return area;
}

}  // namespace

TEST_CASE("auroc: hand-counted 0.75 example") {
    // positives score {0.8, 0.4}, negatives {0.6, 0.2}:
    // (0.8 beats both) + (0.4 beats 0.2) = 3 of 4 pairs
    const std::vector<double> s = {0.8, 0.4, 0.6, 0.2};
    const std::vector<double> l = {1, 1, 0, 0};
    CHECK(auroc(s, l) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auroc: all scores tied gives exactly one half") {
    const std::vector<double> s = {0.5, 0.5, 0.5, 0.5, 0.5};
    const std::vector<double> l = {1, 0, 1, 0, 0};
    CHECK(auroc(s, l) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("auroc is invariant under strictly monotone score transforms") {
    std::mt19937_64 eng(1);
    std::vector<double> s(40), l(40);
    for (size_t i = 0; i < s.size(); ++i) {
        s[i] = rng::uniform(eng, -2.0, 2.0);
        l[i] = rng::below(eng, 2);
    }
    std::vector<double> warped = s;
    for (double& v : warped) v = std::exp(0.7 * v) + 3.0;
    CHECK(auroc(s, l) == doctest::Approx(auroc(warped, l)).epsilon(1e-12));
}

TEST_CASE("auroc of negated scores is one minus the original") {
    std::mt19937_64 eng(2);
    std::vector<double> s(30), l(30);
    for (size_t i = 0; i < s.size(); ++i) {
        s[i] = rng::uniform(eng, 0.0, 1.0);
        l[i] = rng::below(eng, 2);
    }
    std::vector<double> neg = s;
    for (double& v : neg) v = -v;
    CHECK(auroc(s, l) + auroc(neg, l) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("auroc and aupr match brute force on random sets up to 100 items") {
    std::mt19937_64 eng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 10 + static_cast<int>(rng::below(eng, 91));
        std::vector<double> s(n), l(n);
        bool hasPos = false, hasNeg = false;
        for (int i = 0; i < n; ++i) {
            // coarse scores so ties actually occur
            s[i] = static_cast<double>(rng::below(eng, 12)) / 11.0;
            l[i] = rng::below(eng, 2);
            (l[i] > 0.5 ? hasPos : hasNeg) = true;
        }
        if (!hasPos || !hasNeg) continue;
        CHECK(auroc(s, l) == doctest::Approx(aurocBruteForce(s, l)).epsilon(1e-12));
        CHECK(aupr(s, l) == doctest::Approx(auprBruteForce(s, l)).epsilon(1e-12));
    }
}

TEST_CASE("aupr: a single top-ranked positive out of n") {
    // unique descending thresholds; the lone positive is found first, so
    // precision is 1 at recall 1 and the area is 1
    const std::vector<double> s = {0.9, 0.5, 0.3, 0.1};
    const std::vector<double> l = {1, 0, 0, 0};
    CHECK(aupr(s, l) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aupr: all scores tied equals prevalence") {
    const std::vector<double> s = {0.4, 0.4, 0.4, 0.4, 0.4};
    const std::vector<double> l = {1, 0, 1, 0, 0};
    CHECK(aupr(s, l) == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
}

TEST_CASE("threshold metrics at 0.5: hand-computed confusion") {
    // preds: {0.9, 0.6, 0.2}, labels {1, 0, 1}: tp=1 fp=1 fn=1
    const std::vector<double> s = {0.9, 0.6, 0.2};
    const std::vector<double> l = {1, 0, 1};
    ThresholdMetrics m = thresholdMetrics(s, l, 0.5);
    CHECK(m.precision == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_FALSE(m.degenerate);

    // 2/3 precision case: preds {0.9, 0.8, 0.7}, labels {1, 1, 0}
    ThresholdMetrics m2 = thresholdMetrics({0.9, 0.8, 0.7}, {1, 1, 0}, 0.5);
    CHECK(m2.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m2.recall == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m2.f1 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("threshold metrics flag degenerate zero-division cases") {
    ThresholdMetrics m = thresholdMetrics({0.1, 0.2}, {0, 0}, 0.5);
    CHECK(m.degenerate);
}

TEST_CASE("aggregation uses the unbiased n-1 standard deviation") {
    MetricValues a, b, c;
    a.auroc = 0.9;
    b.auroc = 0.8;
    c.auroc = 1.0;
    MetricsReport r = aggregateMetrics({a, b, c});
    CHECK(r.runCount == 3);
    CHECK(r.mean.auroc == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(r.std.auroc == doctest::Approx(0.1).epsilon(1e-12));  // sqrt(0.02/2)
    // single run: zero std, no division by zero
    MetricsReport one = aggregateMetrics({a});
    CHECK(one.std.auroc == 0.0);
}

TEST_CASE("metrics report exports stable key=value entries") {
    MetricValues a;
    a.auroc = 0.875;
    a.aupr = 0.75;
    MetricsReport r = aggregateMetrics({a});
    bool sawAuroc = false;
    for (const auto& [k, v] : r.entries()) {
        if (k == "auroc_mean") {
            sawAuroc = true;
            CHECK(std::stod(v) == doctest::Approx(0.875));
        }
    }
    CHECK(sawAuroc);
    CHECK(r.table().find("AUROC") != std::string::npos);
}

TEST_CASE("candidate ranking: frequency first, then mean score") {
    // 3 targets x 5 candidates, top-2 per target
    DenseMatrix scores(3, 5, {0.9, 0.8, 0.1, 0.2, 0.3,
                              0.7, 0.6, 0.1, 0.9, 0.2,
                              0.8, 0.1, 0.2, 0.9, 0.3});
    // top-2 sets: {0,1}, {3,0}, {3,0} -> freq: c0=3, c3=2, c1=1
    std::vector<RankedCandidate> r = rankCandidates(scores, 2, 1.0);
    REQUIRE(r.size() == 3);
    CHECK(r[0].candidate == 0);
    CHECK(r[0].frequency == 3);
    CHECK(r[0].meanScore == doctest::Approx((0.9 + 0.7 + 0.8) / 3.0).epsilon(1e-12));
    CHECK(r[1].candidate == 3);
    CHECK(r[1].frequency == 2);
    CHECK(r[2].candidate == 1);

    // top fraction keeps ceil(f * ranked): 0.34 of 3 keeps the top two
    std::vector<RankedCandidate> top = rankCandidates(scores, 2, 0.34);
    REQUIRE(top.size() == 2);
    CHECK(top[0].candidate == 0);
    CHECK(top[1].candidate == 3);
    REQUIRE(rankCandidates(scores, 2, 0.2).size() == 1);
}

TEST_CASE("candidate ranking tie-breaks by mean score then smaller index") {
    DenseMatrix scores(2, 4, {0.9, 0.8, 0.1, 0.1,
                              0.8, 0.9, 0.1, 0.1});
    // both candidates 0 and 1 appear twice with equal mean score 0.85
    std::vector<RankedCandidate> r = rankCandidates(scores, 2, 1.0);
    REQUIRE(r.size() == 2);
    CHECK(r[0].candidate == 0);
    CHECK(r[1].candidate == 1);
}

TEST_CASE("computeMetrics bundles everything consistently") {
    const std::vector<double> s = {0.9, 0.8, 0.3, 0.1};
    const std::vector<double> l = {1, 1, 0, 0};
    MetricValues m = computeMetrics(s, l);
    CHECK(m.auroc == doctest::Approx(1.0));
    CHECK(m.aupr == doctest::Approx(1.0));
    CHECK(m.precision == doctest::Approx(1.0));
    CHECK(m.recall == doctest::Approx(1.0));
    CHECK(m.f1 == doctest::Approx(1.0));
}
