#include "dcfa/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace dcfa {

KnnGraph buildKnnGraph(const DenseMatrix& sim, int k) {
    const int n = sim.rows();
    if (sim.cols() != n) throw DimensionError("similarity matrix not square: " + sim.shapeStr());
    if (k < 0 || k >= n) throw ConfigError("knn k=" + std::to_string(k) + " must be in [0, n-1]");
    KnnGraph g;
    g.k = k;
    g.adjacency = DenseMatrix(n, n);
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) {
        std::iota(order.begin(), order.end(), 0);
        // k most similar peers of i; ties broken by smaller index
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return sim(i, a) > sim(i, b); });
        g.adjacency(i, i) = 1.0;
        int taken = 0;
        for (int j : order) {
            if (taken == k) break;
            if (j == i) continue;
            g.adjacency(i, j) = 1.0;
            ++taken;
        }
    }
    g.normalized = normalizeAdjacency(g.adjacency);
    return g;
}

DenseMatrix normalizeAdjacency(const DenseMatrix& adjacency) {
    const int n = adjacency.rows();
    if (adjacency.cols() != n)
        throw DimensionError("adjacency not square: " + adjacency.shapeStr());
    std::vector<double> invSqrtDeg(n);
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += adjacency(i, j);
        if (deg <= 0.0) throw NumericError("zero-degree row " + std::to_string(i) + " in adjacency");
        invSqrtDeg[i] = 1.0 / std::sqrt(deg);
    }
    DenseMatrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (adjacency(i, j) != 0.0) out(i, j) = adjacency(i, j) * invSqrtDeg[i] * invSqrtDeg[j];
    return out;
}

HeteroGraph buildHeteroGraph(const Dataset& ds, const SplitPlan& plan, int sampleSize,
                             uint64_t seed) {
    if (sampleSize < 1) throw ConfigError("sampleSize must be >= 1");
    HeteroGraph g;
    g.nDrugs = ds.drugCount;
    g.nMicrobes = ds.microbeCount;
    g.sampleSize = sampleSize;
    const int n = g.nodeCount();
    g.neighbors.resize(n);
    g.edges = plan.trainPositives;
    for (const Pair& p : g.edges) {
        g.neighbors[p.drug].push_back(g.nDrugs + p.microbe);
        g.neighbors[g.nDrugs + p.microbe].push_back(p.drug);
    }
    for (auto& nb : g.neighbors) {
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }

    std::mt19937_64 eng(seed);
    g.sampleSets.resize(n);
    for (int v = 0; v < n; ++v) {
        const bool drug = g.isDrugNode(v);
        const DenseMatrix& sim = drug ? ds.drugSim : ds.microbeSim;
        const int local = drug ? v : v - g.nDrugs;
        const int sameCount = sim.rows();
        std::vector<int> order(sameCount);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return sim(local, a) > sim(local, b); });
        const int want = std::min(sampleSize, n - 1);
        std::vector<int>& smp = g.sampleSets[v];
        for (int j : order) {
            if (static_cast<int>(smp.size()) == want) break;
            if (j == local) continue;
            smp.push_back(drug ? j : g.nDrugs + j);
        }
        // pad with seeded random opposite-type nodes when the same-type pool
        // is smaller than the requested sample size
        if (static_cast<int>(smp.size()) < want) {
            const int oppBase = drug ? g.nDrugs : 0;
            const int oppCount = drug ? g.nMicrobes : g.nDrugs;
            std::vector<int> opp(oppCount);
            std::iota(opp.begin(), opp.end(), oppBase);
            rng::shuffle(opp, eng);
            for (int u : opp) {
                if (static_cast<int>(smp.size()) == want) break;
                smp.push_back(u);
            }
        }
    }
    return g;
}

DenseMatrix neighborMeanMatrix(const HeteroGraph& g) {
    const int n = g.nodeCount();
    DenseMatrix m(n, n);
    for (int v = 0; v < n; ++v) {
        const auto& nb = g.neighbors[v];
        if (nb.empty()) continue;
        const double w = 1.0 / static_cast<double>(nb.size());
        for (int u : nb) m(v, u) = w;
    }
    return m;
}

DenseMatrix heteroNormalizedAdjacency(const HeteroGraph& g) {
    const int n = g.nodeCount();
    DenseMatrix a(n, n);
    for (int v = 0; v < n; ++v) a(v, v) = 1.0;
    for (const Pair& p : g.edges) {
        a(p.drug, g.nDrugs + p.microbe) = 1.0;
        a(g.nDrugs + p.microbe, p.drug) = 1.0;
    }
    return normalizeAdjacency(a);
}

void writeEdgeList(const std::string& path, const HeteroGraph& g) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (const Pair& p : g.edges) out << p.drug << '\t' << g.nDrugs + p.microbe << '\n';
}

}  // namespace dcfa
