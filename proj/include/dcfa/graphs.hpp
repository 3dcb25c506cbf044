#pragma once

#include "dcfa/data.hpp"
#include "dcfa/matrix.hpp"

namespace dcfa {

/// Directed KNN graph over a similarity matrix: each row keeps itself plus
/// its k most similar peers. Not symmetrized; the row degree feeds the
/// normalization directly.
struct KnnGraph {
    DenseMatrix adjacency;  // binary, n x n
    DenseMatrix normalized; // D^{-1/2} A D^{-1/2}
    int k = 0;
};

KnnGraph buildKnnGraph(const DenseMatrix& sim, int k);

/// D^{-1/2} A D^{-1/2} with D the row-degree diagonal. Zero-degree rows are
/// an error.
DenseMatrix normalizeAdjacency(const DenseMatrix& adjacency);

/// Drug-microbe heterogeneous graph. Node ids: drugs [0, nDrugs), microbes
/// [nDrugs, nDrugs + nMicrobes). Edges come from train positives only.
struct HeteroGraph {
    int nDrugs = 0;
    int nMicrobes = 0;
    int sampleSize = 0;
    std::vector<std::vector<int>> neighbors;   // per node
    std::vector<std::vector<int>> sampleSets;  // per node, attention samples Smp(v)
    std::vector<Pair> edges;

    int nodeCount() const { return nDrugs + nMicrobes; }
    bool isDrugNode(int v) const { return v < nDrugs; }
};

HeteroGraph buildHeteroGraph(const Dataset& ds, const SplitPlan& plan, int sampleSize,
                             uint64_t seed);

/// Row-normalized neighbor-mean operator of the hetero graph (rows of
/// isolated nodes are zero). Used by the GNN layer's message aggregation.
DenseMatrix neighborMeanMatrix(const HeteroGraph& g);

/// Symmetric degree normalization of the hetero adjacency with self-loops,
/// for the GCN-swap ablation.
DenseMatrix heteroNormalizedAdjacency(const HeteroGraph& g);

void writeEdgeList(const std::string& path, const HeteroGraph& g);

}  // namespace dcfa
