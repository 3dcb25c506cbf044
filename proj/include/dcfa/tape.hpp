#pragma once

#include <functional>
#include <vector>

#include "dcfa/matrix.hpp"

namespace dcfa {

/// Handle to a node on a GradientTape.
struct Var {
    int id = -1;
};

/// Reverse-mode tape over DenseMatrix values. Nodes are appended in forward
/// order, so a single reverse sweep is a valid topological traversal.
/// Confined to one training thread; individual kernels parallelize inside.
class GradientTape {
public:
    struct Node {
        DenseMatrix value;
        DenseMatrix grad;  // lazily sized on first accumulation
        std::function<void(GradientTape&)> backward;  // empty for leaves
    };

    Var push(DenseMatrix value, std::function<void(GradientTape&)> backward = {});

    const DenseMatrix& value(Var v) const { return nodes_[v.id].value; }
    DenseMatrix& grad(Var v);
    bool hasGrad(Var v) const { return nodes_[v.id].grad.size() > 0; }

    void accumulate(Var v, const DenseMatrix& g);
    void accumulate(Var v, int i, int j, double g);

    /// Backpropagate from a 1x1 loss node through every recorded op.
    void backward(Var loss);

    void clear() { nodes_.clear(); }
    size_t size() const { return nodes_.size(); }

private:
    std::vector<Node> nodes_;
};

namespace ops {

using IndexTable = std::vector<std::vector<int>>;

Var constant(GradientTape& t, DenseMatrix m);

Var matmul(GradientTape& t, Var a, Var b);
Var add(GradientTape& t, Var a, Var b);
Var sub(GradientTape& t, Var a, Var b);
Var scale(GradientTape& t, Var a, double c);
Var elemMul(GradientTape& t, Var a, Var b);
/// Elementwise product with a fixed mask (dropout); mask is not a tape node.
Var maskMul(GradientTape& t, Var a, DenseMatrix mask);
Var activation(GradientTape& t, Var a, kern::Activation fn);
Var rowSoftmax(GradientTape& t, Var a);
/// Broadcast-add a 1xC bias row to every row of a.
Var addRowVector(GradientTape& t, Var a, Var bias);
/// Scale row i of m by col(i,0).
Var colBroadcastMul(GradientTape& t, Var col, Var m);
Var concatCols(GradientTape& t, Var a, Var b);
Var concatRows(GradientTape& t, Var a, Var b);
Var sliceRows(GradientTape& t, Var a, int rowBegin, int rowEnd);
Var sliceCols(GradientTape& t, Var a, int colBegin, int colEnd);
/// Nx1 column of per-row sums.
Var rowSum(GradientTape& t, Var a);
Var gatherRows(GradientTape& t, Var m, std::vector<int> idx);
/// out(i,j) = dot(a.row(i), b.row(idx[i][j])). All idx rows equally sized.
Var gatherDot(GradientTape& t, Var a, Var b, const IndexTable& idx);
/// out.row(i) = sum_j w(i,j) * v.row(idx[i][j]).
Var gatherWeightedSum(GradientTape& t, Var w, Var v, const IndexTable& idx);
/// Per-row standardization (x - mean) / sqrt(var + eps), no affine terms.
Var layerNorm(GradientTape& t, Var a, double eps = 1e-6);

/// Mean over rows of max(0, gamma - ||z1_i - z2_i||) — or, with
/// attract = true, max(0, ||z1_i - z2_i|| - gamma). Returns a 1x1 scalar.
Var marginDistanceLoss(GradientTape& t, Var z1, Var z2, double gamma, bool attract = false);

/// Class-weighted binary cross-entropy on raw logits (Nx1), computed in the
/// stable softplus form. labels in {0,1}; positives weighted by wPos.
Var weightedBceFromLogits(GradientTape& t, Var logits, const std::vector<double>& labels,
                          double wPos, bool meanReduce = true);

}  // namespace ops
}  // namespace dcfa
