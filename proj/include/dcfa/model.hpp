#pragma once

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dcfa/config.hpp"
#include "dcfa/graphs.hpp"
#include "dcfa/tape.hpp"

namespace dcfa {

/// One trainable tensor plus its Adam moments.
struct Param {
    std::string name;
    DenseMatrix value;
    DenseMatrix adamM;
    DenseMatrix adamV;
    Var var;  // tape handle, valid for the current forward pass only
};

/// Named registry of trainable tensors; creation order is the init-draw and
/// serialization order.
class ModelParams {
public:
    Param& create(const std::string& name, int rows, int cols, std::mt19937_64& eng,
                  bool glorot = true);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool has(const std::string& name) const { return index_.count(name) > 0; }

    std::vector<Param>& all() { return params_; }
    const std::vector<Param>& all() const { return params_; }

    /// Push every tensor onto the tape as a leaf and remember the handles.
    void pushAll(GradientTape& t);
    Var var(const std::string& name) const { return at(name).var; }

private:
    std::vector<Param> params_;
    std::map<std::string, size_t> index_;
};

/// Replace each node's attention sample set with the top-s candidates from
/// its current set plus its neighbors' sets, scored by (h_v U) . h_c.
/// Detached from gradient flow: selection is discrete.
void updateSamples(HeteroGraph& g, const DenseMatrix& features, const DenseMatrix& U);

/// The full DCFA model: similarity-view GCN encoders, the transformer/GNN
/// hetero encoder, divergence losses, view fusion and the MLP pair scorer.
class DcfaModel {
public:
    DcfaModel(int nDrugs, int nMicrobes, const TrainConfig& cfg, std::mt19937_64& eng);

    struct ViewVars {
        Var z1Drug, z1Microbe;  // association view
        Var z2Drug, z2Microbe;  // similarity view
        Var fusedDrug, fusedMicrobe;
    };
    struct LossVars {
        Var total, rel, advDrug, advMicrobe;
        Var logits;
    };

    /// Build the full forward graph up to the fused embeddings. When
    /// updateSampleSets is set, the hetero graph's sample sets are rewritten
    /// after each block from detached feature values.
    ViewVars buildViews(GradientTape& t, const Dataset& ds, const KnnGraph& knnDrug,
                        const KnnGraph& knnMicrobe, HeteroGraph& hg, bool training,
                        bool updateSampleSets, std::mt19937_64& dropoutEng);

    /// MLP logits for the given pairs over fused embeddings.
    Var scorePairs(GradientTape& t, const ViewVars& views, const std::vector<Pair>& pairs);

    LossVars buildLoss(GradientTape& t, const Dataset& ds, const KnnGraph& knnDrug,
                       const KnnGraph& knnMicrobe, HeteroGraph& hg, const std::vector<Pair>& pairs,
                       const std::vector<double>& labels, double positiveWeight, bool training,
                       bool updateSampleSets, std::mt19937_64& dropoutEng);

    ModelParams& params() { return params_; }
    const ModelParams& params() const { return params_; }
    const TrainConfig& config() const { return cfg_; }
    int nDrugs() const { return nDrugs_; }
    int nMicrobes() const { return nMicrobes_; }

private:
    Var gcnForward(GradientTape& t, const KnnGraph& graph, const DenseMatrix& features,
                   const std::string& side, bool training, std::mt19937_64& dropoutEng);
    Var heteroBlocks(GradientTape& t, Var h0, HeteroGraph& hg, bool updateSampleSets);
    Var fuse(GradientTape& t, Var z1, Var z2, const std::string& side);

    int nDrugs_ = 0;
    int nMicrobes_ = 0;
    TrainConfig cfg_;
    ModelParams params_;
};

/// Serial per-node reference implementations of the encoder layers and the
/// fusion/scoring rows. These are the independent second route the batched
/// tape kernels are tested against, and the substrate of the benchmark
/// target.
namespace ref {

/// L-layer GCN forward with plain loops; weights[l] applied as
/// relu(normalized * H * W).
DenseMatrix gcnForward(const DenseMatrix& normalized, const DenseMatrix& features,
                       const std::vector<DenseMatrix>& weights);

struct TransformerNodeParams {
    std::vector<DenseMatrix> Wq, Wk, Wv;  // per head, d x d/m
    DenseMatrix Wout;                     // d x d
    const DenseMatrix* U = nullptr;       // optional soft-bias matrix
    bool residualLayerNorm = true;
};

/// Updated feature row of one node after the multi-head attention layer.
std::vector<double> transformerNode(const DenseMatrix& features, const std::vector<int>& samples,
                                    int nodeId, const TransformerNodeParams& p);

/// Updated feature row of one node after the message-passing layer.
std::vector<double> gnnNode(const DenseMatrix& features, const std::vector<int>& neighbors,
                            int nodeId, const DenseMatrix& messageWeight,
                            const DenseMatrix& combineWeight);

struct BsamRowParams {
    DenseMatrix Wphi, bphi, Wpsi, bpsi;  // d x d, 1 x d
    DenseMatrix Wom1, Wom2;              // 2d x d
    DenseMatrix v;                       // d x 1
};

std::vector<double> bsamFuseRow(const std::vector<double>& z1, const std::vector<double>& z2,
                                const BsamRowParams& p);

struct MlpRowParams {
    DenseMatrix W1, b1, W2, b2, W3, b3;
};

/// Raw logit for one (fusedDrug, fusedMicrobe) row pair.
double scorePairRow(const std::vector<double>& fDrug, const std::vector<double>& fMicrobe,
                    const MlpRowParams& p);

}  // namespace ref
}  // namespace dcfa
