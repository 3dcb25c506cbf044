#include "dcfa/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dcfa {

Param& ModelParams::create(const std::string& name, int rows, int cols, std::mt19937_64& eng,
                           bool glorot) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
    DenseMatrix value(rows, cols);
    if (glorot) {
        const double limit = std::sqrt(6.0 / (rows + cols));
        for (size_t i = 0; i < value.size(); ++i)
            value.data()[i] = rng::uniform(eng, -limit, limit);
    }
    index_[name] = params_.size();
    params_.push_back(Param{name, std::move(value), DenseMatrix(rows, cols),
                            DenseMatrix(rows, cols), Var{}});
    return params_.back();
}

Param& ModelParams::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return params_[it->second];
}

const Param& ModelParams::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter: " + name);
    return params_[it->second];
}

void ModelParams::pushAll(GradientTape& t) {
    for (Param& p : params_) p.var = t.push(p.value);
}

void updateSamples(HeteroGraph& g, const DenseMatrix& features, const DenseMatrix& U) {
    const DenseMatrix hU = kern::matmul(features, U);
    const int n = g.nodeCount();
    std::vector<std::vector<int>> next(n);
    std::vector<int> cand;
    for (int v = 0; v < n; ++v) {
        cand = g.sampleSets[v];
        for (int u : g.neighbors[v])
            cand.insert(cand.end(), g.sampleSets[u].begin(), g.sampleSets[u].end());
        std::sort(cand.begin(), cand.end());
        cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
        cand.erase(std::remove(cand.begin(), cand.end(), v), cand.end());
        std::vector<double> score(cand.size());
        for (size_t c = 0; c < cand.size(); ++c) {
            double s = 0.0;
            for (int k = 0; k < features.cols(); ++k) s += hU(v, k) * features(cand[c], k);
            score[c] = s;
        }
        std::vector<size_t> order(cand.size());
        std::iota(order.begin(), order.end(), 0);
        // ties keep the smaller node index (cand is sorted ascending)
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return score[a] > score[b]; });
        const size_t keep = std::min(g.sampleSets[v].size(), cand.size());
        next[v].reserve(keep);
        for (size_t c = 0; c < keep; ++c) next[v].push_back(cand[order[c]]);
    }
    g.sampleSets = std::move(next);
}

DcfaModel::DcfaModel(int nDrugs, int nMicrobes, const TrainConfig& cfg, std::mt19937_64& eng)
    : nDrugs_(nDrugs), nMicrobes_(nMicrobes), cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.dim;
    const int dk = d / cfg_.heads;
    params_.create("sim.drug.W1", nDrugs, d, eng);
    params_.create("sim.drug.W2", d, d, eng);
    params_.create("sim.microbe.W1", nMicrobes, d, eng);
    params_.create("sim.microbe.W2", d, d, eng);
    params_.create("hetero.proj.drug", nDrugs, d, eng);
    params_.create("hetero.proj.microbe", nMicrobes, d, eng);
    for (int b = 0; b < cfg_.blocks; ++b) {
        const std::string pre = "hetero.b" + std::to_string(b) + ".";
        if (!cfg_.noTrans) {
            if (!cfg_.attentionSwap) {
                for (int h = 0; h < cfg_.heads; ++h) {
                    const std::string hp = pre + "head" + std::to_string(h) + ".";
                    params_.create(hp + "Wq", d, dk, eng);
                    params_.create(hp + "Wk", d, dk, eng);
                    params_.create(hp + "Wv", d, dk, eng);
                }
                params_.create(pre + "Wout", d, d, eng);
            }
            params_.create(pre + "U", d, d, eng);
        }
        if (!cfg_.noGnn) {
            if (cfg_.gcnSwap) {
                params_.create(pre + "Wgcn", d, d, eng);
            } else {
                params_.create(pre + "Wmsg", d, d, eng);
                params_.create(pre + "Wcomb", 2 * d, d, eng);
            }
        }
    }
    for (const std::string side : {"drug", "microbe"}) {
        const std::string pre = "fuse." + side + ".";
        switch (cfg_.fusion) {
            case FusionMode::Bsam:
                params_.create(pre + "Wphi", d, d, eng);
                params_.create(pre + "bphi", 1, d, eng, false);
                params_.create(pre + "Wpsi", d, d, eng);
                params_.create(pre + "bpsi", 1, d, eng, false);
                params_.create(pre + "Wom1", 2 * d, d, eng);
                params_.create(pre + "Wom2", 2 * d, d, eng);
                params_.create(pre + "v", d, 1, eng);
                break;
            case FusionMode::ConcatReduce:
                params_.create(pre + "Wr", 2 * d, d, eng);
                break;
            case FusionMode::CrossAttention:
                params_.create(pre + "Wq", d, d, eng);
                params_.create(pre + "Wk", d, d, eng);
                break;
            default: break;  // add / multiply are parameter-free
        }
    }
    const int h2 = (d + 1) / 2;
    params_.create("mlp.W1", 2 * d, d, eng);
    params_.create("mlp.b1", 1, d, eng, false);
    params_.create("mlp.W2", d, h2, eng);
    params_.create("mlp.b2", 1, h2, eng, false);
    params_.create("mlp.W3", h2, 1, eng);
    params_.create("mlp.b3", 1, 1, eng, false);
}

namespace {

DenseMatrix dropoutMask(int rows, int cols, double rate, std::mt19937_64& eng) {
    DenseMatrix mask(rows, cols);
    const double keepInv = 1.0 / (1.0 - rate);
    for (size_t i = 0; i < mask.size(); ++i)
        mask.data()[i] = rng::uniform(eng, 0.0, 1.0) >= rate ? keepInv : 0.0;
    return mask;
}

}  // namespace

Var DcfaModel::gcnForward(GradientTape& t, const KnnGraph& graph, const DenseMatrix& features,
                          const std::string& side, bool training, std::mt19937_64& dropoutEng) {
    if (features.rows() != graph.normalized.rows())
        throw DimensionError("gcn features rows " + features.shapeStr() +
                             " do not match graph of " + graph.normalized.shapeStr());
    Var norm = ops::constant(t, graph.normalized);
    Var h = ops::constant(t, features);
    for (int layer = 1; layer <= 2; ++layer) {
        if (training && cfg_.dropout > 0.0) {
            const DenseMatrix& cur = t.value(h);
            h = ops::maskMul(t, h, dropoutMask(cur.rows(), cur.cols(), cfg_.dropout, dropoutEng));
        }
        Var w = params_.var("sim." + side + ".W" + std::to_string(layer));
        h = ops::activation(t, ops::matmul(t, norm, ops::matmul(t, h, w)), kern::Activation::Relu);
    }
    return h;
}

Var DcfaModel::heteroBlocks(GradientTape& t, Var h0, HeteroGraph& hg, bool updateSampleSets) {
    const int d = cfg_.dim;
    const int dk = d / cfg_.heads;
    Var h = h0;
    Var meanOp, gcnOp;
    if (!cfg_.noGnn) {
        if (cfg_.gcnSwap)
            gcnOp = ops::constant(t, heteroNormalizedAdjacency(hg));
        else
            meanOp = ops::constant(t, neighborMeanMatrix(hg));
    }
    for (int b = 0; b < cfg_.blocks; ++b) {
        const std::string pre = "hetero.b" + std::to_string(b) + ".";
        if (!cfg_.noTrans) {
            const ops::IndexTable& idx = hg.sampleSets;
            Var bias;
            bool haveBias = false;
            if (cfg_.softBias) {
                Var hu = ops::matmul(t, h, params_.var(pre + "U"));
                bias = ops::scale(t, ops::gatherDot(t, hu, h, idx), 1.0 / std::sqrt(double(d)));
                haveBias = true;
            }
            Var attnOut;
            if (cfg_.attentionSwap) {
                // single-head unprojected attention over the sample sets
                Var logits = ops::scale(t, ops::gatherDot(t, h, h, idx), 1.0 / std::sqrt(double(d)));
                if (haveBias) logits = ops::add(t, logits, bias);
                attnOut = ops::gatherWeightedSum(t, ops::rowSoftmax(t, logits), h, idx);
            } else {
                Var concat;
                for (int hd = 0; hd < cfg_.heads; ++hd) {
                    const std::string hp = pre + "head" + std::to_string(hd) + ".";
                    Var q = ops::matmul(t, h, params_.var(hp + "Wq"));
                    Var k = ops::matmul(t, h, params_.var(hp + "Wk"));
                    Var v = ops::matmul(t, h, params_.var(hp + "Wv"));
                    Var logits =
                        ops::scale(t, ops::gatherDot(t, q, k, idx), 1.0 / std::sqrt(double(dk)));
                    if (haveBias) logits = ops::add(t, logits, bias);
                    Var head = ops::gatherWeightedSum(t, ops::rowSoftmax(t, logits), v, idx);
                    concat = hd == 0 ? head : ops::concatCols(t, concat, head);
                }
                attnOut = ops::matmul(t, concat, params_.var(pre + "Wout"));
            }
            h = cfg_.noResidual ? attnOut : ops::layerNorm(t, ops::add(t, h, attnOut));
        }
        if (!cfg_.noGnn) {
            if (cfg_.gcnSwap) {
                h = ops::activation(
                    t, ops::matmul(t, gcnOp, ops::matmul(t, h, params_.var(pre + "Wgcn"))),
                    kern::Activation::Relu);
            } else {
                Var hm = ops::activation(
                    t, ops::matmul(t, meanOp, ops::matmul(t, h, params_.var(pre + "Wmsg"))),
                    kern::Activation::Relu);
                h = ops::activation(
                    t, ops::matmul(t, ops::concatCols(t, h, hm), params_.var(pre + "Wcomb")),
                    kern::Activation::Relu);
            }
        }
        if (updateSampleSets && !cfg_.noTrans)
            updateSamples(hg, t.value(h), params_.at(pre + "U").value);
    }
    return h;
}

Var DcfaModel::fuse(GradientTape& t, Var z1, Var z2, const std::string& side) {
    const std::string pre = "fuse." + side + ".";
    switch (cfg_.fusion) {
        case FusionMode::Add: return ops::add(t, z1, z2);
        case FusionMode::Multiply: return ops::elemMul(t, z1, z2);
        case FusionMode::ConcatReduce:
            return ops::matmul(t, ops::concatCols(t, z1, z2), params_.var(pre + "Wr"));
        case FusionMode::CrossAttention: {
            const double inv = 1.0 / std::sqrt(double(cfg_.dim));
            Var q1 = ops::matmul(t, z1, params_.var(pre + "Wq"));
            Var q2 = ops::matmul(t, z2, params_.var(pre + "Wq"));
            Var k1 = ops::matmul(t, z1, params_.var(pre + "Wk"));
            Var k2 = ops::matmul(t, z2, params_.var(pre + "Wk"));
            auto attend = [&](Var q) {
                Var e1 = ops::scale(t, ops::rowSum(t, ops::elemMul(t, q, k1)), inv);
                Var e2 = ops::scale(t, ops::rowSum(t, ops::elemMul(t, q, k2)), inv);
                Var a = ops::rowSoftmax(t, ops::concatCols(t, e1, e2));
                return ops::add(t, ops::colBroadcastMul(t, ops::sliceCols(t, a, 0, 1), z1),
                                ops::colBroadcastMul(t, ops::sliceCols(t, a, 1, 2), z2));
            };
            return ops::scale(t, ops::add(t, attend(q1), attend(q2)), 0.5);
        }
        default: {
            Var h1 = ops::activation(
                t, ops::addRowVector(t, ops::matmul(t, z1, params_.var(pre + "Wphi")),
                                     params_.var(pre + "bphi")),
                kern::Activation::Tanh);
            Var h2 = ops::activation(
                t, ops::addRowVector(t, ops::matmul(t, z2, params_.var(pre + "Wpsi")),
                                     params_.var(pre + "bpsi")),
                kern::Activation::Tanh);
            Var c = ops::concatCols(t, h1, h2);
            Var e1 = ops::matmul(
                t, ops::activation(t, ops::matmul(t, c, params_.var(pre + "Wom1")),
                                   kern::Activation::Relu),
                params_.var(pre + "v"));
            Var e2 = ops::matmul(
                t, ops::activation(t, ops::matmul(t, c, params_.var(pre + "Wom2")),
                                   kern::Activation::Relu),
                params_.var(pre + "v"));
            Var a = ops::rowSoftmax(t, ops::concatCols(t, e1, e2));
            return ops::add(t, ops::colBroadcastMul(t, ops::sliceCols(t, a, 0, 1), z1),
                            ops::colBroadcastMul(t, ops::sliceCols(t, a, 1, 2), z2));
        }
    }
}

DcfaModel::ViewVars DcfaModel::buildViews(GradientTape& t, const Dataset& ds,
                                          const KnnGraph& knnDrug, const KnnGraph& knnMicrobe,
                                          HeteroGraph& hg, bool training, bool updateSampleSets,
                                          std::mt19937_64& dropoutEng) {
    params_.pushAll(t);
    ViewVars v;
    v.z2Drug = gcnForward(t, knnDrug, ds.drugSim, "drug", training, dropoutEng);
    v.z2Microbe = gcnForward(t, knnMicrobe, ds.microbeSim, "microbe", training, dropoutEng);

    Var xd = ops::constant(t, ds.drugSim);
    Var xm = ops::constant(t, ds.microbeSim);
    Var h0 = ops::concatRows(t, ops::matmul(t, xd, params_.var("hetero.proj.drug")),
                             ops::matmul(t, xm, params_.var("hetero.proj.microbe")));
    Var h = heteroBlocks(t, h0, hg, updateSampleSets);
    v.z1Drug = ops::sliceRows(t, h, 0, nDrugs_);
    v.z1Microbe = ops::sliceRows(t, h, nDrugs_, nDrugs_ + nMicrobes_);

    v.fusedDrug = fuse(t, v.z1Drug, v.z2Drug, "drug");
    v.fusedMicrobe = fuse(t, v.z1Microbe, v.z2Microbe, "microbe");
    return v;
}

Var DcfaModel::scorePairs(GradientTape& t, const ViewVars& views, const std::vector<Pair>& pairs) {
    std::vector<int> di(pairs.size()), mi(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        di[i] = pairs[i].drug;
        mi[i] = pairs[i].microbe;
    }
    Var p = ops::concatCols(t, ops::gatherRows(t, views.fusedDrug, std::move(di)),
                            ops::gatherRows(t, views.fusedMicrobe, std::move(mi)));
    Var l1 = ops::activation(t,
                             ops::addRowVector(t, ops::matmul(t, p, params_.var("mlp.W1")),
                                               params_.var("mlp.b1")),
                             kern::Activation::Relu);
    Var l2 = ops::activation(t,
                             ops::addRowVector(t, ops::matmul(t, l1, params_.var("mlp.W2")),
                                               params_.var("mlp.b2")),
                             kern::Activation::Relu);
    return ops::addRowVector(t, ops::matmul(t, l2, params_.var("mlp.W3")), params_.var("mlp.b3"));
}

DcfaModel::LossVars DcfaModel::buildLoss(GradientTape& t, const Dataset& ds,
                                         const KnnGraph& knnDrug, const KnnGraph& knnMicrobe,
                                         HeteroGraph& hg, const std::vector<Pair>& pairs,
                                         const std::vector<double>& labels, double positiveWeight,
                                         bool training, bool updateSampleSets,
                                         std::mt19937_64& dropoutEng) {
    ViewVars views = buildViews(t, ds, knnDrug, knnMicrobe, hg, training, updateSampleSets,
                                dropoutEng);
    LossVars l;
    l.logits = scorePairs(t, views, pairs);
    l.rel = ops::weightedBceFromLogits(t, l.logits, labels, positiveWeight, !cfg_.sumReduction);
    l.advDrug = ops::marginDistanceLoss(t, views.z1Drug, views.z2Drug, cfg_.gamma, cfg_.advClose);
    l.advMicrobe =
        ops::marginDistanceLoss(t, views.z1Microbe, views.z2Microbe, cfg_.gamma, cfg_.advClose);
    const double b1 = cfg_.noAdvDrug ? 0.0 : cfg_.beta1;
    const double b2 = cfg_.noAdvMicrobe ? 0.0 : cfg_.beta2;
    l.total = ops::add(t, l.rel,
                       ops::add(t, ops::scale(t, l.advDrug, b1), ops::scale(t, l.advMicrobe, b2)));
    return l;
}

namespace ref {

DenseMatrix gcnForward(const DenseMatrix& normalized, const DenseMatrix& features,
                       const std::vector<DenseMatrix>& weights) {
    DenseMatrix h = features;
    for (const DenseMatrix& w : weights) {
        h = kern::serial::matmul(normalized, kern::serial::matmul(h, w));
        for (size_t i = 0; i < h.size(); ++i) h.data()[i] = std::max(0.0, h.data()[i]);
    }
    return h;
}

namespace {

std::vector<double> rowTimes(const std::vector<double>& row, const DenseMatrix& w) {
    std::vector<double> out(w.cols(), 0.0);
    for (int k = 0; k < w.rows(); ++k)
        for (int j = 0; j < w.cols(); ++j) out[j] += row[k] * w(k, j);
    return out;
}

std::vector<double> matRow(const DenseMatrix& m, int i) {
    std::vector<double> r(m.cols());
    for (int j = 0; j < m.cols(); ++j) r[j] = m(i, j);
    return r;
}

}  // namespace

std::vector<double> transformerNode(const DenseMatrix& features, const std::vector<int>& samples,
                                    int nodeId, const TransformerNodeParams& p) {
    if (samples.empty()) throw NumericError("transformerNode: empty sample set");
    const int d = features.cols();
    const int s = static_cast<int>(samples.size());
    const std::vector<double> hi = matRow(features, nodeId);
    std::vector<double> bias(s, 0.0);
    if (p.U) {
        const std::vector<double> hu = rowTimes(hi, *p.U);
        for (int j = 0; j < s; ++j) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) acc += hu[k] * features(samples[j], k);
            bias[j] = acc / std::sqrt(double(d));
        }
    }
    std::vector<double> concat;
    for (size_t hd = 0; hd < p.Wq.size(); ++hd) {
        const int dk = p.Wq[hd].cols();
        const std::vector<double> q = rowTimes(hi, p.Wq[hd]);
        std::vector<double> logits(s);
        for (int j = 0; j < s; ++j) {
            const std::vector<double> k = rowTimes(matRow(features, samples[j]), p.Wk[hd]);
            double acc = 0.0;
            for (int c = 0; c < dk; ++c) acc += q[c] * k[c];
            logits[j] = acc / std::sqrt(double(dk)) + bias[j];
        }
        const double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double& l : logits) {
            l = std::exp(l - mx);
            z += l;
        }
        std::vector<double> head(dk, 0.0);
        for (int j = 0; j < s; ++j) {
            const std::vector<double> v = rowTimes(matRow(features, samples[j]), p.Wv[hd]);
            for (int c = 0; c < dk; ++c) head[c] += logits[j] / z * v[c];
        }
        concat.insert(concat.end(), head.begin(), head.end());
    }
    std::vector<double> out = rowTimes(concat, p.Wout);
    if (!p.residualLayerNorm) return out;
    for (int j = 0; j < d; ++j) out[j] += hi[j];
    double mean = 0.0;
    for (double x : out) mean += x;
    mean /= d;
    double var = 0.0;
    for (double x : out) var += (x - mean) * (x - mean);
    var /= d;
    const double is = 1.0 / std::sqrt(var + 1e-6);
    for (double& x : out) x = (x - mean) * is;
    return out;
}

std::vector<double> gnnNode(const DenseMatrix& features, const std::vector<int>& neighbors,
                            int nodeId, const DenseMatrix& messageWeight,
                            const DenseMatrix& combineWeight) {
    const int d = features.cols();
    std::vector<double> hM(d, 0.0);
    if (!neighbors.empty()) {
        for (int u : neighbors) {
            const std::vector<double> msg = rowTimes(matRow(features, u), messageWeight);
            for (int j = 0; j < d; ++j) hM[j] += msg[j];
        }
        for (double& x : hM) x = std::max(0.0, x / static_cast<double>(neighbors.size()));
    }
    std::vector<double> cat = matRow(features, nodeId);
    cat.insert(cat.end(), hM.begin(), hM.end());
    std::vector<double> out = rowTimes(cat, combineWeight);
    for (double& x : out) x = std::max(0.0, x);
    return out;
}

std::vector<double> bsamFuseRow(const std::vector<double>& z1, const std::vector<double>& z2,
                                const BsamRowParams& p) {
    if (z1.size() != z2.size())
        throw DimensionError("bsamFuseRow: row length mismatch");
    const int d = static_cast<int>(z1.size());
    std::vector<double> h1 = rowTimes(z1, p.Wphi);
    std::vector<double> h2 = rowTimes(z2, p.Wpsi);
    for (int j = 0; j < d; ++j) {
        h1[j] = std::tanh(h1[j] + p.bphi(0, j));
        h2[j] = std::tanh(h2[j] + p.bpsi(0, j));
    }
    std::vector<double> cat = h1;
    cat.insert(cat.end(), h2.begin(), h2.end());
    std::vector<double> r1 = rowTimes(cat, p.Wom1);
    std::vector<double> r2 = rowTimes(cat, p.Wom2);
    double e1 = 0.0, e2 = 0.0;
    for (int j = 0; j < d; ++j) {
        e1 += std::max(0.0, r1[j]) * p.v(j, 0);
        e2 += std::max(0.0, r2[j]) * p.v(j, 0);
    }
    const double mx = std::max(e1, e2);
    const double w1 = std::exp(e1 - mx), w2 = std::exp(e2 - mx);
    const double a1 = w1 / (w1 + w2), a2 = w2 / (w1 + w2);
    std::vector<double> out(d);
    for (int j = 0; j < d; ++j) out[j] = a1 * z1[j] + a2 * z2[j];
    return out;
}

double scorePairRow(const std::vector<double>& fDrug, const std::vector<double>& fMicrobe,
                    const MlpRowParams& p) {
    std::vector<double> x = fDrug;
    x.insert(x.end(), fMicrobe.begin(), fMicrobe.end());
    std::vector<double> l1 = rowTimes(x, p.W1);
    for (int j = 0; j < p.W1.cols(); ++j) l1[j] = std::max(0.0, l1[j] + p.b1(0, j));
    std::vector<double> l2 = rowTimes(l1, p.W2);
    for (int j = 0; j < p.W2.cols(); ++j) l2[j] = std::max(0.0, l2[j] + p.b2(0, j));
    const std::vector<double> l3 = rowTimes(l2, p.W3);
    return l3[0] + p.b3(0, 0);
}

}  // namespace ref
}  // namespace dcfa
