#include "dcfa/tape.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace dcfa {

Var GradientTape::push(DenseMatrix value, std::function<void(GradientTape&)> backward) {
    nodes_.push_back(Node{std::move(value), DenseMatrix(), std::move(backward)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

DenseMatrix& GradientTape::grad(Var v) {
    Node& n = nodes_[v.id];
    if (n.grad.size() == 0) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
    return n.grad;
}

void GradientTape::accumulate(Var v, const DenseMatrix& g) {
    DenseMatrix& dst = grad(v);
    for (size_t i = 0; i < dst.size(); ++i) dst.data()[i] += g.data()[i];
}

void GradientTape::accumulate(Var v, int i, int j, double g) { grad(v)(i, j) += g; }

void GradientTape::backward(Var loss) {
    if (value(loss).rows() != 1 || value(loss).cols() != 1)
        throw NumericError("backward requires a 1x1 loss node, got " + value(loss).shapeStr());
    grad(loss)(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.backward && n.grad.size() > 0) n.backward(*this);
    }
}

namespace ops {

namespace {
Var nextVar(const GradientTape& t) { return Var{static_cast<int>(t.size())}; }
}  // namespace

Var constant(GradientTape& t, DenseMatrix m) { return t.push(std::move(m)); }

Var matmul(GradientTape& t, Var a, Var b) {
    DenseMatrix c = kern::matmul(t.value(a), t.value(b));
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, out](GradientTape& tp) {
        const DenseMatrix g = tp.grad(out);
        tp.accumulate(a, kern::matmulNT(g, tp.value(b)));
        tp.accumulate(b, kern::matmulTN(tp.value(a), g));
    });
    return out;
}

Var add(GradientTape& t, Var a, Var b) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (!va.sameShape(vb)) throw DimensionError("add shape mismatch: " + shapePair(va, vb));
    DenseMatrix c = va;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += vb.data()[i];
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, out](GradientTape& tp) {
        tp.accumulate(a, tp.grad(out));
        tp.accumulate(b, tp.grad(out));
    });
    return out;
}

Var sub(GradientTape& t, Var a, Var b) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (!va.sameShape(vb)) throw DimensionError("sub shape mismatch: " + shapePair(va, vb));
    DenseMatrix c = va;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] -= vb.data()[i];
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, out](GradientTape& tp) {
        tp.accumulate(a, tp.grad(out));
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& gb = tp.grad(b);
        for (size_t i = 0; i < gb.size(); ++i) gb.data()[i] -= g.data()[i];
    });
    return out;
}

Var scale(GradientTape& t, Var a, double c) {
    DenseMatrix m = t.value(a);
    for (size_t i = 0; i < m.size(); ++i) m.data()[i] *= c;
    Var out = nextVar(t);
    t.push(std::move(m), [a, c, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += c * g.data()[i];
    });
    return out;
}

Var elemMul(GradientTape& t, Var a, Var b) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (!va.sameShape(vb)) throw DimensionError("elemMul shape mismatch: " + shapePair(va, vb));
    DenseMatrix c = va;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= vb.data()[i];
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        const DenseMatrix& va2 = tp.value(a);
        const DenseMatrix& vb2 = tp.value(b);
        DenseMatrix& ga = tp.grad(a);
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i] * vb2.data()[i];
        DenseMatrix& gb = tp.grad(b);
        for (size_t i = 0; i < gb.size(); ++i) gb.data()[i] += g.data()[i] * va2.data()[i];
    });
    return out;
}

Var maskMul(GradientTape& t, Var a, DenseMatrix mask) {
    const DenseMatrix& va = t.value(a);
    if (!va.sameShape(mask)) throw DimensionError("maskMul shape mismatch: " + shapePair(va, mask));
    DenseMatrix c = va;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= mask.data()[i];
    auto maskPtr = std::make_shared<DenseMatrix>(std::move(mask));
    Var out = nextVar(t);
    t.push(std::move(c), [a, maskPtr, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i] * maskPtr->data()[i];
    });
    return out;
}

Var activation(GradientTape& t, Var a, kern::Activation fn) {
    DenseMatrix y = kern::elementwise(t.value(a), fn);
    Var out = nextVar(t);
    t.push(std::move(y), [a, fn, out](GradientTape& tp) {
        const DenseMatrix d = kern::activationGradFromOutput(tp.value(out), fn);
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i] * d.data()[i];
    });
    return out;
}

Var rowSoftmax(GradientTape& t, Var a) {
    DenseMatrix y = kern::rowSoftmax(t.value(a));
    Var out = nextVar(t);
    t.push(std::move(y), [a, out](GradientTape& tp) {
        const DenseMatrix& y2 = tp.value(out);
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (int i = 0; i < y2.rows(); ++i) {
            double dot = 0.0;
            for (int j = 0; j < y2.cols(); ++j) dot += g(i, j) * y2(i, j);
            for (int j = 0; j < y2.cols(); ++j) ga(i, j) += y2(i, j) * (g(i, j) - dot);
        }
    });
    return out;
}

Var addRowVector(GradientTape& t, Var a, Var bias) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(bias);
    if (vb.rows() != 1 || vb.cols() != va.cols())
        throw DimensionError("addRowVector shape mismatch: " + shapePair(va, vb));
    DenseMatrix c = va;
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) += vb(0, j);
    Var out = nextVar(t);
    t.push(std::move(c), [a, bias, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        tp.accumulate(a, g);
        DenseMatrix& gb = tp.grad(bias);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
    });
    return out;
}

Var colBroadcastMul(GradientTape& t, Var col, Var m) {
    const DenseMatrix& vc = t.value(col);
    const DenseMatrix& vm = t.value(m);
    if (vc.cols() != 1 || vc.rows() != vm.rows())
        throw DimensionError("colBroadcastMul shape mismatch: " + shapePair(vc, vm));
    DenseMatrix c = vm;
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) *= vc(i, 0);
    Var out = nextVar(t);
    t.push(std::move(c), [col, m, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        const DenseMatrix& vc2 = tp.value(col);
        const DenseMatrix& vm2 = tp.value(m);
        DenseMatrix& gm = tp.grad(m);
        DenseMatrix& gc = tp.grad(col);
        for (int i = 0; i < g.rows(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < g.cols(); ++j) {
                gm(i, j) += g(i, j) * vc2(i, 0);
                acc += g(i, j) * vm2(i, j);
            }
            gc(i, 0) += acc;
        }
    });
    return out;
}

Var concatCols(GradientTape& t, Var a, Var b) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (va.rows() != vb.rows())
        throw DimensionError("concatCols shape mismatch: " + shapePair(va, vb));
    DenseMatrix c(va.rows(), va.cols() + vb.cols());
    for (int i = 0; i < c.rows(); ++i) {
        for (int j = 0; j < va.cols(); ++j) c(i, j) = va(i, j);
        for (int j = 0; j < vb.cols(); ++j) c(i, va.cols() + j) = vb(i, j);
    }
    const int ca = va.cols();
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, ca, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        DenseMatrix& gb = tp.grad(b);
        for (int i = 0; i < g.rows(); ++i) {
            for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, j);
            for (int j = 0; j < gb.cols(); ++j) gb(i, j) += g(i, ca + j);
        }
    });
    return out;
}

Var concatRows(GradientTape& t, Var a, Var b) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (va.cols() != vb.cols())
        throw DimensionError("concatRows shape mismatch: " + shapePair(va, vb));
    DenseMatrix c(va.rows() + vb.rows(), va.cols());
    for (int i = 0; i < va.rows(); ++i)
        for (int j = 0; j < va.cols(); ++j) c(i, j) = va(i, j);
    for (int i = 0; i < vb.rows(); ++i)
        for (int j = 0; j < vb.cols(); ++j) c(va.rows() + i, j) = vb(i, j);
    const int ra = va.rows();
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, ra, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        DenseMatrix& gb = tp.grad(b);
        for (int i = 0; i < ga.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j);
        for (int i = 0; i < gb.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) gb(i, j) += g(ra + i, j);
    });
    return out;
}

Var sliceRows(GradientTape& t, Var a, int rowBegin, int rowEnd) {
    const DenseMatrix& va = t.value(a);
    if (rowBegin < 0 || rowEnd > va.rows() || rowBegin >= rowEnd)
        throw DimensionError("sliceRows range invalid for " + va.shapeStr());
    DenseMatrix c(rowEnd - rowBegin, va.cols());
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) = va(rowBegin + i, j);
    Var out = nextVar(t);
    t.push(std::move(c), [a, rowBegin, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga(rowBegin + i, j) += g(i, j);
    });
    return out;
}

Var sliceCols(GradientTape& t, Var a, int colBegin, int colEnd) {
    const DenseMatrix& va = t.value(a);
    if (colBegin < 0 || colEnd > va.cols() || colBegin >= colEnd)
        throw DimensionError("sliceCols range invalid for " + va.shapeStr());
    DenseMatrix c(va.rows(), colEnd - colBegin);
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) = va(i, colBegin + j);
    Var out = nextVar(t);
    t.push(std::move(c), [a, colBegin, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) ga(i, colBegin + j) += g(i, j);
    });
    return out;
}

Var rowSum(GradientTape& t, Var a) {
    const DenseMatrix& va = t.value(a);
    DenseMatrix c(va.rows(), 1);
    for (int i = 0; i < va.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < va.cols(); ++j) s += va(i, j);
        c(i, 0) = s;
    }
    Var out = nextVar(t);
    t.push(std::move(c), [a, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        for (int i = 0; i < ga.rows(); ++i)
            for (int j = 0; j < ga.cols(); ++j) ga(i, j) += g(i, 0);
    });
    return out;
}

Var gatherRows(GradientTape& t, Var m, std::vector<int> idx) {
    const DenseMatrix& vm = t.value(m);
    DenseMatrix c(static_cast<int>(idx.size()), vm.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < c.rows(); ++i)
        for (int j = 0; j < c.cols(); ++j) c(i, j) = vm(idx[i], j);
    auto idxPtr = std::make_shared<std::vector<int>>(std::move(idx));
    Var out = nextVar(t);
    t.push(std::move(c), [m, idxPtr, out](GradientTape& tp) {
        // scatter-add stays serial for deterministic accumulation order
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& gm = tp.grad(m);
        for (int i = 0; i < g.rows(); ++i) {
            const int r = (*idxPtr)[i];
            for (int j = 0; j < g.cols(); ++j) gm(r, j) += g(i, j);
        }
    });
    return out;
}

Var gatherDot(GradientTape& t, Var a, Var b, const IndexTable& idx) {
    const DenseMatrix& va = t.value(a);
    const DenseMatrix& vb = t.value(b);
    if (va.cols() != vb.cols())
        throw DimensionError("gatherDot shape mismatch: " + shapePair(va, vb));
    const int n = va.rows();
    const int s = n > 0 ? static_cast<int>(idx[0].size()) : 0;
    DenseMatrix c(n, s);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s; ++j) {
            double acc = 0.0;
            const double* ai = va.data() + static_cast<size_t>(i) * va.cols();
            const double* br = vb.data() + static_cast<size_t>(idx[i][j]) * vb.cols();
            for (int k = 0; k < va.cols(); ++k) acc += ai[k] * br[k];
            c(i, j) = acc;
        }
    auto idxPtr = std::make_shared<IndexTable>(idx);
    Var out = nextVar(t);
    t.push(std::move(c), [a, b, idxPtr, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        const DenseMatrix& va2 = tp.value(a);
        const DenseMatrix& vb2 = tp.value(b);
        DenseMatrix& ga = tp.grad(a);
        DenseMatrix& gb = tp.grad(b);
        for (int i = 0; i < g.rows(); ++i)
            for (int j = 0; j < g.cols(); ++j) {
                const double gij = g(i, j);
                if (gij == 0.0) continue;
                const int r = (*idxPtr)[i][j];
                for (int k = 0; k < va2.cols(); ++k) {
                    ga(i, k) += gij * vb2(r, k);
                    gb(r, k) += gij * va2(i, k);
                }
            }
    });
    return out;
}

Var gatherWeightedSum(GradientTape& t, Var w, Var v, const IndexTable& idx) {
    const DenseMatrix& vw = t.value(w);
    const DenseMatrix& vv = t.value(v);
    const int n = vw.rows();
    const int s = vw.cols();
    DenseMatrix c(n, vv.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < s; ++j) {
            const double wij = vw(i, j);
            const double* vr = vv.data() + static_cast<size_t>(idx[i][j]) * vv.cols();
            double* ci = c.data() + static_cast<size_t>(i) * c.cols();
            for (int k = 0; k < vv.cols(); ++k) ci[k] += wij * vr[k];
        }
    auto idxPtr = std::make_shared<IndexTable>(idx);
    Var out = nextVar(t);
    t.push(std::move(c), [w, v, idxPtr, out](GradientTape& tp) {
        const DenseMatrix& g = tp.grad(out);
        const DenseMatrix& vw2 = tp.value(w);
        const DenseMatrix& vv2 = tp.value(v);
        DenseMatrix& gw = tp.grad(w);
        DenseMatrix& gv = tp.grad(v);
        for (int i = 0; i < vw2.rows(); ++i)
            for (int j = 0; j < vw2.cols(); ++j) {
                const int r = (*idxPtr)[i][j];
                double acc = 0.0;
                for (int k = 0; k < g.cols(); ++k) {
                    acc += g(i, k) * vv2(r, k);
                    gv(r, k) += g(i, k) * vw2(i, j);
                }
                gw(i, j) += acc;
            }
    });
    return out;
}

Var layerNorm(GradientTape& t, Var a, double eps) {
    const DenseMatrix& x = t.value(a);
    const int n = x.rows(), d = x.cols();
    DenseMatrix y(n, d);
    DenseMatrix invStd(n, 1);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += x(i, j);
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = x(i, j) - mean;
            var += c * c;
        }
        var /= d;
        const double is = 1.0 / std::sqrt(var + eps);
        invStd(i, 0) = is;
        for (int j = 0; j < d; ++j) y(i, j) = (x(i, j) - mean) * is;
    }
    auto isPtr = std::make_shared<DenseMatrix>(std::move(invStd));
    Var out = nextVar(t);
    t.push(std::move(y), [a, isPtr, out](GradientTape& tp) {
        const DenseMatrix& y2 = tp.value(out);
        const DenseMatrix& g = tp.grad(out);
        DenseMatrix& ga = tp.grad(a);
        const int d2 = y2.cols();
        for (int i = 0; i < y2.rows(); ++i) {
            double gSum = 0.0, gySum = 0.0;
            for (int j = 0; j < d2; ++j) {
                gSum += g(i, j);
                gySum += g(i, j) * y2(i, j);
            }
            const double is = (*isPtr)(i, 0);
            for (int j = 0; j < d2; ++j)
                ga(i, j) += is * (g(i, j) - gSum / d2 - y2(i, j) * gySum / d2);
        }
    });
    return out;
}

Var marginDistanceLoss(GradientTape& t, Var z1, Var z2, double gamma, bool attract) {
    const DenseMatrix& a = t.value(z1);
    const DenseMatrix& b = t.value(z2);
    if (!a.sameShape(b))
        throw DimensionError("marginDistanceLoss shape mismatch: " + shapePair(a, b));
    const int n = a.rows(), d = a.cols();
    auto dist = std::make_shared<std::vector<double>>(n);
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = a(i, j) - b(i, j);
            s += c * c;
        }
        const double di = std::sqrt(s);
        (*dist)[i] = di;
        const double h = attract ? di - gamma : gamma - di;
        if (h > 0.0) loss += h;
    }
    loss /= n;
    Var out = nextVar(t);
    t.push(DenseMatrix(1, 1, {loss}), [z1, z2, gamma, attract, dist, out](GradientTape& tp) {
        const double g = tp.grad(out)(0, 0);
        const DenseMatrix& a2 = tp.value(z1);
        const DenseMatrix& b2 = tp.value(z2);
        DenseMatrix& g1 = tp.grad(z1);
        DenseMatrix& g2 = tp.grad(z2);
        const int n2 = a2.rows();
        const double sign = attract ? 1.0 : -1.0;
        for (int i = 0; i < n2; ++i) {
            const double di = (*dist)[i];
            const bool active = attract ? di > gamma : di < gamma;
            // subgradient 0 at the kink and at coincident rows
            if (!active || di == 0.0) continue;
            const double c = sign * g / (n2 * di);
            for (int j = 0; j < a2.cols(); ++j) {
                const double diff = a2(i, j) - b2(i, j);
                g1(i, j) += c * diff;
                g2(i, j) -= c * diff;
            }
        }
    });
    return out;
}

Var weightedBceFromLogits(GradientTape& t, Var logits, const std::vector<double>& labels,
                          double wPos, bool meanReduce) {
    const DenseMatrix& z = t.value(logits);
    if (z.cols() != 1 || static_cast<size_t>(z.rows()) != labels.size())
        throw DimensionError("weightedBceFromLogits expects Nx1 logits matching labels");
    if (labels.empty()) throw DataError("weightedBceFromLogits: empty input");
    const int n = z.rows();
    // softplus(x) = log(1 + e^x), evaluated stably
    auto softplus = [](double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double zi = z(i, 0);
        loss += labels[i] > 0.5 ? wPos * softplus(-zi) : softplus(zi);
    }
    const double norm = meanReduce ? 1.0 / n : 1.0;
    loss *= norm;
    auto lab = std::make_shared<std::vector<double>>(labels);
    Var out = nextVar(t);
    t.push(DenseMatrix(1, 1, {loss}), [logits, lab, wPos, norm, out](GradientTape& tp) {
        const double g = tp.grad(out)(0, 0);
        const DenseMatrix& z2 = tp.value(logits);
        DenseMatrix& gz = tp.grad(logits);
        for (int i = 0; i < z2.rows(); ++i) {
            const double zi = z2(i, 0);
            const double sig = zi >= 0.0 ? 1.0 / (1.0 + std::exp(-zi)) : std::exp(zi) / (1.0 + std::exp(zi));
            const double d = (*lab)[i] > 0.5 ? wPos * (sig - 1.0) : sig;
            gz(i, 0) += g * norm * d;
        }
    });
    return out;
}

}  // namespace ops
}  // namespace dcfa
