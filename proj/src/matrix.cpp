#include "dcfa/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace dcfa {

bool DenseMatrix::allFinite() const {
    for (double x : v_)
        if (!std::isfinite(x)) return false;
    return true;
}

std::string shapePair(const DenseMatrix& a, const DenseMatrix& b) {
    return a.shapeStr() + " and " + b.shapeStr();
}

namespace kern {

static void checkMatmulShapes(int ac, int br, const DenseMatrix& a, const DenseMatrix& b) {
    if (ac != br)
        throw DimensionError("matmul shape mismatch: " + shapePair(a, b));
}

namespace serial {

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    checkMatmulShapes(a.cols(), b.rows(), a, b);
    DenseMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

DenseMatrix rowSoftmax(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
        double mx = m(i, 0);
        for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (int j = 0; j < m.cols(); ++j) {
            const double e = std::exp(m(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

}  // namespace serial

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    checkMatmulShapes(a.cols(), b.rows(), a, b);
    DenseMatrix c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            double* ci = c.data() + static_cast<size_t>(i) * c.cols();
            const double* bk = b.data() + static_cast<size_t>(k) * b.cols();
            for (int j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    return c;
}

DenseMatrix matmulTN(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmulTN shape mismatch: " + shapePair(a, b));
    DenseMatrix c(a.cols(), b.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.cols(); ++i)
        for (int k = 0; k < a.rows(); ++k) {
            const double aki = a(k, i);
            if (aki == 0.0) continue;
            double* ci = c.data() + static_cast<size_t>(i) * c.cols();
            const double* bk = b.data() + static_cast<size_t>(k) * b.cols();
            for (int j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    return c;
}

DenseMatrix matmulNT(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmulNT shape mismatch: " + shapePair(a, b));
    DenseMatrix c(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.rows(); ++j) {
            const double* ai = a.data() + static_cast<size_t>(i) * a.cols();
            const double* bj = b.data() + static_cast<size_t>(j) * b.cols();
            // four fixed accumulators: vectorizable yet still deterministic
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            const int n = a.cols();
            int k = 0;
            for (; k + 4 <= n; k += 4) {
                s0 += ai[k] * bj[k];
                s1 += ai[k + 1] * bj[k + 1];
                s2 += ai[k + 2] * bj[k + 2];
                s3 += ai[k + 3] * bj[k + 3];
            }
            double acc = (s0 + s1) + (s2 + s3);
            for (; k < n; ++k) acc += ai[k] * bj[k];
            c(i, j) = acc;
        }
    return c;
}

DenseMatrix rowSoftmax(const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m.rows(); ++i) {
        double mx = m(i, 0);
        for (int j = 1; j < m.cols(); ++j) mx = std::max(mx, m(i, j));
        double sum = 0.0;
        for (int j = 0; j < m.cols(); ++j) {
            const double e = std::exp(m(i, j) - mx);
            out(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < m.cols(); ++j) out(i, j) /= sum;
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& m) {
    DenseMatrix t(m.cols(), m.rows());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

DenseMatrix elementwise(const DenseMatrix& m, Activation fn) {
    DenseMatrix out(m.rows(), m.cols());
    const size_t n = m.size();
#pragma omp parallel for schedule(static)
    for (long long idx = 0; idx < static_cast<long long>(n); ++idx) {
        const double x = m.data()[idx];
        double y;
        switch (fn) {
            case Activation::Relu: y = x > 0.0 ? x : 0.0; break;
            case Activation::Tanh: y = std::tanh(x); break;
            default: y = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
        }
        out.data()[idx] = y;
    }
    return out;
}

DenseMatrix activationGradFromOutput(const DenseMatrix& y, Activation fn) {
    DenseMatrix g(y.rows(), y.cols());
    for (size_t idx = 0; idx < y.size(); ++idx) {
        const double v = y.data()[idx];
        switch (fn) {
            case Activation::Relu: g.data()[idx] = v > 0.0 ? 1.0 : 0.0; break;
            case Activation::Tanh: g.data()[idx] = 1.0 - v * v; break;
            default: g.data()[idx] = v * (1.0 - v);
        }
    }
    return g;
}

}  // namespace kern
}  // namespace dcfa
