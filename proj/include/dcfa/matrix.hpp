#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfa {

// Error categories surfaced by the CLI as distinct exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of doubles. The only tensor type in the project;
/// vectors are 1xN or Nx1 matrices.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
    }
    DenseMatrix(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), v_(std::move(values)) {
        if (v_.size() != static_cast<size_t>(rows) * cols)
            throw DimensionError("value count " + std::to_string(v_.size()) + " does not match " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return v_.size(); }

    double& operator()(int i, int j) { return v_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return v_[static_cast<size_t>(i) * cols_ + j]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    bool sameShape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shapeStr() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

    bool allFinite() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> v_;
};

std::string shapePair(const DenseMatrix& a, const DenseMatrix& b);

// Kernels. The omp namespace holds the production versions (parallel over
// output rows with a static schedule, so results are bitwise identical for
// any thread count); the serial namespace is the reference implementation
// kept for tests and the benchmark target.
namespace kern {

namespace serial {
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix rowSoftmax(const DenseMatrix& m);
}  // namespace serial

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// a^T * b and a * b^T, used by matmul backward.
DenseMatrix matmulTN(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix matmulNT(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix rowSoftmax(const DenseMatrix& m);
DenseMatrix transpose(const DenseMatrix& m);

enum class Activation { Relu, Tanh, Sigmoid };
DenseMatrix elementwise(const DenseMatrix& m, Activation fn);
// Derivative of the activation expressed through its output y.
DenseMatrix activationGradFromOutput(const DenseMatrix& y, Activation fn);

}  // namespace kern

}  // namespace dcfa
