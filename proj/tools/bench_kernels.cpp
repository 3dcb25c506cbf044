// Compares the OpenMP kernels against the serial reference implementations:
// wall time plus a max-abs-difference column to confirm the two routes agree
// bitwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "dcfa/data.hpp"
#include "dcfa/matrix.hpp"

using namespace dcfa;

namespace {

DenseMatrix randomMatrix(int r, int c, std::mt19937_64& eng) {
    DenseMatrix m(r, c);
    for (double& v : m.values()) v = rng::uniform(eng, -1.0, 1.0);
    return m;
}

template <typename F>
double timeIt(F&& fn, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

double maxAbsDiff(const DenseMatrix& a, const DenseMatrix& b) {
    double d = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        d = std::max(d, std::fabs(a.values()[i] - b.values()[i]));
    return d;
}

}  // namespace

int main() {
    std::mt19937_64 eng(12345);
    std::printf("%-28s %12s %12s %9s %12s\n", "kernel", "serial_s", "omp_s", "speedup",
                "max_abs_diff");

    for (int n : {64, 128, 256, 512}) {
        DenseMatrix a = randomMatrix(n, n, eng);
        DenseMatrix b = randomMatrix(n, n, eng);
        const int reps = n <= 128 ? 50 : 10;
        DenseMatrix rs, ro;
        const double ts = timeIt([&] { rs = kern::serial::matmul(a, b); }, reps);
        const double to = timeIt([&] { ro = kern::matmul(a, b); }, reps);
        std::printf("%-28s %12.6f %12.6f %8.2fx %12.3e\n",
                    ("matmul " + std::to_string(n) + "x" + std::to_string(n)).c_str(), ts, to,
                    ts / to, maxAbsDiff(rs, ro));
    }

    for (int n : {256, 1024, 4096}) {
        DenseMatrix m = randomMatrix(n, 64, eng);
        const int reps = 50;
        DenseMatrix rs, ro;
        const double ts = timeIt([&] { rs = kern::serial::rowSoftmax(m); }, reps);
        const double to = timeIt([&] { ro = kern::rowSoftmax(m); }, reps);
        std::printf("%-28s %12.6f %12.6f %8.2fx %12.3e\n",
                    ("rowSoftmax " + std::to_string(n) + "x64").c_str(), ts, to, ts / to,
                    maxAbsDiff(rs, ro));
    }
    return 0;
}
