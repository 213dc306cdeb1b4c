#include "fedtrace/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fedtrace {

void check_finite(const Tensor2& t, const char* what) {
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite entry");
        }
    }
}

namespace kernels {

namespace {

void check_matmul(std::size_t ak, std::size_t bk, const char* what) {
    if (ak != bk) {
        throw std::invalid_argument(std::string(what) + ": inner dimensions disagree");
    }
}

// Parallelising tiny products costs more than it saves.
constexpr std::size_t kOmpThreshold = 16 * 1024;

} // namespace

void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.cols, b.rows, "matmul");
    out = Tensor2(a.rows, b.cols);
    const std::size_t m = a.rows, k = a.cols, n = b.cols;
    const bool big = m * n * k >= kOmpThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        const float* arow = a.row(static_cast<std::size_t>(i));
        float* orow = out.row(static_cast<std::size_t>(i));
        for (std::size_t p = 0; p < k; ++p) {
            const float av = arow[p];
            const float* brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
}

void matmul_serial(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.cols, b.rows, "matmul_serial");
    out = Tensor2(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const float* arow = a.row(i);
        float* orow = out.row(i);
        for (std::size_t p = 0; p < a.cols; ++p) {
            const float av = arow[p];
            const float* brow = b.row(p);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
}

void matmul_nt(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.cols, b.cols, "matmul_nt");
    out = Tensor2(a.rows, b.rows);
    const std::size_t m = a.rows, k = a.cols, n = b.rows;
    const bool big = m * n * k >= kOmpThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        const float* arow = a.row(static_cast<std::size_t>(i));
        float* orow = out.row(static_cast<std::size_t>(i));
        for (std::size_t j = 0; j < n; ++j) {
            const float* brow = b.row(j);
            float acc = 0.0f;
            for (std::size_t p = 0; p < k; ++p) {
                acc += arow[p] * brow[p];
            }
            orow[j] = acc;
        }
    }
}

void matmul_nt_serial(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.cols, b.cols, "matmul_nt_serial");
    out = Tensor2(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const float* arow = a.row(i);
        float* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const float* brow = b.row(j);
            float acc = 0.0f;
            for (std::size_t p = 0; p < a.cols; ++p) {
                acc += arow[p] * brow[p];
            }
            orow[j] = acc;
        }
    }
}

void matmul_tn(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.rows, b.rows, "matmul_tn");
    out = Tensor2(a.cols, b.cols);
    const std::size_t m = a.cols, k = a.rows, n = b.cols;
    const bool big = m * n * k >= kOmpThreshold;
#pragma omp parallel for schedule(static) if (big)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        float* orow = out.row(static_cast<std::size_t>(i));
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a.at(p, static_cast<std::size_t>(i));
            const float* brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
}

void matmul_tn_serial(const Tensor2& a, const Tensor2& b, Tensor2& out) {
    check_matmul(a.rows, b.rows, "matmul_tn_serial");
    out = Tensor2(a.cols, b.cols);
    for (std::size_t i = 0; i < a.cols; ++i) {
        float* orow = out.row(i);
        for (std::size_t p = 0; p < a.rows; ++p) {
            const float av = a.at(p, i);
            const float* brow = b.row(p);
            for (std::size_t j = 0; j < b.cols; ++j) {
                orow[j] += av * brow[j];
            }
        }
    }
}

} // namespace kernels

} // namespace fedtrace
