#pragma once

#include <cstddef>
#include <vector>

namespace fedtrace {

// Dense row-major float32 matrix. Plain value type; freely copyable and
// movable between threads.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    Tensor2() = default;
    Tensor2(std::size_t r, std::size_t c, float fill = 0.0f)
        : rows(r), cols(c), data(r * c, fill) {}

    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    float* row(std::size_t r) { return data.data() + r * cols; }
    const float* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Tensor2& o) const { return rows == o.rows && cols == o.cols; }
};

// throws std::invalid_argument when any entry is NaN/Inf
void check_finite(const Tensor2& t, const char* what);

namespace kernels {

// OpenMP-parallel matmul variants. Each output element is a serially
// accumulated dot product, so results are bit-identical for any thread
// count. The *_serial twins are the reference implementations used by the
// kernel tests and the benchmark.

// out = a * b            (a: m x k, b: k x n, out: m x n)
void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out);
void matmul_serial(const Tensor2& a, const Tensor2& b, Tensor2& out);

// out = a * b^T          (a: m x k, b: n x k, out: m x n)
void matmul_nt(const Tensor2& a, const Tensor2& b, Tensor2& out);
void matmul_nt_serial(const Tensor2& a, const Tensor2& b, Tensor2& out);

// out = a^T * b          (a: k x m, b: k x n, out: m x n)
void matmul_tn(const Tensor2& a, const Tensor2& b, Tensor2& out);
void matmul_tn_serial(const Tensor2& a, const Tensor2& b, Tensor2& out);

} // namespace kernels

} // namespace fedtrace
