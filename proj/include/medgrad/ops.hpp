#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "medgrad/tensor.hpp"

namespace medgrad {

// Plain-tensor numeric kernels. These are the non-autodiff entry points; the
// tape ops in tape.hpp reuse the same forward arithmetic so both paths agree
// bitwise. Reductions run sequentially in row-major order, which is what
// makes repeated runs deterministic.

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape[1] != b.shape[0])
        throw DimensionError("matmul shape mismatch: " + shape_str(a.shape) + " x " +
                             shape_str(b.shape));
    const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
    Tensor<T> c({m, n});
    const T* ap = a.data.data();
    const T* bp = b.data.data();
    T* cp = c.data.data();
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = cp + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T av = ap[i * k + kk];
            const T* brow = bp + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
    const std::size_t m = a.rows(), n = a.cols();
    Tensor<T> out({n, m});
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[j * m + i] = a.data[i * n + j];
    return out;
}

template <typename T>
T dot(const std::vector<T>& a, const std::vector<T>& b) {
    T s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

template <typename T>
T norm2(const T* p, std::size_t n) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
    return std::sqrt(s);
}

inline constexpr double kNormEps = 1e-12;

// Row-wise L2 normalization; a 1-d tensor is treated as a single row.
template <typename T>
Tensor<T> l2_normalize(const Tensor<T>& v) {
    Tensor<T> out = v;
    const std::size_t d = v.shape.back();
    const std::size_t rows = v.size() / d;
    for (std::size_t r = 0; r < rows; ++r) {
        T* p = out.data.data() + r * d;
        const T n = norm2(p, d);
        if (!(static_cast<double>(n) > kNormEps))
            throw DegenerateInputError("l2_normalize: zero-norm row " + std::to_string(r));
        for (std::size_t i = 0; i < d; ++i) p[i] /= n;
    }
    return out;
}

template <typename T>
T cosine_similarity(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.size() != b.size())
        throw DimensionError("cosine_similarity length mismatch: " + shape_str(a.shape) +
                             " vs " + shape_str(b.shape));
    const T na = norm2(a.data.data(), a.size());
    const T nb = norm2(b.data.data(), b.size());
    if (!(static_cast<double>(na) > kNormEps) || !(static_cast<double>(nb) > kNormEps))
        throw DegenerateInputError("cosine_similarity: zero vector");
    return dot(a.data, b.data) / (na * nb);
}

// Max-subtracted softmax over the last axis of a 1-d or row of a 2-d tensor.
template <typename T>
void softmax_inplace_row(T* p, std::size_t n) {
    T mx = p[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, p[i]);
    T sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(p[i] - mx);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
    Tensor<T> out = logits;
    const std::size_t n = logits.shape.back();
    const std::size_t rows = logits.size() / n;
    for (std::size_t r = 0; r < rows; ++r) softmax_inplace_row(out.data.data() + r * n, n);
    return out;
}

// Mean over the batch of -log softmax(logits)[target].
template <typename T>
T cross_entropy(const Tensor<T>& logits, const std::vector<std::size_t>& targets) {
    const std::size_t k = logits.shape.back();
    const std::size_t batch = logits.size() / k;
    if (targets.size() != batch)
        throw ContractError("cross_entropy: " + std::to_string(targets.size()) +
                            " targets for batch " + std::to_string(batch));
    T total = 0;
    for (std::size_t b = 0; b < batch; ++b) {
        if (targets[b] >= k)
            throw IndexError("cross_entropy: target " + std::to_string(targets[b]) +
                             " out of range [0, " + std::to_string(k) + ")");
        const T* row = logits.data.data() + b * k;
        T mx = row[0];
        for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, row[i]);
        T lse = 0;
        for (std::size_t i = 0; i < k; ++i) lse += std::exp(row[i] - mx);
        lse = mx + std::log(lse);
        total += lse - row[targets[b]];
    }
    return total / static_cast<T>(batch);
}

// Symmetric InfoNCE over a square logit matrix with matched pairs on the
// diagonal: mean of the row-wise and column-wise cross-entropies.
template <typename T>
T contrastive_loss(const Tensor<T>& logits) {
    if (logits.rank() != 2 || logits.rows() != logits.cols())
        throw ContractError("contrastive_loss needs a square matrix, got " + shape_str(logits.shape));
    const std::size_t b = logits.rows();
    std::vector<std::size_t> diag(b);
    for (std::size_t i = 0; i < b; ++i) diag[i] = i;
    const T rows = cross_entropy(logits, diag);
    const T cols = cross_entropy(transpose(logits), diag);
    return (rows + cols) / T(2);
}

}  // namespace medgrad
