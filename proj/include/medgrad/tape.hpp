#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "medgrad/ops.hpp"
#include "medgrad/tensor.hpp"

namespace medgrad {

// Graph handle; only meaningful together with the tape that produced it.
struct Var {
    std::uint32_t idx = 0;
};

// Reverse-mode autodiff over a linear tape. Every op appends its output
// tensor to the tape and, when any operand requires gradients, a backward
// closure. backward() walks the closures once, in reverse order, so the
// topological invariant (operands precede outputs) holds by construction.
//
// Gradients accumulate sequentially in recording order; there is no
// parallelism inside a tape, which keeps repeated runs bitwise identical.
template <typename T>
class Tape {
public:
    Tape() { reserve(256); }

    void reserve(std::size_t n) {
        values_.reserve(n);
        grads_.reserve(n);
        needs_.reserve(n);
        nodes_.reserve(n);
    }

    void clear() {
        values_.clear();
        grads_.clear();
        needs_.clear();
        nodes_.clear();
        params_.clear();
    }

    std::size_t size() const { return values_.size(); }

    const Tensor<T>& value(Var v) const { return values_[v.idx]; }

    // Gradient of the last backward() w.r.t. this node; empty if none flowed.
    std::vector<T> grad(Var v) const { return grads_[v.idx]; }

    Tensor<T> grad_tensor(Var v) const {
        const auto& g = grads_[v.idx];
        if (g.empty()) return Tensor<T>::full(values_[v.idx].shape, T(0));
        return Tensor<T>(values_[v.idx].shape, g);
    }

    Var leaf(Tensor<T> value, bool needs_grad = false) {
        return push(std::move(value), needs_grad);
    }

    // Leaf bound to an external parameter: after backward(), the gradient is
    // accumulated into owner.grad.
    Var param(Tensor<T>& owner) {
        Var v = push(owner, owner.requires_grad);
        if (owner.requires_grad) params_.push_back({&owner, v});
        return v;
    }

    // ---- ops ----------------------------------------------------------

    Var matmul(Var a, Var b) {
        Var out = push(medgrad::matmul(val(a), val(b)), needs(a) || needs(b));
        if (needs(out)) record([a, b, out](Tape& t) {
            const auto& A = t.val(a);
            const auto& B = t.val(b);
            const auto& dC = t.grads_[out.idx];
            const std::size_t m = A.shape[0], k = A.shape[1], n = B.shape[1];
            if (t.needs(a)) {
                auto& dA = t.grad_buf(a);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        T s = 0;
                        const T* dcr = dC.data() + i * n;
                        const T* br = B.data.data() + kk * n;
                        for (std::size_t j = 0; j < n; ++j) s += dcr[j] * br[j];
                        dA[i * k + kk] += s;
                    }
            }
            if (t.needs(b)) {
                auto& dB = t.grad_buf(b);
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const T av = A.data[i * k + kk];
                        const T* dcr = dC.data() + i * n;
                        T* dbr = dB.data() + kk * n;
                        for (std::size_t j = 0; j < n; ++j) dbr[j] += av * dcr[j];
                    }
            }
        });
        return out;
    }

    Var add(Var a, Var b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (A.shape != B.shape)
            throw DimensionError("add shape mismatch: " + shape_str(A.shape) + " vs " +
                                 shape_str(B.shape));
        Tensor<T> out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += B.data[i];
        Var o = push(std::move(out), needs(a) || needs(b));
        if (needs(o)) record([a, b, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            if (t.needs(a)) t.axpy(a, dy);
            if (t.needs(b)) t.axpy(b, dy);
        });
        return o;
    }

    // a[m x n] + row vector b[1 x n] broadcast over rows.
    Var add_rowvec(Var a, Var b) {
        const auto& A = val(a);
        const auto& B = val(b);
        const std::size_t n = A.shape.back();
        if (B.size() != n)
            throw DimensionError("add_rowvec: row " + shape_str(B.shape) + " vs " +
                                 shape_str(A.shape));
        Tensor<T> out = A;
        const std::size_t rows = A.size() / n;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < n; ++j) out.data[r * n + j] += B.data[j];
        Var o = push(std::move(out), needs(a) || needs(b));
        if (needs(o)) record([a, b, o, rows, n](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            if (t.needs(a)) t.axpy(a, dy);
            if (t.needs(b)) {
                auto& db = t.grad_buf(b);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < n; ++j) db[j] += dy[r * n + j];
            }
        });
        return o;
    }

    Var mul(Var a, Var b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (A.shape != B.shape)
            throw DimensionError("mul shape mismatch: " + shape_str(A.shape) + " vs " +
                                 shape_str(B.shape));
        Tensor<T> out = A;
        for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= B.data[i];
        Var o = push(std::move(out), needs(a) || needs(b));
        if (needs(o)) record([a, b, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            if (t.needs(a)) {
                auto& da = t.grad_buf(a);
                const auto& B2 = t.val(b);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * B2.data[i];
            }
            if (t.needs(b)) {
                auto& db = t.grad_buf(b);
                const auto& A2 = t.val(a);
                for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * A2.data[i];
            }
        });
        return o;
    }

    Var scale(Var a, T c) {
        Tensor<T> out = val(a);
        for (auto& x : out.data) x *= c;
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o, c](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            auto& da = t.grad_buf(a);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += c * dy[i];
        });
        return o;
    }

    // Multiply by a learnable scalar (1-element tensor).
    Var scale_by(Var a, Var s) {
        if (val(s).size() != 1) throw ContractError("scale_by: scale must be a scalar tensor");
        const T sv = val(s).data[0];
        Tensor<T> out = val(a);
        for (auto& x : out.data) x *= sv;
        Var o = push(std::move(out), needs(a) || needs(s));
        if (needs(o)) record([a, s, o, sv](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            if (t.needs(a)) {
                auto& da = t.grad_buf(a);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += sv * dy[i];
            }
            if (t.needs(s)) {
                const auto& A = t.val(a);
                T acc = 0;
                for (std::size_t i = 0; i < dy.size(); ++i) acc += dy[i] * A.data[i];
                t.grad_buf(s)[0] += acc;
            }
        });
        return o;
    }

    Var exp(Var a) {
        Tensor<T> out = val(a);
        for (auto& x : out.data) x = std::exp(x);
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& y = t.val(o);
            auto& da = t.grad_buf(a);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y.data[i];
        });
        return o;
    }

    // Exact (erf-based) GELU.
    Var gelu(Var a) {
        static constexpr double kInvSqrt2 = 0.70710678118654752440;
        static constexpr double kInvSqrt2Pi = 0.39894228040143267794;
        Tensor<T> out = val(a);
        for (auto& x : out.data) {
            const double xd = static_cast<double>(x);
            x = static_cast<T>(xd * 0.5 * (1.0 + std::erf(xd * kInvSqrt2)));
        }
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& x = t.val(a);
            auto& da = t.grad_buf(a);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                const double xd = static_cast<double>(x.data[i]);
                const double cdf = 0.5 * (1.0 + std::erf(xd * kInvSqrt2));
                const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xd * xd);
                da[i] += dy[i] * static_cast<T>(cdf + xd * pdf);
            }
        });
        return o;
    }

    // Row-wise layer norm with affine parameters gamma/beta of length n.
    Var layer_norm(Var x, Var gamma, Var beta, T eps = T(1e-5)) {
        const auto& X = val(x);
        const std::size_t n = X.shape.back();
        const std::size_t rows = X.size() / n;
        if (val(gamma).size() != n || val(beta).size() != n)
            throw DimensionError("layer_norm: affine params must have length " + std::to_string(n));
        std::vector<T> xhat(X.size());
        std::vector<T> inv_std(rows);
        Tensor<T> out = X;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* xr = X.data.data() + r * n;
            T mean = 0;
            for (std::size_t j = 0; j < n; ++j) mean += xr[j];
            mean /= static_cast<T>(n);
            T var = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const T d = xr[j] - mean;
                var += d * d;
            }
            var /= static_cast<T>(n);
            const T is = T(1) / std::sqrt(var + eps);
            inv_std[r] = is;
            for (std::size_t j = 0; j < n; ++j) {
                const T xh = (xr[j] - mean) * is;
                xhat[r * n + j] = xh;
                out.data[r * n + j] = xh * val(gamma).data[j] + val(beta).data[j];
            }
        }
        Var o = push(std::move(out), needs(x) || needs(gamma) || needs(beta));
        if (needs(o)) record([x, gamma, beta, o, rows, n, xh = std::move(xhat),
                              is = std::move(inv_std)](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& G = t.val(gamma);
            if (t.needs(gamma)) {
                auto& dg = t.grad_buf(gamma);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < n; ++j) dg[j] += dy[r * n + j] * xh[r * n + j];
            }
            if (t.needs(beta)) {
                auto& db = t.grad_buf(beta);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < n; ++j) db[j] += dy[r * n + j];
            }
            if (t.needs(x)) {
                auto& dx = t.grad_buf(x);
                for (std::size_t r = 0; r < rows; ++r) {
                    T mean_dxh = 0, mean_dxh_xh = 0;
                    for (std::size_t j = 0; j < n; ++j) {
                        const T dxh = dy[r * n + j] * G.data[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[r * n + j];
                    }
                    mean_dxh /= static_cast<T>(n);
                    mean_dxh_xh /= static_cast<T>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                        const T dxh = dy[r * n + j] * G.data[j];
                        dx[r * n + j] += is[r] * (dxh - mean_dxh - xh[r * n + j] * mean_dxh_xh);
                    }
                }
            }
        });
        return o;
    }

    Var softmax_rows(Var a) {
        Var o = push(medgrad::softmax(val(a)), needs(a));
        if (needs(o)) record([a, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& y = t.val(o);
            const std::size_t n = y.shape.back();
            const std::size_t rows = y.size() / n;
            auto& da = t.grad_buf(a);
            for (std::size_t r = 0; r < rows; ++r) {
                T s = 0;
                for (std::size_t j = 0; j < n; ++j) s += dy[r * n + j] * y.data[r * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    da[r * n + j] += y.data[r * n + j] * (dy[r * n + j] - s);
            }
        });
        return o;
    }

    Var l2_normalize_rows(Var a) {
        const auto& A = val(a);
        const std::size_t n = A.shape.back();
        const std::size_t rows = A.size() / n;
        std::vector<T> inv_norm(rows);
        Tensor<T> out = A;
        for (std::size_t r = 0; r < rows; ++r) {
            const T nrm = norm2(A.data.data() + r * n, n);
            if (!(static_cast<double>(nrm) > kNormEps))
                throw DegenerateInputError("l2_normalize: zero-norm row " + std::to_string(r));
            inv_norm[r] = T(1) / nrm;
            for (std::size_t j = 0; j < n; ++j) out.data[r * n + j] *= inv_norm[r];
        }
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o, rows, n, in = std::move(inv_norm)](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& y = t.val(o);
            auto& da = t.grad_buf(a);
            for (std::size_t r = 0; r < rows; ++r) {
                T s = 0;
                for (std::size_t j = 0; j < n; ++j) s += dy[r * n + j] * y.data[r * n + j];
                for (std::size_t j = 0; j < n; ++j)
                    da[r * n + j] += in[r] * (dy[r * n + j] - y.data[r * n + j] * s);
            }
        });
        return o;
    }

    Var transpose(Var a) {
        Var o = push(medgrad::transpose(val(a)), needs(a));
        if (needs(o)) record([a, o](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            const auto& Y = t.val(o);
            const std::size_t m = Y.shape[0], n = Y.shape[1];  // out is m x n, in is n x m
            auto& da = t.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) da[i + j * m] += dy[i * n + j];
        });
        return o;
    }

    // out[r] = a[index[r]]; duplicate indices accumulate on backward.
    Var gather_rows(Var a, std::vector<std::size_t> index) {
        const auto& A = val(a);
        const std::size_t n = A.shape.back();
        const std::size_t rows = A.size() / n;
        Tensor<T> out({index.size(), n});
        for (std::size_t r = 0; r < index.size(); ++r) {
            if (index[r] >= rows)
                throw IndexError("gather_rows: index " + std::to_string(index[r]) +
                                 " out of range [0, " + std::to_string(rows) + ")");
            std::copy_n(A.data.data() + index[r] * n, n, out.data.data() + r * n);
        }
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o, n, idx = std::move(index)](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            auto& da = t.grad_buf(a);
            for (std::size_t r = 0; r < idx.size(); ++r)
                for (std::size_t j = 0; j < n; ++j) da[idx[r] * n + j] += dy[r * n + j];
        });
        return o;
    }

    Var slice_cols(Var a, std::size_t start, std::size_t count) {
        const auto& A = val(a);
        const std::size_t m = A.rows(), n = A.cols();
        if (start + count > n)
            throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                                 std::to_string(start + count) + ") exceeds " + std::to_string(n));
        Tensor<T> out({m, count});
        for (std::size_t i = 0; i < m; ++i)
            std::copy_n(A.data.data() + i * n + start, count, out.data.data() + i * count);
        Var o = push(std::move(out), needs(a));
        if (needs(o)) record([a, o, start, count, m, n](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            auto& da = t.grad_buf(a);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < count; ++j)
                    da[i * n + start + j] += dy[i * count + j];
        });
        return o;
    }

    Var concat_cols(std::span<const Var> parts) {
        if (parts.empty()) throw ContractError("concat_cols: no inputs");
        const std::size_t m = val(parts[0]).rows();
        std::size_t total = 0;
        bool any = false;
        for (Var p : parts) {
            if (val(p).rows() != m)
                throw DimensionError("concat_cols: row count mismatch");
            total += val(p).cols();
            any = any || needs(p);
        }
        Tensor<T> out({m, total});
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& P = val(p);
            const std::size_t n = P.cols();
            for (std::size_t i = 0; i < m; ++i)
                std::copy_n(P.data.data() + i * n, n, out.data.data() + i * total + off);
            off += n;
        }
        Var o = push(std::move(out), any);
        if (needs(o)) record([o, m, total, ps = std::vector<Var>(parts.begin(), parts.end())](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            std::size_t off2 = 0;
            for (Var p : ps) {
                const std::size_t n = t.val(p).cols();
                if (t.needs(p)) {
                    auto& dp = t.grad_buf(p);
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t j = 0; j < n; ++j)
                            dp[i * n + j] += dy[i * total + off2 + j];
                }
                off2 += n;
            }
        });
        return o;
    }

    Var concat_rows(std::span<const Var> parts) {
        if (parts.empty()) throw ContractError("concat_rows: no inputs");
        const std::size_t n = val(parts[0]).cols();
        std::size_t total = 0;
        bool any = false;
        for (Var p : parts) {
            if (val(p).cols() != n)
                throw DimensionError("concat_rows: column count mismatch");
            total += val(p).rows();
            any = any || needs(p);
        }
        Tensor<T> out({total, n});
        std::size_t off = 0;
        for (Var p : parts) {
            const auto& P = val(p);
            std::copy_n(P.data.data(), P.size(), out.data.data() + off * n);
            off += P.rows();
        }
        Var o = push(std::move(out), any);
        if (needs(o)) record([o, n, ps = std::vector<Var>(parts.begin(), parts.end())](Tape& t) {
            const auto& dy = t.grads_[o.idx];
            std::size_t off2 = 0;
            for (Var p : ps) {
                const std::size_t rows = t.val(p).rows();
                if (t.needs(p)) {
                    auto& dp = t.grad_buf(p);
                    for (std::size_t i = 0; i < rows * n; ++i) dp[i] += dy[off2 * n + i];
                }
                off2 += rows;
            }
        });
        return o;
    }

    Var sum(Var a) {
        T s = 0;
        for (T v : val(a).data) s += v;
        Var o = push(Tensor<T>::scalar(s), needs(a));
        if (needs(o)) record([a, o](Tape& t) {
            const T dy = t.grads_[o.idx][0];
            auto& da = t.grad_buf(a);
            for (auto& g : da) g += dy;
        });
        return o;
    }

    Var mean(Var a) {
        const std::size_t n = val(a).size();
        T s = 0;
        for (T v : val(a).data) s += v;
        Var o = push(Tensor<T>::scalar(s / static_cast<T>(n)), needs(a));
        if (needs(o)) record([a, o, n](Tape& t) {
            const T dy = t.grads_[o.idx][0] / static_cast<T>(n);
            auto& da = t.grad_buf(a);
            for (auto& g : da) g += dy;
        });
        return o;
    }

    // Mean over rows of -log softmax(logits)[target]; max-subtracted.
    Var cross_entropy_rows(Var logits, std::vector<std::size_t> targets) {
        const auto& L = val(logits);
        const std::size_t k = L.shape.back();
        const std::size_t batch = L.size() / k;
        if (targets.size() != batch)
            throw ContractError("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for batch " + std::to_string(batch));
        for (auto t : targets)
            if (t >= k)
                throw IndexError("cross_entropy: target " + std::to_string(t) +
                                 " out of range [0, " + std::to_string(k) + ")");
        std::vector<T> probs(L.size());
        T total = 0;
        for (std::size_t b = 0; b < batch; ++b) {
            const T* row = L.data.data() + b * k;
            T mx = row[0];
            for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, row[i]);
            T sum = 0;
            for (std::size_t i = 0; i < k; ++i) {
                probs[b * k + i] = std::exp(row[i] - mx);
                sum += probs[b * k + i];
            }
            for (std::size_t i = 0; i < k; ++i) probs[b * k + i] /= sum;
            total += mx + std::log(sum) - row[targets[b]];
        }
        Var o = push(Tensor<T>::scalar(total / static_cast<T>(batch)), needs(logits));
        if (needs(o)) record([logits, o, k, batch, p = std::move(probs),
                              tg = std::move(targets)](Tape& t) {
            const T dy = t.grads_[o.idx][0] / static_cast<T>(batch);
            auto& dl = t.grad_buf(logits);
            for (std::size_t b = 0; b < batch; ++b)
                for (std::size_t i = 0; i < k; ++i) {
                    const T onehot = (i == tg[b]) ? T(1) : T(0);
                    dl[b * k + i] += dy * (p[b * k + i] - onehot);
                }
        });
        return o;
    }

    // Cosine similarity of two equal-length tensors viewed as flat vectors.
    Var cosine(Var a, Var b) {
        const auto& A = val(a);
        const auto& B = val(b);
        if (A.size() != B.size())
            throw DimensionError("cosine: length mismatch " + shape_str(A.shape) + " vs " +
                                 shape_str(B.shape));
        const T na = norm2(A.data.data(), A.size());
        const T nb = norm2(B.data.data(), B.size());
        if (!(static_cast<double>(na) > kNormEps) || !(static_cast<double>(nb) > kNormEps))
            throw DegenerateInputError("cosine: zero vector");
        const T s = dot(A.data, B.data) / (na * nb);
        Var o = push(Tensor<T>::scalar(s), needs(a) || needs(b));
        if (needs(o)) record([a, b, o, na, nb, s](Tape& t) {
            const T dy = t.grads_[o.idx][0];
            const auto& A2 = t.val(a);
            const auto& B2 = t.val(b);
            if (t.needs(a)) {
                auto& da = t.grad_buf(a);
                for (std::size_t i = 0; i < A2.size(); ++i)
                    da[i] += dy * (B2.data[i] / (na * nb) - s * A2.data[i] / (na * na));
            }
            if (t.needs(b)) {
                auto& db = t.grad_buf(b);
                for (std::size_t i = 0; i < B2.size(); ++i)
                    db[i] += dy * (A2.data[i] / (na * nb) - s * B2.data[i] / (nb * nb));
            }
        });
        return o;
    }

    // ---- backward -------------------------------------------------------

    void backward(Var loss) {
        if (val(loss).size() != 1)
            throw ContractError("backward: loss must be scalar, got " +
                                shape_str(val(loss).shape));
        backward_from(loss, {T(1)});
    }

    // Seeded backward from an arbitrary node (internal building block).
    void backward_from(Var node, std::vector<T> seed) {
        if (seed.size() != val(node).size())
            throw ContractError("backward_from: seed size mismatch");
        grad_buf(node);
        auto& g = grads_[node.idx];
        for (std::size_t i = 0; i < seed.size(); ++i) g[i] += seed[i];
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            if (!grads_[it->out].empty()) it->fn(*this);
        }
        for (auto& [owner, v] : params_) {
            if (grads_[v.idx].empty()) continue;
            owner->ensure_grad();
            const auto& src = grads_[v.idx];
            for (std::size_t i = 0; i < src.size(); ++i) owner->grad[i] += src[i];
        }
    }

private:
    struct Node {
        std::uint32_t out;
        std::function<void(Tape&)> fn;
    };

    const Tensor<T>& val(Var v) const { return values_[v.idx]; }
    bool needs(Var v) const { return needs_[v.idx] != 0; }

    std::vector<T>& grad_buf(Var v) {
        auto& g = grads_[v.idx];
        if (g.empty()) g.assign(values_[v.idx].size(), T(0));
        return g;
    }

    void axpy(Var v, const std::vector<T>& dy) {
        auto& g = grad_buf(v);
        for (std::size_t i = 0; i < dy.size(); ++i) g[i] += dy[i];
    }

    Var push(Tensor<T> value, bool needs_grad) {
        values_.push_back(std::move(value));
        grads_.emplace_back();
        needs_.push_back(needs_grad ? 1 : 0);
        return Var{static_cast<std::uint32_t>(values_.size() - 1)};
    }

    void record(std::function<void(Tape&)> fn) {
        nodes_.push_back({static_cast<std::uint32_t>(values_.size() - 1), std::move(fn)});
    }

    std::vector<Tensor<T>> values_;
    std::vector<std::vector<T>> grads_;
    std::vector<char> needs_;
    std::vector<Node> nodes_;
    std::vector<std::pair<Tensor<T>*, Var>> params_;
};

using Tapef = Tape<float>;
using Taped = Tape<double>;

}  // namespace medgrad
