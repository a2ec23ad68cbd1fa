#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "medgrad/errors.hpp"

namespace medgrad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major n-d array. Owns its data; `grad`, when non-empty, has the
// same length as `data`.
template <typename T>
struct Tensor {
    Shape shape;
    std::vector<T> data;
    bool requires_grad = false;
    std::vector<T> grad;

    Tensor() = default;

    explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), T(0)) {
        check_dims();
    }

    Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if (shape_numel(shape) != data.size())
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
        check_dims();
    }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    static Tensor full(Shape s, T v) {
        Tensor t(std::move(s));
        for (auto& x : t.data) x = v;
        return t;
    }

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const {
        if (shape.size() != 2) throw DimensionError("rows() needs a 2-d tensor, got " + shape_str(shape));
        return shape[0];
    }
    std::size_t cols() const {
        if (shape.size() != 2) throw DimensionError("cols() needs a 2-d tensor, got " + shape_str(shape));
        return shape[1];
    }

    T& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    T at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(data.size(), T(0));
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }

private:
    void check_dims() const {
        for (auto d : shape)
            if (d == 0) throw DimensionError("zero-sized dimension in shape " + shape_str(shape));
    }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace medgrad
