#ifndef SEACO_TENSOR_HPP
#define SEACO_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace seaco {

// Dense row-major tensor of doubles. The only numeric currency in the project.
struct Tensor {
    std::vector<size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<size_t> s, double fill = 0.0)
        : shape(std::move(s)), data(count(shape), fill) {}

    static size_t count(const std::vector<size_t>& s) {
        size_t n = 1;
        for (size_t d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<size_t> s) { return Tensor(std::move(s)); }

    static Tensor scalar(double v) {
        Tensor t({1});
        t.data[0] = v;
        return t;
    }

    static Tensor from_rows(const std::vector<std::vector<double>>& rows) {
        size_t r = rows.size();
        size_t c = r ? rows[0].size() : 0;
        Tensor t({r, c});
        for (size_t i = 0; i < r; ++i) {
            if (rows[i].size() != c) throw std::invalid_argument("from_rows: ragged input");
            for (size_t j = 0; j < c; ++j) t.data[i * c + j] = rows[i][j];
        }
        return t;
    }

    static Tensor identity(size_t n) {
        Tensor t({n, n});
        for (size_t i = 0; i < n; ++i) t.data[i * n + i] = 1.0;
        return t;
    }

    size_t size() const { return data.size(); }
    size_t ndim() const { return shape.size(); }
    size_t dim(size_t i) const { return shape.at(i); }
    size_t rows() const { return shape.at(0); }
    size_t cols() const { return shape.at(1); }

    double& at(size_t i) { return data[i]; }
    double at(size_t i) const { return data[i]; }
    double& at2(size_t r, size_t c) { return data[r * cols() + c]; }
    double at2(size_t r, size_t c) const { return data[r * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "(";
        for (size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + ")";
    }
};

}  // namespace seaco

#endif
