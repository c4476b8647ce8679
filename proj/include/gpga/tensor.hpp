#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "gpga/error.hpp"
#include "gpga/rng.hpp"

namespace gpga {

// Dense n-dimensional array of doubles, row-major.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        require(numel(shape) == data.size(), "tensor: shape/data size mismatch");
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = numel(s);
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor full(std::vector<std::size_t> s, double v) {
        std::size_t n = numel(s);
        return Tensor(std::move(s), std::vector<double>(n, v));
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return data.size() == 1; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool operator==(const Tensor& a, const Tensor& b) { return a.shape == b.shape && a.data == b.data; }

// i.i.d. samples in [lo, hi); rng advanced deterministically.
inline Tensor uniform_noise(std::vector<std::size_t> shape, double lo, double hi, RngState& rng) {
    require(lo < hi, "uniform_noise: lo must be < hi");
    Tensor t = Tensor::zeros(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

// sign with sign(0) = 0.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline Tensor sign(const Tensor& t) {
    Tensor r = t;
    for (auto& v : r.data) v = sign0(v);
    return r;
}

inline void clamp_inplace(Tensor& t, double lo, double hi) {
    for (auto& v : t.data) v = v < lo ? lo : (v > hi ? hi : v);
}

inline double linf_dist(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

inline double l1_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += std::fabs(v);
    return s;
}

inline double l2_norm(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

inline double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

inline std::size_t argmax(const double* v, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (v[j] > v[best]) best = j;
    return best;
}

}  // namespace gpga
