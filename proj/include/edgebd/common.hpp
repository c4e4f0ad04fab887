#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ebd {

using node_t = std::size_t;

struct Edge {
    node_t from = 0;
    node_t to = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Dense row-major N x N matrix of values.
template <class T>
class Square {
public:
    Square() = default;
    explicit Square(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    T& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    std::span<const T> values() const noexcept { return data_; }

    friend bool operator==(const Square&, const Square&) = default;

private:
    std::size_t n_ = 0;
    std::vector<T> data_;
};

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) noexcept {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

inline double log_sum_exp(std::span<const double> xs) noexcept {
    double hi = neg_inf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == neg_inf) return neg_inf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

}  // namespace ebd
