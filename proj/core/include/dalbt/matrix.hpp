#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dalbt {

// Row-major matrix of doubles; rows are samples in batched code.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }

    std::span<const double> row(int r) const {
        return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<double> row(int r) {
        return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    void set_row(int r, std::span<const double> values) {
        auto dst = row(r);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = values[i];
    }
};

} // namespace dalbt
