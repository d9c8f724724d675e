#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "drugrec/matrix.hpp"

namespace drugrec {

// Cluster x drug matrix of mean CUR scores with a rating-existence mask.
// Values are only meaningful where the mask is 1; unobserved cells hold 0.
struct SparseRatingMatrix {
    Matrix values;
    std::vector<std::uint8_t> mask;
    // Ratings averaged into each cell.
    std::vector<std::size_t> counts;
    // Targets are CUR scores in [0, 1]; multiply by this for display.
    double display_scale = 10.0;

    SparseRatingMatrix() = default;
    SparseRatingMatrix(std::size_t rows, std::size_t cols)
        : values(rows, cols), mask(rows * cols, 0), counts(rows * cols, 0) {}

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }

    bool observed(std::size_t r, std::size_t c) const { return mask[r * cols() + c] != 0; }
    double value(std::size_t r, std::size_t c) const { return values(r, c); }

    void set(std::size_t r, std::size_t c, double v) {
        values(r, c) = v;
        mask[r * cols() + c] = 1;
    }

    std::size_t observed_count() const {
        std::size_t n = 0;
        for (auto m : mask) n += m;
        return n;
    }
};

}  // namespace drugrec
