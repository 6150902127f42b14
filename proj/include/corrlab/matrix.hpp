#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace corrlab {

// Dense row-major matrix of doubles. The workhorse container for batches of
// observations, latent codes and network parameters.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    double* row_ptr(std::size_t r) { return data.data() + r * cols; }
    const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

    std::span<double> row(std::size_t r) { return {row_ptr(r), cols}; }
    std::span<const double> row(std::size_t r) const { return {row_ptr(r), cols}; }

    bool same_shape(const Matrix& other) const { return rows == other.rows && cols == other.cols; }
};

// Row-major integer matrix, used for discrete factor labels (rows = samples,
// cols = factors).
struct LabelMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> data;

    LabelMatrix() = default;
    LabelMatrix(std::size_t r, std::size_t c, int fill = 0) : rows(r), cols(c), data(r * c, fill) {}

    int& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    int at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::vector<int> column(std::size_t c) const {
        if (c >= cols) throw std::out_of_range("LabelMatrix: column out of range");
        std::vector<int> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * cols + c];
        return out;
    }
};

}  // namespace corrlab
