#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace srmcts {

/// Dense real matrix stored column-major: each input variable is one contiguous column.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows)
    {
        const std::size_t n = rows.size();
        const std::size_t d = n == 0 ? 0 : rows.front().size();
        Matrix m(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            if (rows[i].size() != d) throw std::invalid_argument("ragged rows");
            for (std::size_t j = 0; j < d; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

    std::span<const double> col(std::size_t j) const noexcept
    {
        return {data_.data() + j * rows_, rows_};
    }
    std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }

    Matrix select_rows(std::span<const std::size_t> idx) const
    {
        Matrix m(idx.size(), cols_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t k = 0; k < idx.size(); ++k) m(k, j) = (*this)(idx[k], j);
        return m;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

} // namespace srmcts
