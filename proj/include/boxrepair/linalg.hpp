#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace boxrepair {

using Vector = std::vector<double>;

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> &data() { return data_; }
    const std::vector<double> &data() const { return data_; }

    /// this * x
    Vector apply(std::span<const double> x) const;
    /// this^T * y
    Vector apply_transposed(std::span<const double> y) const;
    /// this * other
    Matrix matmul(const Matrix &other) const;

    bool operator==(const Matrix &) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Axis-aligned box; lower == upper on a dimension pins it to a single value.
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;
    Box(Vector lo, Vector hi);

    static Box point(const Vector &x);
    /// l-infinity ball of the given radius around center.
    static Box around(const Vector &center, double radius);

    std::size_t dim() const { return lower.size(); }
    Vector center() const;
    Vector widths() const;
    bool contains(std::span<const double> x, double tol = 0.0) const;
    bool is_point() const;

    bool operator==(const Box &) const = default;
};

double dot(std::span<const double> a, std::span<const double> b);

/// min over x in box of a.x + b, taken corner-wise per coordinate.
double affine_min_over_box(std::span<const double> a, double b, const Box &box);

/// Maximizer of a.x over the box; coordinates with a_i == 0 take the box midpoint.
Vector affine_argmax_over_box(std::span<const double> a, const Box &box);

/// Coordinate-wise clamp of x into the box.
Vector project_onto_box(std::span<const double> x, const Box &box);

/// l_p norm for p >= 1; pass kInfNorm for the max norm.
double lp_norm(std::span<const double> x, double p);

Vector sub(std::span<const double> a, std::span<const double> b);
bool all_finite(std::span<const double> x);

} // namespace boxrepair
