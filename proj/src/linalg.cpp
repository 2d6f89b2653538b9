#include "boxrepair/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace boxrepair {

namespace {

void require_same(std::size_t a, std::size_t b, const char *what)
{
    if (a != b)
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                                    std::to_string(b) + ")");
}

} // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill)
{
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows_ * cols_)
        throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) + " does not match " +
                                    std::to_string(rows_) + "x" + std::to_string(cols_));
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        m(i, i) = 1.0;
    return m;
}

Vector Matrix::apply(std::span<const double> x) const
{
    require_same(x.size(), cols_, "Matrix::apply");
    Vector out(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double *w = data_.data() + r * cols_;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols_; ++c)
            acc += w[c] * x[c];
        out[r] = acc;
    }
    return out;
}

Vector Matrix::apply_transposed(std::span<const double> y) const
{
    require_same(y.size(), rows_, "Matrix::apply_transposed");
    Vector out(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        const double yr = y[r];
        if (yr == 0.0)
            continue;
        const double *w = data_.data() + r * cols_;
        for (std::size_t c = 0; c < cols_; ++c)
            out[c] += yr * w[c];
    }
    return out;
}

Matrix Matrix::matmul(const Matrix &other) const
{
    require_same(cols_, other.rows_, "Matrix::matmul");
    Matrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
        double *o = out.data_.data() + i * other.cols_;
        for (std::size_t k = 0; k < cols_; ++k) {
            const double a = data_[i * cols_ + k];
            if (a == 0.0)
                continue;
            const double *b = other.data_.data() + k * other.cols_;
            for (std::size_t j = 0; j < other.cols_; ++j)
                o[j] += a * b[j];
        }
    }
    return out;
}

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi))
{
    require_same(lower.size(), upper.size(), "Box");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!(lower[i] <= upper[i]))
            throw std::invalid_argument("Box: lower > upper at dimension " + std::to_string(i));
    }
}

Box Box::point(const Vector &x) { return Box(x, x); }

Box Box::around(const Vector &center, double radius)
{
    if (!(radius >= 0.0))
        throw std::invalid_argument("Box::around: negative radius");
    Vector lo(center.size()), hi(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) {
        lo[i] = center[i] - radius;
        hi[i] = center[i] + radius;
    }
    return Box(std::move(lo), std::move(hi));
}

Vector Box::center() const
{
    Vector c(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

Vector Box::widths() const
{
    Vector w(dim());
    for (std::size_t i = 0; i < dim(); ++i)
        w[i] = upper[i] - lower[i];
    return w;
}

bool Box::contains(std::span<const double> x, double tol) const
{
    if (x.size() != dim())
        return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (x[i] < lower[i] - tol || x[i] > upper[i] + tol)
            return false;
    }
    return true;
}

bool Box::is_point() const { return lower == upper; }

double dot(std::span<const double> a, std::span<const double> b)
{
    require_same(a.size(), b.size(), "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += a[i] * b[i];
    return acc;
}

double affine_min_over_box(std::span<const double> a, double b, const Box &box)
{
    require_same(a.size(), box.dim(), "affine_min_over_box");
    double acc = b;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::min(a[i] * box.lower[i], a[i] * box.upper[i]);
    return acc;
}

Vector affine_argmax_over_box(std::span<const double> a, const Box &box)
{
    require_same(a.size(), box.dim(), "affine_argmax_over_box");
    Vector x(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] > 0.0)
            x[i] = box.upper[i];
        else if (a[i] < 0.0)
            x[i] = box.lower[i];
        else
            x[i] = 0.5 * (box.lower[i] + box.upper[i]);
    }
    return x;
}

Vector project_onto_box(std::span<const double> x, const Box &box)
{
    require_same(x.size(), box.dim(), "project_onto_box");
    Vector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = std::clamp(x[i], box.lower[i], box.upper[i]);
    return out;
}

double lp_norm(std::span<const double> x, double p)
{
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : x)
            m = std::max(m, std::abs(v));
        return m;
    }
    if (p == 2.0) {
        double acc = 0.0;
        for (double v : x)
            acc += v * v;
        return std::sqrt(acc);
    }
    if (p == 1.0) {
        double acc = 0.0;
        for (double v : x)
            acc += std::abs(v);
        return acc;
    }
    // Scale by the max entry so large p does not overflow.
    double m = 0.0;
    for (double v : x)
        m = std::max(m, std::abs(v));
    if (m == 0.0)
        return 0.0;
    double acc = 0.0;
    for (double v : x)
        acc += std::pow(std::abs(v) / m, p);
    return m * std::pow(acc, 1.0 / p);
}

Vector sub(std::span<const double> a, std::span<const double> b)
{
    require_same(a.size(), b.size(), "sub");
    Vector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = a[i] - b[i];
    return out;
}

bool all_finite(std::span<const double> x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace boxrepair
