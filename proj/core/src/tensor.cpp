#include "mcn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "mcn/errors.hpp"

namespace mcn {

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Vec Tensor2::row(std::size_t r) const {
  if (r >= rows_) throw DimensionError("row " + std::to_string(r) + " out of range for " + shape_str());
  return Vec(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
             data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_));
}

void Tensor2::set_row(std::size_t r, const Vec& values) {
  if (r >= rows_) throw DimensionError("row " + std::to_string(r) + " out of range for " + shape_str());
  if (values.size() != cols_) {
    throw DimensionError("row of length " + std::to_string(values.size()) +
                         " does not fit " + shape_str());
  }
  std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

void Tensor2::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor2::all_finite() const { return mcn::all_finite(data_); }

std::string Tensor2::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Vec matvec(const Tensor2& w, const Vec& x) {
  if (w.cols() != x.size()) {
    throw DimensionError("matvec: " + w.shape_str() + " times vector of length " +
                         std::to_string(x.size()));
  }
  Vec out(w.rows(), 0.0);
  const double* wp = w.raw().data();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    const double* row = wp + r * w.cols();
    for (std::size_t c = 0; c < w.cols(); ++c) acc += row[c] * x[c];
    out[r] = acc;
  }
  return out;
}

Vec matvec_transposed(const Tensor2& w, const Vec& y) {
  if (w.rows() != y.size()) {
    throw DimensionError("matvec_transposed: " + w.shape_str() +
                         " transposed times vector of length " + std::to_string(y.size()));
  }
  Vec out(w.cols(), 0.0);
  const double* wp = w.raw().data();
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    const double* row = wp + r * w.cols();
    for (std::size_t c = 0; c < w.cols(); ++c) out[c] += row[c] * yr;
  }
  return out;
}

void add_outer(Tensor2& acc, const Vec& a, const Vec& b) {
  if (acc.rows() != a.size() || acc.cols() != b.size()) {
    throw DimensionError("add_outer: " + acc.shape_str() + " vs " + std::to_string(a.size()) +
                         "x" + std::to_string(b.size()));
  }
  double* ap = acc.raw().data();
  for (std::size_t r = 0; r < a.size(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = ap + r * b.size();
    for (std::size_t c = 0; c < b.size(); ++c) row[c] += ar * b[c];
  }
}

void add_to(Vec& acc, const Vec& x) {
  if (acc.size() != x.size()) throw DimensionError("add_to: length mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
}

void add_scaled(Vec& acc, const Vec& x, double scale) {
  if (acc.size() != x.size()) throw DimensionError("add_scaled: length mismatch");
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * x[i];
}

Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("sub: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("squared_distance: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

bool all_finite(const Vec& x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace mcn
