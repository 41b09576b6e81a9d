#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mcn {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit reals. Weight matrices, activations and
/// frame-feature blocks all live in this one type; vectors are 1xN tensors
/// where a uniform parameter view is needed.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return at(r, c); }
  double operator()(std::size_t r, std::size_t c) const { return at(r, c); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  Vec& raw() { return data_; }
  const Vec& raw() const { return data_; }

  Vec row(std::size_t r) const;
  void set_row(std::size_t r, const Vec& values);

  void fill(double value);
  bool same_shape(const Tensor2& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const;

  std::string shape_str() const;

  bool operator==(const Tensor2& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vec data_;
};

/// W (out x in) times x, no bias.
Vec matvec(const Tensor2& w, const Vec& x);
/// W^T times y.
Vec matvec_transposed(const Tensor2& w, const Vec& y);
/// acc += a * b^T (outer product).
void add_outer(Tensor2& acc, const Vec& a, const Vec& b);

void add_to(Vec& acc, const Vec& x);
void add_scaled(Vec& acc, const Vec& x, double scale);
Vec sub(const Vec& a, const Vec& b);
double dot(const Vec& a, const Vec& b);
double squared_distance(const Vec& a, const Vec& b);
bool all_finite(const Vec& x);

}  // namespace mcn
