#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mvqa {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major array of doubles. Rank 0 (scalar), 1 (vector) and 2
// (matrix) are the only ranks the library produces.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);
  static Tensor matrix(
      std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Leading extent for matrices, 1 for vectors and scalars.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  // Trailing extent, 1 for scalars.
  std::size_t cols() const { return rank() == 0 ? 1 : shape_.back(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols(), cols());
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }

  const std::vector<double>& values() const { return data_; }

  void fill(double value);
  // data += other, shapes must match.
  void accumulate(const Tensor& other);

  // Bitwise equality of shape and data.
  bool operator==(const Tensor& other) const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Positional validity flags for a padded sequence.
class Mask {
 public:
  Mask() = default;
  explicit Mask(std::size_t length, bool valid = true);
  explicit Mask(std::vector<bool> valid) : valid_(std::move(valid)) {}

  // First `count` positions valid, the rest padding.
  static Mask prefix(std::size_t length, std::size_t count);

  std::size_t length() const { return valid_.size(); }
  bool operator[](std::size_t i) const { return valid_[i]; }
  void set(std::size_t i, bool v) { valid_[i] = v; }
  std::size_t count() const;
  bool any() const { return count() > 0; }
  bool operator==(const Mask& other) const = default;

 private:
  std::vector<bool> valid_;
};

}  // namespace mvqa
