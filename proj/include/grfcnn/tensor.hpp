#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace grfcnn {

using Shape = std::vector<std::size_t>;

std::string ShapeToString(const Shape& shape);

// Dense row-major array of doubles.
//
// A default-constructed Tensor is "empty": it has no shape and no data and is
// used as a placeholder (e.g. an unfilled activation cache). Every non-empty
// tensor has rank >= 1, all dimensions >= 1, and size() == product(shape).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  // Builds a rank-2 tensor from nested rows; all rows must have equal length.
  static Tensor Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Vector(std::initializer_list<double> values);

  bool empty() const noexcept { return shape_.empty(); }
  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  // Row-major flat index of a full multi-index. Throws ShapeError when the
  // index has the wrong rank or is out of range.
  std::size_t FlatIndex(std::span<const std::size_t> index) const;

  template <typename... I>
  double& operator()(I... idx) {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    return data_[FlatIndex(index)];
  }
  template <typename... I>
  double operator()(I... idx) const {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    return data_[FlatIndex(index)];
  }

  // Same data under a new shape with the same element count.
  Tensor Reshaped(Shape shape) const&;
  Tensor Reshaped(Shape shape) &&;

  void Fill(double value);
  bool AllFinite() const;

  friend bool operator==(const Tensor& a, const Tensor& b) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::size_t ShapeProduct(const Shape& shape);

}  // namespace grfcnn
