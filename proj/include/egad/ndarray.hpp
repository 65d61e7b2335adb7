#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace egad {

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& shape);

// Dense n-dimensional float64 array, row-major. The one value type carried
// through layers, gradients, optimizer state and checkpoints.
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(Shape shape);                       // zero-filled
  NdArray(Shape shape, std::vector<double> values);    // takes ownership

  static NdArray scalar(double v);
  static NdArray full(Shape shape, double v);
  static NdArray zeros_like(const NdArray& other);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double& at(std::int64_t r, std::int64_t c);
  double at(std::int64_t r, std::int64_t c) const;

  void fill(double v);
  bool same_shape(const NdArray& other) const { return shape_ == other.shape_; }

  // Same data, new shape; element count must match.
  NdArray reshaped(Shape shape) const;

  bool all_finite() const;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::int64_t shape_size(const Shape& shape);

// Throws ShapeError naming both shapes.
void check_same_shape(const NdArray& a, const NdArray& b, const char* what);

}  // namespace egad
