#include "egad/ndarray.hpp"

#include <cmath>
#include <sstream>

#include "egad/errors.hpp"

namespace egad {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::int64_t shape_size(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

NdArray::NdArray(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

NdArray::NdArray(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_size(shape_) != static_cast<std::int64_t>(data_.size())) {
    throw ShapeError("shape " + shape_str(shape_) + " does not match " + std::to_string(data_.size()) +
                     " values");
  }
}

NdArray NdArray::scalar(double v) { return NdArray({1}, {v}); }

NdArray NdArray::full(Shape shape, double v) {
  NdArray a(std::move(shape));
  a.fill(v);
  return a;
}

NdArray NdArray::zeros_like(const NdArray& other) { return NdArray(other.shape_); }

double& NdArray::at(std::int64_t r, std::int64_t c) {
  return data_[static_cast<std::size_t>(r * shape_[1] + c)];
}

double NdArray::at(std::int64_t r, std::int64_t c) const {
  return data_[static_cast<std::size_t>(r * shape_[1] + c)];
}

void NdArray::fill(double v) {
  for (auto& x : data_) x = v;
}

NdArray NdArray::reshaped(Shape shape) const {
  if (shape_size(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return NdArray(std::move(shape), data_);
}

bool NdArray::all_finite() const {
  // A NaN or Inf anywhere poisons the sum.
  double acc = 0.0;
  for (double v : data_) acc += v;
  if (std::isfinite(acc)) return true;
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void check_same_shape(const NdArray& a, const NdArray& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

}  // namespace egad
