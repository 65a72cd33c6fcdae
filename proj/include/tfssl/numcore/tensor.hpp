#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tfssl::numcore {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major double tensor. The last axis is contiguous.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor FromList(std::initializer_list<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<std::size_t> idx);
  double at(std::initializer_list<std::size_t> idx) const;

  // Same data, new shape; element counts must agree.
  Tensor Reshaped(Shape shape) const;
  void Reshape(Shape shape);

  void Fill(double v);
  bool AllFinite() const;
  double Sum() const;
  double MaxAbs() const;

  // Stride (in elements) of an axis.
  std::size_t Stride(std::size_t axis) const;

 private:
  std::size_t Offset(std::initializer_list<std::size_t> idx) const;

  Shape shape_;
  std::vector<double> data_;
};

using TensorMap = std::map<std::string, Tensor>;

// Scalar helpers used by tests and numerical oracles.
double MaxAbsDiff(const Tensor& a, const Tensor& b);
// max |a - b| / max |b|, the norm-wise relative error against reference b.
double RelativeError(const Tensor& a, const Tensor& reference);

}  // namespace tfssl::numcore
