#include "tfssl/numcore/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "tfssl/error.hpp"

namespace tfssl {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid_argument";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kData: return "data";
  }
  return "unknown";
}

}  // namespace tfssl

namespace tfssl::numcore {

std::size_t NumElements(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  Require(NumElements(shape_) == data_.size(), ErrorKind::kShape,
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + ShapeString(shape_));
}

Tensor Tensor::FromList(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::Offset(std::initializer_list<std::size_t> idx) const {
  Require(idx.size() == shape_.size(), ErrorKind::kShape, "index rank mismatch");
  std::size_t off = 0;
  std::size_t axis = 0;
  for (auto i : idx) {
    Require(i < shape_[axis], ErrorKind::kShape, "index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> idx) {
  return data_[Offset(idx)];
}

double Tensor::at(std::initializer_list<std::size_t> idx) const {
  return data_[Offset(idx)];
}

Tensor Tensor::Reshaped(Shape shape) const {
  Tensor t = *this;
  t.Reshape(std::move(shape));
  return t;
}

void Tensor::Reshape(Shape shape) {
  Require(NumElements(shape) == data_.size(), ErrorKind::kShape,
          "cannot reshape " + ShapeString(shape_) + " to " + ShapeString(shape));
  shape_ = std::move(shape);
}

void Tensor::Fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::AllFinite() const {
  // Exponent bits all set means Inf or NaN; the integer form vectorizes.
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double v : data_) bad |= (std::bit_cast<std::uint64_t>(v) & kExp) == kExp;
  return bad == 0;
}

double Tensor::Sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Tensor::MaxAbs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::size_t Tensor::Stride(std::size_t axis) const {
  std::size_t s = 1;
  for (std::size_t a = axis + 1; a < shape_.size(); ++a) s *= shape_[a];
  return s;
}

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  Require(a.size() == b.size(), ErrorKind::kShape, "size mismatch in MaxAbsDiff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double RelativeError(const Tensor& a, const Tensor& reference) {
  const double scale = reference.MaxAbs();
  const double diff = MaxAbsDiff(a, reference);
  if (scale == 0.0) return diff;
  return diff / scale;
}

}  // namespace tfssl::numcore
