#include "hadseg/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "hadseg/error.hpp"

namespace hadseg {

std::string_view error_class_name(ErrorClass c) {
  switch (c) {
    case ErrorClass::kShape: return "shape";
    case ErrorClass::kCapacity: return "capacity";
    case ErrorClass::kClassIndex: return "class-index";
    case ErrorClass::kConfig: return "config";
    case ErrorClass::kFormat: return "format";
    case ErrorClass::kData: return "data";
    case ErrorClass::kMetric: return "metric";
    case ErrorClass::kNumeric: return "numeric";
  }
  return "unknown";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " +
                     std::to_string(shape_.size()));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) {
      throw ShapeError("index out of range on axis " + std::to_string(axis));
    }
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(index)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " +
                     shape_string(shape));
  }
  shape_ = std::move(shape);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + shape_string(a.shape()) +
                     " vs " + shape_string(b.shape()));
  }
}

Tensor concat_last_axis(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin(), a.shape().end() - 1, b.shape().begin())) {
    throw ShapeError("cannot concatenate " + shape_string(a.shape()) + " and " +
                     shape_string(b.shape()) + " along the last axis");
  }
  const std::size_t ca = a.shape().back(), cb = b.shape().back();
  Shape shape = a.shape();
  shape.back() = ca + cb;
  Tensor out(shape);
  const std::size_t rows = ca ? a.size() / ca : b.size() / cb;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(r * ca), ca,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * (ca + cb)));
    std::copy_n(b.data().begin() + static_cast<std::ptrdiff_t>(r * cb), cb,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * (ca + cb) + ca));
  }
  return out;
}

Tensor slice_last_axis(const Tensor& t, std::size_t begin, std::size_t end) {
  if (t.rank() == 0 || begin > end || end > t.shape().back()) {
    throw ShapeError("invalid channel slice [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") of " + shape_string(t.shape()));
  }
  const std::size_t c = t.shape().back(), w = end - begin;
  Shape shape = t.shape();
  shape.back() = w;
  Tensor out(shape);
  const std::size_t rows = t.size() / c;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(t.data().begin() + static_cast<std::ptrdiff_t>(r * c + begin), w,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * w));
  }
  return out;
}

Tensor stack(const std::vector<Tensor>& items) {
  if (items.empty()) throw ShapeError("cannot stack an empty list");
  Shape shape = items.front().shape();
  shape.insert(shape.begin(), items.size());
  Tensor out(shape);
  const std::size_t stride = items.front().size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    require_same_shape(items[i], items.front(), "stack");
    std::copy(items[i].data().begin(), items[i].data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

}  // namespace hadseg
