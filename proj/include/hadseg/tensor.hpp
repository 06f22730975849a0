#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace hadseg {

using Shape = std::vector<std::size_t>;

/// Allocator returning 64-byte aligned blocks. Vectorised kernels take
/// alignment-dependent code paths, so fixed alignment keeps results
/// bit-identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedBuffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Image-like tensors use channels-last
/// layout ([N,] H, W, C) throughout the library.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::initializer_list<std::size_t> index);
  double at(std::initializer_list<std::size_t> index) const;

  void fill(double value);
  /// Reinterprets the data under a new shape with the same element count.
  void reshape(Shape shape);

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const;

  Shape shape_;
  AlignedBuffer data_;
};

/// Throws ShapeError naming `what` unless both shapes are identical.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// Joins two tensors along the last axis; leading extents must agree.
Tensor concat_last_axis(const Tensor& a, const Tensor& b);

/// Channels [begin, end) of the last axis.
Tensor slice_last_axis(const Tensor& t, std::size_t begin, std::size_t end);

/// Stacks equally shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& items);

}  // namespace hadseg
