#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hadseg::codes {

inline constexpr int kMaxOrderExponent = 16;

/// Sylvester Hadamard matrix of order n = 2^k with the first `num_classes`
/// rows designated as class codewords. Immutable; copies share storage.
class Codebook {
 public:
  int k() const noexcept { return k_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  int entry(std::size_t row, std::size_t col) const {
    return (*matrix_)[row * n_ + col];
  }
  std::span<const std::int8_t> row(std::size_t r) const {
    return {matrix_->data() + r * n_, n_};
  }
  std::span<const std::int8_t> matrix() const { return *matrix_; }

  /// Same matrix, different count of active classes (1 <= K <= n).
  Codebook with_num_classes(std::size_t num_classes) const;

  friend Codebook sylvester(int k);

 private:
  Codebook(int k, std::shared_ptr<const std::vector<std::int8_t>> matrix);

  int k_ = 0;
  std::size_t n_ = 1;
  std::size_t num_classes_ = 1;
  std::shared_ptr<const std::vector<std::int8_t>> matrix_;
};

struct Codeword {
  std::vector<int> values;
  std::size_t class_index = 0;
};

/// Builds H_{2^k} by block doubling from H_1 = [1]. Throws CapacityError
/// for k outside [0, kMaxOrderExponent].
Codebook sylvester(int k);
Codebook sylvester(int k, std::size_t num_classes);

/// In-place butterfly transform in natural (Sylvester) order: v <- H v.
/// v.size() must be a power of two.
void fwht_inplace(std::span<double> v);

/// H v through the fast transform.
std::vector<double> fwht_apply(const Codebook& cb, std::span<const double> v);

/// H v through the explicit n^2 product. Kept as the reference path.
std::vector<double> dense_apply(const Codebook& cb, std::span<const double> v);

Codeword encode_class(const Codebook& cb, std::size_t class_index);

/// argmax over active classes of <row_j, v>; ties go to the lowest index.
std::size_t decode_correlation(const Codebook& cb, std::span<const double> v);

/// Number of positions where rows a and b differ.
std::size_t hamming_distance(const Codebook& cb, std::size_t a, std::size_t b);

/// Exact minimum over all distinct row pairs. Requires k >= 1.
std::size_t min_pairwise_distance(const Codebook& cb);

/// Invariant check used by the CLI. Returns a list of violated properties;
/// empty when the codebook is sound.
std::vector<std::string> verify_invariants(const Codebook& cb);

/// One matrix row per line, comma separated +-1 integers.
void write_csv(std::ostream& os, const Codebook& cb);

/// Parses the CSV form and checks it is exactly a Sylvester matrix
/// (the fast transform depends on natural ordering). Throws FormatError.
Codebook read_csv(std::istream& is);

}  // namespace hadseg::codes
