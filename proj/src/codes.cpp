#include "hadseg/codes.hpp"

#include <bit>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hadseg/error.hpp"

namespace hadseg::codes {

namespace {

void require_length(const Codebook& cb, std::size_t len) {
  if (len != cb.n()) {
    throw ShapeError("vector length " + std::to_string(len) +
                     " does not match code length " + std::to_string(cb.n()));
  }
}

// Rows packed into 64-bit words, bit set where the entry is -1.
std::vector<std::uint64_t> pack_rows(const Codebook& cb, std::size_t& words) {
  const std::size_t n = cb.n();
  words = (n + 63) / 64;
  std::vector<std::uint64_t> packed(n * words, 0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = cb.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      if (row[c] < 0) packed[r * words + c / 64] |= std::uint64_t{1} << (c % 64);
    }
  }
  return packed;
}

}  // namespace

Codebook::Codebook(int k, std::shared_ptr<const std::vector<std::int8_t>> matrix)
    : k_(k),
      n_(std::size_t{1} << k),
      num_classes_(std::size_t{1} << k),
      matrix_(std::move(matrix)) {}

Codebook Codebook::with_num_classes(std::size_t num_classes) const {
  if (num_classes < 1 || num_classes > n_) {
    throw CapacityError("class count " + std::to_string(num_classes) +
                        " outside [1, " + std::to_string(n_) + "] for k=" +
                        std::to_string(k_));
  }
  Codebook copy = *this;
  copy.num_classes_ = num_classes;
  return copy;
}

Codebook sylvester(int k) {
  if (k < 0 || k > kMaxOrderExponent) {
    throw CapacityError("order exponent k=" + std::to_string(k) +
                        " outside supported range [0, " +
                        std::to_string(kMaxOrderExponent) + "]");
  }
  const std::size_t n = std::size_t{1} << k;
  auto m = std::make_shared<std::vector<std::int8_t>>(n * n);
  (*m)[0] = 1;
  // H_{2s} = [[H_s, H_s], [H_s, -H_s]], built in place inside the n x n array.
  for (std::size_t s = 1; s < n; s *= 2) {
    for (std::size_t r = 0; r < s; ++r) {
      for (std::size_t c = 0; c < s; ++c) {
        const std::int8_t v = (*m)[r * n + c];
        (*m)[r * n + c + s] = v;
        (*m)[(r + s) * n + c] = v;
        (*m)[(r + s) * n + c + s] = static_cast<std::int8_t>(-v);
      }
    }
  }
  return Codebook(k, std::move(m));
}

Codebook sylvester(int k, std::size_t num_classes) {
  return sylvester(k).with_num_classes(num_classes);
}

void fwht_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  if (!std::has_single_bit(n)) {
    throw ShapeError("fast transform length " + std::to_string(n) +
                     " is not a power of two");
  }
  for (std::size_t h = 1; h < n; h *= 2) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

std::vector<double> fwht_apply(const Codebook& cb, std::span<const double> v) {
  require_length(cb, v.size());
  std::vector<double> out(v.begin(), v.end());
  fwht_inplace(out);
  return out;
}

std::vector<double> dense_apply(const Codebook& cb, std::span<const double> v) {
  require_length(cb, v.size());
  const std::size_t n = cb.n();
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = cb.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
  return out;
}

Codeword encode_class(const Codebook& cb, std::size_t class_index) {
  if (class_index >= cb.num_classes()) {
    throw ClassIndexError("class index " + std::to_string(class_index) +
                          " outside [0, " + std::to_string(cb.num_classes()) +
                          ")");
  }
  auto row = cb.row(class_index);
  return Codeword{std::vector<int>(row.begin(), row.end()), class_index};
}

std::size_t decode_correlation(const Codebook& cb, std::span<const double> v) {
  const auto corr = fwht_apply(cb, v);
  std::size_t best = 0;
  for (std::size_t j = 1; j < cb.num_classes(); ++j) {
    if (corr[j] > corr[best]) best = j;
  }
  return best;
}

std::size_t hamming_distance(const Codebook& cb, std::size_t a, std::size_t b) {
  if (a >= cb.n() || b >= cb.n()) {
    throw ClassIndexError("row index outside the codebook");
  }
  auto ra = cb.row(a);
  auto rb = cb.row(b);
  std::size_t d = 0;
  for (std::size_t c = 0; c < cb.n(); ++c) d += ra[c] != rb[c];
  return d;
}

std::size_t min_pairwise_distance(const Codebook& cb) {
  if (cb.k() < 1) {
    throw CapacityError("pairwise distance needs at least two rows (k >= 1)");
  }
  std::size_t words = 0;
  const auto packed = pack_rows(cb, words);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t a = 0; a < cb.n(); ++a) {
    for (std::size_t b = a + 1; b < cb.n(); ++b) {
      std::size_t d = 0;
      for (std::size_t w = 0; w < words; ++w) {
        d += std::popcount(packed[a * words + w] ^ packed[b * words + w]);
      }
      best = std::min(best, d);
    }
  }
  return best;
}

std::vector<std::string> verify_invariants(const Codebook& cb) {
  std::vector<std::string> failures;
  const std::size_t n = cb.n();
  for (auto e : cb.matrix()) {
    if (e != 1 && e != -1) {
      failures.emplace_back("entry outside {-1,+1}");
      break;
    }
  }
  for (std::size_t i = 0; i < n && failures.empty(); ++i) {
    if (cb.entry(0, i) != 1 || cb.entry(i, 0) != 1) {
      failures.emplace_back("first row/column not all +1");
    }
  }
  bool symmetric = true;
  for (std::size_t r = 0; r < n && symmetric; ++r) {
    for (std::size_t c = r + 1; c < n; ++c) {
      if (cb.entry(r, c) != cb.entry(c, r)) {
        symmetric = false;
        break;
      }
    }
  }
  if (!symmetric) failures.emplace_back("matrix not symmetric");

  // <r_a, r_b> = n - 2 d(a, b) for +-1 rows, so one pass over packed rows
  // covers both H H^T = n I and the half-length distance property.
  std::size_t words = 0;
  const auto packed = pack_rows(cb, words);
  bool orthogonal = true;
  bool distance_ok = true;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      std::size_t d = 0;
      for (std::size_t w = 0; w < words; ++w) {
        d += std::popcount(packed[a * words + w] ^ packed[b * words + w]);
      }
      if (2 * d != n) {
        orthogonal = false;
        distance_ok = false;
      }
    }
  }
  if (!orthogonal) failures.emplace_back("H H^T != n I");
  if (!distance_ok) failures.emplace_back("row distance != n/2");
  if (cb.num_classes() < 1 || cb.num_classes() > n) {
    failures.emplace_back("class count outside [1, n]");
  }
  return failures;
}

void write_csv(std::ostream& os, const Codebook& cb) {
  for (std::size_t r = 0; r < cb.n(); ++r) {
    auto row = cb.row(r);
    for (std::size_t c = 0; c < cb.n(); ++c) {
      if (c) os << ',';
      os << static_cast<int>(row[c]);
    }
    os << '\n';
  }
}

Codebook read_csv(std::istream& is) {
  std::vector<std::vector<int>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<int> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell == "1" || cell == "+1") {
        row.push_back(1);
      } else if (cell == "-1") {
        row.push_back(-1);
      } else {
        throw FormatError("codebook csv line " + std::to_string(rows.size() + 1) +
                          ": entry '" + cell + "' is not +-1");
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw FormatError("codebook csv has " + std::to_string(n) +
                      " rows; expected a power of two");
  }
  const int k = std::countr_zero(n);
  if (k > kMaxOrderExponent) throw FormatError("codebook csv too large");
  Codebook cb = sylvester(k);
  for (std::size_t r = 0; r < n; ++r) {
    if (rows[r].size() != n) {
      throw FormatError("codebook csv row " + std::to_string(r + 1) + " has " +
                        std::to_string(rows[r].size()) + " entries, expected " +
                        std::to_string(n));
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (rows[r][c] != cb.entry(r, c)) {
        throw FormatError("codebook csv is not the Sylvester matrix of order " +
                          std::to_string(n) + " (first mismatch at row " +
                          std::to_string(r) + ", column " + std::to_string(c) +
                          ")");
      }
    }
  }
  return cb;
}

}  // namespace hadseg::codes
