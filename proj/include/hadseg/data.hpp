#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hadseg/codes.hpp"
#include "hadseg/metrics.hpp"
#include "hadseg/tensor.hpp"

namespace hadseg::data {

using metrics::LabelMap;

struct Sample {
  std::string id;
  Tensor image;  // [H, W, 3], values in [0, 1]
  LabelMap labels;
};

/// Training targets for one label map: one-hot over n channels and the
/// +-1 codeword of each pixel's class.
struct EncodedTargets {
  Tensor one_hot;   // [H, W, n]
  Tensor hadamard;  // [H, W, n]
};

/// Noisy class-0 background with 1..4 non-overlapping rectangles, circles
/// and triangles. Each shape takes a class in [1, K) and a fill colour tied
/// to that class. Sample i depends only on (seed, i).
/// Requires size >= 16 and 2 <= K <= 256.
std::vector<Sample> gen_synthetic(std::uint64_t seed, std::size_t count,
                                  std::size_t size, std::size_t num_classes);

// .segl: "SEGL", u8 version=1, u32 height, u32 width (LE), then H*W bytes.
void write_label_map(std::ostream& os, const LabelMap& lm);
LabelMap read_label_map(std::istream& is);
void write_label_map(const std::filesystem::path& path, const LabelMap& lm);
LabelMap read_label_map(const std::filesystem::path& path);

// .img: "SEGI", u8 version=1, u32 height, u32 width (LE), then H*W*3 f64 LE.
void write_image(std::ostream& os, const Tensor& image);
Tensor read_image(std::istream& is);
void write_image(const std::filesystem::path& path, const Tensor& image);
Tensor read_image(const std::filesystem::path& path);

EncodedTargets encode_targets(const LabelMap& lm, const codes::Codebook& cb);

/// Writes <id>.img / <id>.segl pairs plus manifest.txt.
void write_dataset(const std::filesystem::path& dir,
                   const std::vector<Sample>& samples, std::size_t num_classes);

/// Loads every <id>.img / <id>.segl pair in `dir`, sorted by id. Unpaired
/// files raise DataError listing them; labels >= num_classes raise
/// ClassIndexError naming the file.
std::vector<Sample> ingest_index_maps(const std::filesystem::path& dir,
                                      std::size_t num_classes);

/// Reads the class count recorded by write_dataset, or 0 when absent.
std::size_t manifest_class_count(const std::filesystem::path& dir);

/// Stacks images into [N, H, W, 3].
Tensor stack_images(const std::vector<const Sample*>& batch);

}  // namespace hadseg::data
