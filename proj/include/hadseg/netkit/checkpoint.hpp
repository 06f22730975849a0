#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hadseg/netkit/models.hpp"

namespace hadseg::netkit {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Named-tensor container: `manifest.txt` (text) + `tensors.bin` (raw
/// little-endian f64, concatenated in manifest order).
///
/// manifest.txt:
///   hadseg-checkpoint 1
///   meta <key> <value>          (zero or more)
///   tensor <name> <byte-offset> <rank> <d0> ... <d{rank-1}>
struct TensorArchive {
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;
};

void write_archive(const std::filesystem::path& dir, const TensorArchive& archive);
TensorArchive read_archive(const std::filesystem::path& dir);

struct LoadedGenerator {
  Generator generator;
  std::size_t num_classes = 0;
};

void save_generator(const std::filesystem::path& dir, const Generator& gen,
                    std::size_t num_classes);
LoadedGenerator load_generator(const std::filesystem::path& dir);

}  // namespace hadseg::netkit
