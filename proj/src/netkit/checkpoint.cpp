#include "hadseg/netkit/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hadseg/error.hpp"

namespace hadseg::netkit {

namespace {

constexpr const char* kMagicLine = "hadseg-checkpoint 1";

std::string to_text(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

const std::string& meta_value(const TensorArchive& a, const std::string& key) {
  auto it = a.meta.find(key);
  if (it == a.meta.end()) throw FormatError("checkpoint missing meta key '" + key + "'");
  return it->second;
}

std::size_t meta_size(const TensorArchive& a, const std::string& key) {
  const std::string& v = meta_value(a, key);
  try {
    return static_cast<std::size_t>(std::stoull(v));
  } catch (const std::exception&) {
    throw FormatError("checkpoint meta '" + key + "' is not an integer: " + v);
  }
}

}  // namespace

void write_archive(const std::filesystem::path& dir, const TensorArchive& archive) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  std::ofstream blob(dir / "tensors.bin", std::ios::binary);
  if (!manifest || !blob) throw DataError("cannot write checkpoint in " + dir.string());
  manifest << kMagicLine << "\n";
  for (const auto& [k, v] : archive.meta) manifest << "meta " << k << ' ' << v << "\n";
  std::uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    manifest << "tensor " << t.name << ' ' << offset << ' ' << t.value.rank();
    for (auto d : t.value.shape()) manifest << ' ' << d;
    manifest << "\n";
    std::string bytes(t.value.size() * 8, '\0');
    for (std::size_t i = 0; i < t.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(t.value[i]);
      for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    blob.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    offset += bytes.size();
  }
}

TensorArchive read_archive(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.txt");
  if (!manifest) throw FormatError("no checkpoint manifest in " + dir.string());
  std::ifstream blob(dir / "tensors.bin", std::ios::binary);
  if (!blob) throw FormatError("no tensors.bin in " + dir.string());
  const std::string bytes((std::istreambuf_iterator<char>(blob)), std::istreambuf_iterator<char>());

  TensorArchive a;
  std::string line;
  if (!std::getline(manifest, line) || line != kMagicLine) {
    throw FormatError(dir.string() + ": bad checkpoint header");
  }
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls >> std::ws, value);
      a.meta[key] = value;
    } else if (kind == "tensor") {
      NamedTensor t;
      std::uint64_t offset = 0;
      std::size_t rank = 0;
      if (!(ls >> t.name >> offset >> rank) || rank > 8) {
        throw FormatError("malformed tensor line: " + line);
      }
      Shape shape(rank);
      for (auto& d : shape) {
        if (!(ls >> d)) throw FormatError("malformed tensor line: " + line);
      }
      const std::size_t count = shape_size(shape);
      if (offset + count * 8 > bytes.size()) {
        throw FormatError("tensor " + t.name + " extends past the end of tensors.bin");
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
          bits |= static_cast<std::uint64_t>(
                      static_cast<unsigned char>(bytes[offset + i * 8 + b]))
                  << (8 * b);
        }
        values[i] = std::bit_cast<double>(bits);
      }
      t.value = Tensor(std::move(shape), std::move(values));
      a.tensors.push_back(std::move(t));
    } else {
      throw FormatError("unknown checkpoint line: " + line);
    }
  }
  return a;
}

void save_generator(const std::filesystem::path& dir, const Generator& gen,
                    std::size_t num_classes) {
  TensorArchive a;
  const auto& c = gen.config;
  a.meta["model"] = "generator";
  a.meta["input_channels"] = std::to_string(c.input_channels);
  a.meta["depth"] = std::to_string(c.depth);
  a.meta["base_channels"] = std::to_string(c.base_channels);
  a.meta["code_bits"] = std::to_string(c.code_bits);
  a.meta["head"] = std::string(head_name(c.head));
  a.meta["head_scale"] = to_text(c.head_scale);
  a.meta["num_classes"] = std::to_string(num_classes);
  for (NodeId id : gen.graph.parameters()) {
    a.tensors.push_back({gen.graph.name(id), gen.graph.value(id)});
  }
  write_archive(dir, a);
}

LoadedGenerator load_generator(const std::filesystem::path& dir) {
  const TensorArchive a = read_archive(dir);
  if (meta_value(a, "model") != "generator") {
    throw FormatError(dir.string() + " does not hold a generator");
  }
  GeneratorConfig cfg;
  cfg.input_channels = meta_size(a, "input_channels");
  cfg.depth = meta_size(a, "depth");
  cfg.base_channels = meta_size(a, "base_channels");
  cfg.code_bits = static_cast<int>(meta_size(a, "code_bits"));
  cfg.head = parse_head(meta_value(a, "head"));
  cfg.head_scale = std::stod(meta_value(a, "head_scale"));

  LoadedGenerator out{build_generator(cfg), meta_size(a, "num_classes")};
  Graph& g = out.generator.graph;
  if (a.tensors.size() != g.parameters().size()) {
    throw FormatError("checkpoint holds " + std::to_string(a.tensors.size()) +
                      " tensors, model expects " + std::to_string(g.parameters().size()));
  }
  for (const auto& t : a.tensors) {
    const auto id = g.find_parameter(t.name);
    if (!id) throw FormatError("checkpoint tensor " + t.name + " not in model");
    if (g.value(*id).shape() != t.value.shape()) {
      throw FormatError("checkpoint tensor " + t.name + " has shape " +
                        shape_string(t.value.shape()) + ", model expects " +
                        shape_string(g.value(*id).shape()));
    }
    g.mutable_value(*id) = t.value;
  }
  return out;
}

}  // namespace hadseg::netkit
