#include "hadseg/data.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hadseg/error.hpp"

namespace hadseg::data {

namespace {

constexpr std::array<char, 4> kLabelMagic{'S', 'E', 'G', 'L'};
constexpr std::array<char, 4> kImageMagic{'S', 'E', 'G', 'I'};
constexpr std::uint8_t kFormatVersion = 1;
constexpr int kPlacementAttempts = 200;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct Box {
  int r0, c0, r1, c1;  // inclusive

  bool overlaps(const Box& o, int margin) const {
    return !(r1 + margin < o.r0 || o.r1 + margin < r0 || c1 + margin < o.c0 ||
             o.c1 + margin < c0);
  }
};

enum class Primitive { kRect, kCircle, kTriangle };

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - f * s), t = v * (1 - (1 - f) * s);
  switch (static_cast<int>(i) % 6) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

Rgb class_colour(std::size_t cls, std::size_t num_classes) {
  const double hue = static_cast<double>(cls - 1) / static_cast<double>(num_classes - 1);
  // Alternate brightness so neighbouring hues stay apart for large K.
  const double value = cls % 2 ? 0.95 : 0.75;
  return hsv_to_rgb(hue, 0.85, value);
}

double edge(double ax, double ay, double bx, double by, double px, double py) {
  return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
}

bool inside(Primitive prim, const Box& b, int orientation, int r, int c) {
  const double y = r + 0.5, x = c + 0.5;
  const double top = b.r0, left = b.c0, bottom = b.r1 + 1.0, right = b.c1 + 1.0;
  switch (prim) {
    case Primitive::kRect:
      return true;
    case Primitive::kCircle: {
      const double cy = (top + bottom) / 2, cx = (left + right) / 2;
      const double ry = (bottom - top) / 2, rx = (right - left) / 2;
      const double dy = (y - cy) / ry, dx = (x - cx) / rx;
      return dx * dx + dy * dy <= 1.0;
    }
    case Primitive::kTriangle: {
      std::array<std::array<double, 2>, 3> v;
      switch (orientation) {
        case 0: v = {{{left, bottom}, {right, bottom}, {(left + right) / 2, top}}}; break;
        case 1: v = {{{left, top}, {right, top}, {(left + right) / 2, bottom}}}; break;
        case 2: v = {{{left, top}, {left, bottom}, {right, (top + bottom) / 2}}}; break;
        default: v = {{{right, top}, {right, bottom}, {left, (top + bottom) / 2}}}; break;
      }
      const double e0 = edge(v[0][0], v[0][1], v[1][0], v[1][1], x, y);
      const double e1 = edge(v[1][0], v[1][1], v[2][0], v[2][1], x, y);
      const double e2 = edge(v[2][0], v[2][1], v[0][0], v[0][1], x, y);
      return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
    }
  }
  return false;
}

Sample make_sample(std::uint64_t seed, std::size_t index, std::size_t size,
                   std::size_t num_classes) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(index)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int sz = static_cast<int>(size);

  Sample s;
  std::ostringstream id;
  id << "sample_" << std::setw(6) << std::setfill('0') << index;
  s.id = id.str();
  s.image = Tensor({size, size, 3});
  s.labels = LabelMap(size, size, 0);

  // Low-saturation textured background.
  const double base = 0.25 + 0.1 * unit(rng);
  for (std::size_t p = 0; p < size * size; ++p) {
    const double grey = base + 0.06 * noise(rng);
    for (std::size_t ch = 0; ch < 3; ++ch) {
      s.image[p * 3 + ch] = grey + 0.02 * noise(rng);
    }
  }

  const int shapes = 1 + static_cast<int>(rng() % 4);
  std::vector<Box> placed;
  for (int i = 0; i < shapes; ++i) {
    int max_extent = std::max(4, sz / 3);
    const int min_extent = std::max(3, sz / 8);
    bool ok = false;
    Box box{};
    for (int attempt = 0; attempt < kPlacementAttempts && !ok; ++attempt) {
      if (attempt > 0 && attempt % 50 == 0) {
        max_extent = std::max(min_extent, max_extent * 3 / 4);
      }
      const int span = max_extent - min_extent + 1;
      const int h = min_extent + static_cast<int>(rng() % span);
      const int w = min_extent + static_cast<int>(rng() % span);
      const int r0 = static_cast<int>(rng() % static_cast<std::uint64_t>(sz - h + 1));
      const int c0 = static_cast<int>(rng() % static_cast<std::uint64_t>(sz - w + 1));
      box = {r0, c0, r0 + h - 1, c0 + w - 1};
      ok = std::none_of(placed.begin(), placed.end(),
                        [&](const Box& o) { return box.overlaps(o, 1); });
    }
    if (!ok) {
      throw DataError("could not place shape " + std::to_string(i) + " of sample " +
                      std::to_string(index) + " after " +
                      std::to_string(kPlacementAttempts) + " attempts");
    }
    placed.push_back(box);

    const auto prim = static_cast<Primitive>(rng() % 3);
    const int orientation = static_cast<int>(rng() % 4);
    const auto cls = static_cast<std::uint32_t>(1 + rng() % (num_classes - 1));
    const Rgb colour = class_colour(cls, num_classes);
    const double jitter[3] = {0.04 * noise(rng), 0.04 * noise(rng), 0.04 * noise(rng)};
    const double fill[3] = {colour.r + jitter[0], colour.g + jitter[1], colour.b + jitter[2]};

    std::size_t covered = 0;
    for (int r = box.r0; r <= box.r1; ++r) {
      for (int c = box.c0; c <= box.c1; ++c) {
        if (!inside(prim, box, orientation, r, c)) continue;
        const std::size_t p = static_cast<std::size_t>(r) * size + static_cast<std::size_t>(c);
        s.labels.labels()[p] = cls;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          s.image[p * 3 + ch] = fill[ch] + 0.05 * noise(rng);
        }
        ++covered;
      }
    }
    if (covered == 0) {
      // Degenerate raster; mark the box centre so the class is present.
      const std::size_t p = static_cast<std::size_t>((box.r0 + box.r1) / 2) * size +
                            static_cast<std::size_t>((box.c0 + box.c1) / 2);
      s.labels.labels()[p] = cls;
      for (std::size_t ch = 0; ch < 3; ++ch) s.image[p * 3 + ch] = fill[ch];
    }
  }
  for (double& v : s.image.data()) v = std::clamp(v, 0.0, 1.0);
  return s;
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                     static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(std::string(what) + ": truncated header");
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void read_header(std::istream& is, const std::array<char, 4>& magic, const char* what,
                 std::uint32_t& height, std::uint32_t& width) {
  std::array<char, 4> m{};
  if (!is.read(m.data(), 4)) throw FormatError(std::string(what) + ": truncated header");
  if (m != magic) throw FormatError(std::string(what) + ": bad magic bytes");
  char version = 0;
  if (!is.get(version)) throw FormatError(std::string(what) + ": truncated header");
  if (static_cast<std::uint8_t>(version) != kFormatVersion) {
    throw FormatError(std::string(what) + ": unsupported version " +
                      std::to_string(static_cast<int>(static_cast<std::uint8_t>(version))));
  }
  height = get_u32(is, what);
  width = get_u32(is, what);
  // Guard against absurd sizes from corrupt headers before allocating.
  if (static_cast<std::uint64_t>(height) * width > (std::uint64_t{1} << 28)) {
    throw FormatError(std::string(what) + ": implausible dimensions");
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return is;
}

}  // namespace

std::vector<Sample> gen_synthetic(std::uint64_t seed, std::size_t count,
                                  std::size_t size, std::size_t num_classes) {
  if (size < 16) throw ConfigError("synthetic image size must be >= 16");
  if (num_classes < 2 || num_classes > 256) {
    throw ConfigError("synthetic class count must be in [2, 256]");
  }
  std::vector<Sample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_sample(seed, i, size, num_classes));
  }
  return out;
}

void write_label_map(std::ostream& os, const LabelMap& lm) {
  if (lm.max_label() >= 256) {
    throw ClassIndexError("label map contains labels >= 256; not representable");
  }
  os.write(kLabelMagic.data(), 4);
  os.put(static_cast<char>(kFormatVersion));
  put_u32(os, static_cast<std::uint32_t>(lm.height()));
  put_u32(os, static_cast<std::uint32_t>(lm.width()));
  std::string bytes(lm.size(), '\0');
  for (std::size_t i = 0; i < lm.size(); ++i) {
    bytes[i] = static_cast<char>(lm.labels()[i]);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LabelMap read_label_map(std::istream& is) {
  std::uint32_t h = 0, w = 0;
  read_header(is, kLabelMagic, "label map", h, w);
  std::string bytes(static_cast<std::size_t>(h) * w, '\0');
  if (!is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError("label map: truncated body");
  }
  std::vector<std::uint32_t> labels(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    labels[i] = static_cast<unsigned char>(bytes[i]);
  }
  return LabelMap(h, w, std::move(labels));
}

void write_label_map(const std::filesystem::path& path, const LabelMap& lm) {
  auto os = open_out(path);
  write_label_map(os, lm);
}

LabelMap read_label_map(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_label_map(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_image(std::ostream& os, const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw ShapeError("image must be [H, W, 3], got " + shape_string(image.shape()));
  }
  os.write(kImageMagic.data(), 4);
  os.put(static_cast<char>(kFormatVersion));
  put_u32(os, static_cast<std::uint32_t>(image.dim(0)));
  put_u32(os, static_cast<std::uint32_t>(image.dim(1)));
  std::string bytes(image.size() * 8, '\0');
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(image[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Tensor read_image(std::istream& is) {
  std::uint32_t h = 0, w = 0;
  read_header(is, kImageMagic, "image", h, w);
  Tensor image({h, w, 3});
  std::string bytes(image.size() * 8, '\0');
  if (!is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw FormatError("image: truncated body");
  }
  for (std::size_t i = 0; i < image.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    image[i] = std::bit_cast<double>(bits);
  }
  return image;
}

void write_image(const std::filesystem::path& path, const Tensor& image) {
  auto os = open_out(path);
  write_image(os, image);
}

Tensor read_image(const std::filesystem::path& path) {
  auto is = open_in(path);
  try {
    return read_image(is);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

EncodedTargets encode_targets(const LabelMap& lm, const codes::Codebook& cb) {
  lm.validate(cb.num_classes());
  const std::size_t n = cb.n();
  EncodedTargets t{Tensor({lm.height(), lm.width(), n}),
                   Tensor({lm.height(), lm.width(), n})};
  for (std::size_t p = 0; p < lm.size(); ++p) {
    const std::size_t cls = lm.labels()[p];
    t.one_hot[p * n + cls] = 1.0;
    auto row = cb.row(cls);
    for (std::size_t j = 0; j < n; ++j) t.hadamard[p * n + j] = row[j];
  }
  return t;
}

void write_dataset(const std::filesystem::path& dir,
                   const std::vector<Sample>& samples, std::size_t num_classes) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) throw DataError("cannot write manifest in " + dir.string());
  manifest << "hadseg-dataset 1\n";
  manifest << "classes " << num_classes << "\n";
  manifest << "count " << samples.size() << "\n";
  for (const auto& s : samples) {
    write_image(dir / (s.id + ".img"), s.image);
    write_label_map(dir / (s.id + ".segl"), s.labels);
    manifest << s.id << "\n";
  }
}

std::size_t manifest_class_count(const std::filesystem::path& dir) {
  std::ifstream is(dir / "manifest.txt");
  if (!is) return 0;
  std::string key;
  std::size_t value = 0;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    if (ls >> key >> value && key == "classes") return value;
  }
  return 0;
}

std::vector<Sample> ingest_index_maps(const std::filesystem::path& dir,
                                      std::size_t num_classes) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError(dir.string() + " is not a directory");
  }
  std::map<std::string, std::pair<bool, bool>> pairs;  // id -> (img, segl)
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    const auto stem = entry.path().stem().string();
    if (ext == ".img") pairs[stem].first = true;
    if (ext == ".segl") pairs[stem].second = true;
  }
  std::vector<std::string> unpaired;
  for (const auto& [id, flags] : pairs) {
    if (!flags.first) unpaired.push_back(id + ".segl");
    if (!flags.second) unpaired.push_back(id + ".img");
  }
  if (!unpaired.empty()) {
    std::string list;
    for (const auto& f : unpaired) list += (list.empty() ? "" : ", ") + f;
    throw DataError("unpaired files in " + dir.string() + ": " + list);
  }
  std::vector<Sample> samples;
  for (const auto& [id, flags] : pairs) {
    Sample s;
    s.id = id;
    s.image = read_image(dir / (id + ".img"));
    s.labels = read_label_map(dir / (id + ".segl"));
    if (s.labels.height() != s.image.dim(0) || s.labels.width() != s.image.dim(1)) {
      throw DataError(id + ": image and label dimensions differ");
    }
    try {
      s.labels.validate(num_classes);
    } catch (const ClassIndexError& e) {
      throw ClassIndexError((dir / (id + ".segl")).string() + ": " + e.what());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

Tensor stack_images(const std::vector<const Sample*>& batch) {
  if (batch.empty()) throw ShapeError("cannot stack an empty batch");
  const Shape& one = batch.front()->image.shape();
  Tensor out({batch.size(), one[0], one[1], one[2]});
  const std::size_t stride = shape_size(one);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    require_same_shape(batch[b]->image, batch.front()->image, "stack_images");
    std::copy(batch[b]->image.data().begin(), batch[b]->image.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(b * stride));
  }
  return out;
}

}  // namespace hadseg::data
