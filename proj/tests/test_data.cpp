#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "hadseg/codes.hpp"
#include "hadseg/data.hpp"
#include "hadseg/error.hpp"
#include "hadseg/layer.hpp"
#include "hadseg/metrics.hpp"
#include "scratch_dir.hpp"

namespace hadseg::data {
namespace {

LabelMap random_map(std::mt19937_64& rng, std::size_t k) {
  LabelMap lm(1 + rng() % 9, 1 + rng() % 9);
  for (auto& l : lm.labels()) l = static_cast<std::uint32_t>(rng() % k);
  return lm;
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

TEST(Synthetic, TwoClassSampleHasBothClasses) {
  const auto s = gen_synthetic(5, 1, 32, 2);
  ASSERT_EQ(s.size(), 1u);
  const std::set<std::uint32_t> seen(s[0].labels.labels().begin(), s[0].labels.labels().end());
  EXPECT_EQ(seen, (std::set<std::uint32_t>{0, 1}));
  EXPECT_EQ(s[0].image.shape(), (Shape{32, 32, 3}));
}

TEST(Synthetic, DeterministicAndIndexLocal) {
  const auto a = gen_synthetic(42, 6, 32, 5);
  const auto b = gen_synthetic(42, 6, 32, 5);
  const auto prefix = gen_synthetic(42, 3, 32, 5);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].labels, b[i].labels);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(a[i].image, prefix[i].image);
  EXPECT_NE(gen_synthetic(43, 1, 32, 5)[0].image, a[0].image);
}

TEST(Synthetic, ImagesInRangeAndBackgroundDominates) {
  const auto samples = gen_synthetic(3, 20, 64, 8);
  std::size_t background = 0, total = 0;
  for (const auto& s : samples) {
    for (double v : s.image.data()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
    for (auto l : s.labels.labels()) background += l == 0;
    total += s.labels.size();
  }
  EXPECT_GT(background * 2, total);
}

TEST(Synthetic, EveryForegroundClassIsCommon) {
  const auto samples = gen_synthetic(1, 200, 64, 8);
  std::vector<std::size_t> present(8, 0);
  for (const auto& s : samples) {
    const std::set<std::uint32_t> seen(s.labels.labels().begin(), s.labels.labels().end());
    for (auto c : seen) ++present[c];
  }
  for (std::size_t c = 1; c < 8; ++c) EXPECT_GE(present[c], 10u) << "class " << c;
}

TEST(Synthetic, RejectsBadArguments) {
  EXPECT_THROW(gen_synthetic(0, 1, 8, 4), ConfigError);
  EXPECT_THROW(gen_synthetic(0, 1, 32, 1), ConfigError);
  EXPECT_THROW(gen_synthetic(0, 1, 32, 300), ConfigError);
}

TEST(LabelFormat, ZeroMapByteLayout) {
  std::ostringstream os;
  write_label_map(os, LabelMap(2, 3));
  const std::string bytes = os.str();
  ASSERT_EQ(bytes.size(), 19u);
  EXPECT_EQ(bytes.substr(0, 4), "SEGL");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes.substr(5, 4), std::string("\x02\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(9, 4), std::string("\x03\x00\x00\x00", 4));
  EXPECT_EQ(bytes.substr(13), std::string(6, '\0'));
}

TEST(LabelFormat, RandomRoundTrips) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto lm = random_map(rng, 256);
    std::stringstream ss;
    write_label_map(ss, lm);
    ASSERT_EQ(read_label_map(ss), lm);
  }
}

TEST(LabelFormat, CorruptInputsAreFormatErrors) {
  std::ostringstream os;
  write_label_map(os, LabelMap(2, 2, 1));
  std::string bytes = os.str();

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_label_map(a), FormatError);

  std::istringstream b(bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_label_map(b), FormatError);

  std::string bad_version = bytes;
  bad_version[4] = 2;
  std::istringstream c(bad_version);
  EXPECT_THROW(read_label_map(c), FormatError);

  std::ostringstream wide;
  EXPECT_THROW(write_label_map(wide, LabelMap(1, 1, 256)), ClassIndexError);
}

TEST(ImageFormat, RoundTripIsExact) {
  const auto s = gen_synthetic(9, 1, 16, 3);
  std::stringstream ss;
  write_image(ss, s[0].image);
  EXPECT_EQ(ss.str().substr(0, 4), "SEGI");
  EXPECT_EQ(ss.str().size(), 13u + 16 * 16 * 3 * 8);
  EXPECT_EQ(read_image(ss), s[0].image);
}

TEST(EncodeTargets, SinglePixelClassFive) {
  const auto cb = codes::sylvester(3);
  const auto t = encode_targets(LabelMap(1, 1, 5), cb);
  for (std::size_t c = 0; c < 8; ++c) {
    EXPECT_EQ(t.hadamard[c], cb.entry(5, c));
    EXPECT_EQ(t.one_hot[c], c == 5 ? 1.0 : 0.0);
  }
}

TEST(EncodeTargets, InvariantsOnRandomMaps) {
  std::mt19937_64 rng(12);
  const auto cb = codes::sylvester(3, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto lm = random_map(rng, 6);
    const auto t = encode_targets(lm, cb);
    EXPECT_EQ(metrics::argmax_map(t.one_hot, 6), lm);
    EXPECT_EQ(metrics::argmax_map(layer::hadamard_forward(cb, t.hadamard).output, 6), lm);
    for (std::size_t p = 0; p < lm.size(); ++p) {
      for (std::size_t c = 0; c < 8; ++c) {
        ASSERT_EQ(t.hadamard[p * 8 + c], cb.entry(lm.labels()[p], c));
      }
    }
  }
}

TEST(EncodeTargets, LabelBeyondClassCount) {
  EXPECT_THROW(encode_targets(LabelMap(1, 1, 4), codes::sylvester(2, 4)), ClassIndexError);
}

TEST(Dataset, WriteThenIngest) {
  fixture::ScratchDir dir("dataset");
  const auto samples = gen_synthetic(2, 4, 16, 4);
  write_dataset(dir.path(), samples, 4);
  EXPECT_EQ(manifest_class_count(dir.path()), 4u);
  const auto back = ingest_index_maps(dir.path(), 4);
  ASSERT_EQ(back.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back[i].id, samples[i].id);
    EXPECT_EQ(back[i].image, samples[i].image);
    EXPECT_EQ(back[i].labels, samples[i].labels);
  }
  std::ifstream manifest(dir.path() / "manifest.txt");
  std::string line;
  std::size_t ids = 0;
  while (std::getline(manifest, line)) ids += line.rfind("sample_", 0) == 0;
  EXPECT_EQ(ids, 4u);
}

TEST(Dataset, RewriteIsByteIdentical) {
  fixture::ScratchDir a("ds_a"), b("ds_b");
  write_dataset(a.path(), gen_synthetic(8, 3, 16, 4), 4);
  write_dataset(b.path(), gen_synthetic(8, 3, 16, 4), 4);
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    EXPECT_EQ(file_bytes(entry.path()), file_bytes(b.path() / entry.path().filename()))
        << entry.path().filename();
  }
}

TEST(Ingest, EmptyDirectoryAndSinglePair) {
  fixture::ScratchDir dir("ingest");
  EXPECT_TRUE(ingest_index_maps(dir.path(), 4).empty());
  const auto s = gen_synthetic(1, 1, 16, 4);
  write_image(dir.path() / "x.img", s[0].image);
  write_label_map(dir.path() / "x.segl", s[0].labels);
  EXPECT_EQ(ingest_index_maps(dir.path(), 4).size(), 1u);
}

TEST(Ingest, UnpairedFilesAreListed) {
  fixture::ScratchDir dir("unpaired");
  write_label_map(dir.path() / "lonely.segl", LabelMap(2, 2));
  try {
    ingest_index_maps(dir.path(), 2);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST(Ingest, LabelOutOfRangeNamesFile) {
  fixture::ScratchDir dir("badlabel");
  write_image(dir.path() / "p.img", Tensor({2, 2, 3}));
  write_label_map(dir.path() / "p.segl", LabelMap(2, 2, 7));
  try {
    ingest_index_maps(dir.path(), 4);
    FAIL() << "expected ClassIndexError";
  } catch (const ClassIndexError& e) {
    EXPECT_NE(std::string(e.what()).find("p.segl"), std::string::npos);
  }
}

}  // namespace
}  // namespace hadseg::data
