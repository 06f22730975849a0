#include <gtest/gtest.h>

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "hadseg/cli.hpp"
#include "hadseg/data.hpp"
#include "hadseg/metrics.hpp"
#include "hadseg/netkit/checkpoint.hpp"
#include "hadseg/netkit/train.hpp"
#include "json.hpp"
#include "scratch_dir.hpp"

namespace hadseg::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "hadseg");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p);
  os << text;
}

const char* kTinyConfig = R"([codebook]
k = 2
classes = 4
[generator]
depth = 1
base_channels = 4
[discriminator]
layers = 1
base_channels = 4
[train]
steps = 3
batch_size = 2
seed = 5
metrics_every = 1
[data]
source = synthetic
seed = 2
train_count = 4
test_count = 2
size = 16
)";

TEST(CliCodebook, PrintsMatrixAndRejectsLargeOrder) {
  auto r = call({"codebook", "--k", "3"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, 31), "1,1,1,1,1,1,1,1\n1,-1,1,-1,1,-1,");

  r = call({"codebook", "--k", "0"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "1\n");

  r = call({"codebook", "--k", "20"});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[capacity]: ", 0), 0u);
}

TEST(CliCodebook, WritesCsvFile) {
  fixture::ScratchDir dir("cb");
  const auto r = call({"codebook", "--k", "2", "--out", (dir.path() / "h4.csv").string()});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(slurp(dir.path() / "h4.csv"), "1,1,1,1\n1,-1,1,-1\n1,1,-1,-1\n1,-1,-1,1\n");
}

TEST(CliGenData, DeterministicWithHistogram) {
  fixture::ScratchDir a("gd_a"), b("gd_b");
  const auto ra = call({"gen-data", "--seed", "4", "--count", "6", "--size", "32", "--classes",
                        "5", "--out", a.path().string()});
  const auto rb = call({"gen-data", "--seed", "4", "--count", "6", "--size", "32", "--classes",
                        "5", "--out", b.path().string()});
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0);
  for (const auto& e : fs::directory_iterator(a.path())) {
    EXPECT_EQ(slurp(e.path()), slurp(b.path() / e.path().filename()));
  }

  // Recount the histogram from the files on disk.
  const auto samples = data::ingest_index_maps(a.path(), 5);
  ASSERT_EQ(samples.size(), 6u);
  std::ostringstream expected;
  expected << "class,samples_present,pixels\n";
  for (std::uint32_t c = 0; c < 5; ++c) {
    std::size_t present = 0, pixels = 0;
    for (const auto& s : samples) {
      const auto n = std::count(s.labels.labels().begin(), s.labels.labels().end(), c);
      pixels += n;
      present += n > 0;
    }
    expected << c << ',' << present << ',' << pixels << "\n";
  }
  EXPECT_NE(ra.out.find(expected.str()), std::string::npos) << ra.out;
}

TEST(CliTrain, RerunIsIdenticalAndHeadsShareParameterCount) {
  fixture::ScratchDir dir("train");
  write_text(dir.path() / "tiny.ini", kTinyConfig);
  const auto cfg = (dir.path() / "tiny.ini").string();
  ASSERT_EQ(call({"train", "--config", cfg, "--head", "hadamard", "--out",
                  (dir.path() / "a").string()}).code, 0);
  ASSERT_EQ(call({"train", "--config", cfg, "--head", "hadamard", "--out",
                  (dir.path() / "b").string()}).code, 0);
  ASSERT_EQ(call({"train", "--config", cfg, "--head", "one_hot", "--out",
                  (dir.path() / "c").string()}).code, 0);
  EXPECT_EQ(slurp(dir.path() / "a/history.csv"), slurp(dir.path() / "b/history.csv"));
  EXPECT_EQ(slurp(dir.path() / "a/metrics.csv"), slurp(dir.path() / "b/metrics.csv"));

  const std::regex line(R"(parameters: (\d+))");
  std::smatch ma, mc;
  const std::string la = slurp(dir.path() / "a/train.log");
  const std::string lc = slurp(dir.path() / "c/train.log");
  ASSERT_TRUE(std::regex_search(la, ma, line));
  ASSERT_TRUE(std::regex_search(lc, mc, line));
  EXPECT_EQ(ma[1], mc[1]);
  EXPECT_TRUE(fs::exists(dir.path() / "a/model/manifest.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "a/eval.json"));
}

TEST(CliTrain, ErrorClassesMapToExitCodes) {
  fixture::ScratchDir dir("train_err");
  write_text(dir.path() / "bad.ini", "[train]\nbogus = 1\n");
  auto r = call({"train", "--config", (dir.path() / "bad.ini").string(), "--head", "hadamard",
                 "--out", (dir.path() / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error[config]: ", 0), 0u);

  write_text(dir.path() / "missing.ini",
             "[data]\nsource = directory\ntrain_dir = nowhere\n");
  r = call({"train", "--config", (dir.path() / "missing.ini").string(), "--head", "hadamard",
            "--out", (dir.path() / "o2").string()});
  EXPECT_EQ(r.code, 3) << r.err;

  write_text(dir.path() / "diverge.ini", std::string(kTinyConfig) + "[train]\nlr = 1e200\nsteps = 20\n");
  r = call({"train", "--config", (dir.path() / "diverge.ini").string(), "--head", "hadamard",
            "--out", (dir.path() / "o3").string()});
  EXPECT_EQ(r.code, 4);
  EXPECT_EQ(r.err.rfind("error[numeric]: ", 0), 0u);

  r = call({"train", "--head", "hadamard"});
  EXPECT_EQ(r.code, 2);
}

TEST(CliEval, GroundTruthAndModelReports) {
  fixture::ScratchDir dir("eval");
  ASSERT_EQ(call({"gen-data", "--seed", "1", "--count", "3", "--size", "16", "--classes", "4",
                  "--out", (dir.path() / "data").string()}).code, 0);
  auto r = call({"eval", "--ground-truth", "--data", (dir.path() / "data").string(), "--report",
                 (dir.path() / "gt.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(dir.path() / "gt.json"));
  EXPECT_EQ(j["pixel_accuracy"], 1.0);
  EXPECT_EQ(j["mean_iou"], 1.0);

  write_text(dir.path() / "tiny.ini", kTinyConfig);
  ASSERT_EQ(call({"train", "--config", (dir.path() / "tiny.ini").string(), "--head", "hadamard",
                  "--out", (dir.path() / "run").string()}).code, 0);
  r = call({"eval", "--model", (dir.path() / "run/model").string(), "--data",
            (dir.path() / "data").string(), "--report", (dir.path() / "m.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  j = nlohmann::json::parse(slurp(dir.path() / "m.json"));

  auto loaded = netkit::load_generator(dir.path() / "run/model");
  const auto samples = data::ingest_index_maps(dir.path() / "data", 4);
  const auto cm = netkit::evaluate(loaded.generator, samples, 4);
  EXPECT_EQ(j["pixel_accuracy"].get<double>(), metrics::pixel_accuracy(cm));
  EXPECT_EQ(j["mean_iou"].get<double>(), metrics::class_iou(cm).mean);
  EXPECT_EQ(j["total_pixels"].get<std::uint64_t>(), cm.total());
}

TEST(CliPredictRender, ProducesLabelMapAndPgm) {
  fixture::ScratchDir dir("pred");
  write_text(dir.path() / "tiny.ini", kTinyConfig);
  ASSERT_EQ(call({"train", "--config", (dir.path() / "tiny.ini").string(), "--head", "one_hot",
                  "--out", (dir.path() / "run").string()}).code, 0);
  const auto s = data::gen_synthetic(3, 1, 16, 4);
  data::write_image(dir.path() / "x.img", s[0].image);
  auto r = call({"predict", "--model", (dir.path() / "run/model").string(), "--image",
                 (dir.path() / "x.img").string(), "--out", (dir.path() / "x.segl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lm = data::read_label_map(dir.path() / "x.segl");
  EXPECT_EQ(lm.height(), 16u);
  EXPECT_LT(lm.max_label(), 4u);

  r = call({"render", "--segl", (dir.path() / "x.segl").string(), "--classes", "4", "--out",
            (dir.path() / "x.pgm").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string pgm = slurp(dir.path() / "x.pgm");
  EXPECT_EQ(pgm.rfind("P5\n16 16\n255\n", 0), 0u);
  EXPECT_EQ(pgm.size(), std::string("P5\n16 16\n255\n").size() + 256);
}

TEST(CliRender, ZeroMapIsUniform) {
  fixture::ScratchDir dir("render");
  data::write_label_map(dir.path() / "z.segl", metrics::LabelMap(3, 5, 0));
  ASSERT_EQ(call({"render", "--segl", (dir.path() / "z.segl").string(), "--out",
                  (dir.path() / "z.pgm").string()}).code, 0);
  const std::string pgm = slurp(dir.path() / "z.pgm");
  const std::string header = "P5\n5 3\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 15);
  const std::set<char> values(pgm.begin() + static_cast<std::ptrdiff_t>(header.size()), pgm.end());
  EXPECT_EQ(values.size(), 1u);
}

TEST(CliRender, MissingFileIsDataError) {
  const auto r = call({"render", "--segl", "/nonexistent/x.segl", "--out", "/tmp/x.pgm"});
  EXPECT_EQ(r.code, 3);
}

TEST(CliFwhtBench, ReportsBothTimings) {
  for (const char* k : {"0", "6"}) {
    const auto r = call({"fwht-bench", "--k", k, "--reps", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("dense_seconds="), std::string::npos);
    EXPECT_NE(r.out.find("fast_seconds="), std::string::npos);
    EXPECT_NE(r.out.find("agree=yes"), std::string::npos);
  }
}

TEST(CliMisc, UsageErrors) {
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"nonsense"}).code, 2);
  EXPECT_EQ(call({"--help"}).code, 0);
  EXPECT_EQ(exit_code_for(ErrorClass::kShape), kDataFailure);
  EXPECT_EQ(exit_code_for(ErrorClass::kMetric), kNumericFailure);
  EXPECT_EQ(exit_code_for(ErrorClass::kCapacity), kConfigFailure);
}

}  // namespace
}  // namespace hadseg::cli
