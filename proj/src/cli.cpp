#include "hadseg/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "hadseg/codes.hpp"
#include "hadseg/data.hpp"
#include "hadseg/metrics.hpp"
#include "hadseg/netkit/checkpoint.hpp"
#include "hadseg/netkit/train.hpp"
#include "json.hpp"

namespace hadseg::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::ofstream open_text(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

struct Datasets {
  std::vector<data::Sample> train;
  std::vector<data::Sample> test;
};

Datasets load_datasets(const ExperimentConfig& cfg) {
  Datasets d;
  if (cfg.data.kind == DataSource::Kind::kSynthetic) {
    auto all = data::gen_synthetic(cfg.data.seed, cfg.data.train_count + cfg.data.test_count,
                                   cfg.data.size, cfg.num_classes());
    d.test.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(cfg.data.train_count)),
                  std::make_move_iterator(all.end()));
    all.resize(cfg.data.train_count);
    d.train = std::move(all);
  } else {
    d.train = data::ingest_index_maps(cfg.data.train_dir, cfg.num_classes());
    if (!cfg.data.test_dir.empty()) {
      d.test = data::ingest_index_maps(cfg.data.test_dir, cfg.num_classes());
    }
  }
  if (d.train.empty()) throw DataError("no training samples");
  return d;
}

// ---- codebook --------------------------------------------------------------

int cmd_codebook(int k, std::size_t classes, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  codes::Codebook cb = codes::sylvester(k);
  if (classes) cb = cb.with_num_classes(classes);
  const auto failures = codes::verify_invariants(cb);
  if (!failures.empty()) {
    err << "error[numeric]: codebook invariant violated: " << failures.front() << "\n";
    return kNumericFailure;
  }
  std::ostringstream summary;
  summary << "k=" << k << " n=" << cb.n() << " classes=" << cb.num_classes()
          << " invariants=ok";
  if (k >= 1) summary << " min_distance=" << codes::min_pairwise_distance(cb);
  if (out_path.empty()) {
    codes::write_csv(out, cb);
    err << summary.str() << "\n";
  } else {
    auto os = open_text(out_path);
    codes::write_csv(os, cb);
    out << summary.str() << " written=" << out_path << "\n";
  }
  return kOk;
}

// ---- gen-data --------------------------------------------------------------

int cmd_gen_data(std::uint64_t seed, std::size_t count, std::size_t size, std::size_t classes,
                 const std::string& dir, std::ostream& out) {
  const auto samples = data::gen_synthetic(seed, count, size, classes);
  data::write_dataset(dir, samples, classes);
  std::vector<std::size_t> present(classes, 0);
  std::vector<std::uint64_t> pixels(classes, 0);
  for (const auto& s : samples) {
    std::vector<bool> seen(classes, false);
    for (auto l : s.labels.labels()) {
      ++pixels[l];
      seen[l] = true;
    }
    for (std::size_t c = 0; c < classes; ++c) present[c] += seen[c];
  }
  out << "wrote " << samples.size() << " samples to " << dir << "\n";
  out << "class,samples_present,pixels\n";
  for (std::size_t c = 0; c < classes; ++c) {
    out << c << ',' << present[c] << ',' << pixels[c] << "\n";
  }
  return kOk;
}

// ---- eval / predict / render ----------------------------------------------

int cmd_eval(const std::string& model, const std::string& data_dir, const std::string& report,
             bool ground_truth, std::size_t classes, std::ostream& out) {
  metrics::ConfusionMatrix cm;
  if (ground_truth) {
    std::size_t k = classes ? classes : data::manifest_class_count(data_dir);
    if (k == 0) throw ConfigError("--ground-truth needs --classes or a dataset manifest");
    const auto samples = data::ingest_index_maps(data_dir, k);
    cm = metrics::ConfusionMatrix(k);
    for (const auto& s : samples) cm += metrics::confusion(s.labels, s.labels, k);
  } else {
    if (model.empty()) throw ConfigError("eval needs --model (or --ground-truth)");
    auto loaded = netkit::load_generator(model);
    const auto samples = data::ingest_index_maps(data_dir, loaded.num_classes);
    cm = netkit::evaluate(loaded.generator, samples, loaded.num_classes);
  }
  const std::string text = metrics::metrics_report(cm);
  auto os = open_text(report);
  os << text;
  out << std::setprecision(6) << "pixel_accuracy=" << metrics::pixel_accuracy(cm)
      << " mean_iou=" << metrics::class_iou(cm).mean << " pixels=" << cm.total() << "\n";
  return kOk;
}

int cmd_predict(const std::string& model, const std::string& image, const std::string& out_path,
                std::ostream& out) {
  auto loaded = netkit::load_generator(model);
  Tensor img = data::read_image(fs::path(image));
  const Shape s = img.shape();
  img.reshape({1, s[0], s[1], s[2]});
  Tensor y_hat = netkit::predict(loaded.generator, img);
  y_hat.reshape({s[0], s[1], y_hat.shape().back()});
  const auto lm = metrics::argmax_map(y_hat, loaded.num_classes);
  data::write_label_map(fs::path(out_path), lm);
  out << "wrote " << lm.height() << "x" << lm.width() << " label map to " << out_path << "\n";
  return kOk;
}

int cmd_render(const std::string& segl, const std::string& out_path, std::size_t classes,
               std::ostream& out) {
  const auto lm = data::read_label_map(fs::path(segl));
  const std::size_t k = classes ? classes : lm.max_label() + 1;
  lm.validate(k);
  std::ofstream os(out_path, std::ios::binary);
  if (!os) throw DataError("cannot write " + out_path);
  os << "P5\n" << lm.width() << ' ' << lm.height() << "\n255\n";
  const std::size_t denom = k > 1 ? k - 1 : 1;
  for (auto l : lm.labels()) os.put(static_cast<char>(l * 255 / denom));
  out << "wrote " << out_path << "\n";
  return kOk;
}

// ---- fwht-bench ------------------------------------------------------------

int cmd_fwht_bench(int k, std::size_t reps, std::uint64_t seed, std::ostream& out) {
  if (k > 14) throw CapacityError("fwht-bench supports k <= 14 (dense path is O(4^k))");
  const auto cb = codes::sylvester(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(cb.n());
  for (double& x : v) x = dist(rng);
  if (reps == 0) reps = std::max<std::size_t>(1, (std::size_t{1} << 22) / (cb.n() * cb.n()));

  std::vector<double> dense, fast;
  auto t0 = Clock::now();
  for (std::size_t r = 0; r < reps; ++r) dense = codes::dense_apply(cb, v);
  const double dense_s = seconds_since(t0) / static_cast<double>(reps);
  t0 = Clock::now();
  for (std::size_t r = 0; r < reps; ++r) fast = codes::fwht_apply(cb, v);
  const double fast_s = seconds_since(t0) / static_cast<double>(reps);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < cb.n(); ++i) max_diff = std::max(max_diff, std::abs(dense[i] - fast[i]));
  const bool agree = max_diff < 1e-9;
  out << "k=" << k << " n=" << cb.n() << " reps=" << reps << std::scientific
      << std::setprecision(3) << " dense_seconds=" << dense_s << " fast_seconds=" << fast_s
      << std::defaultfloat << std::setprecision(4)
      << " speedup=" << (fast_s > 0 ? dense_s / fast_s : 0.0) << std::scientific
      << " max_abs_diff=" << max_diff << " agree=" << (agree ? "yes" : "no") << "\n";
  if (!agree) throw NumericError("dense and fast transforms disagree");
  return kOk;
}

// ---- compare ---------------------------------------------------------------

nlohmann::ordered_json run_json(const HeadRun& r) {
  nlohmann::ordered_json j;
  j["head"] = netkit::head_name(r.head);
  j["parameters"] = r.parameters;
  j["steps"] = r.steps;
  j["seconds"] = r.seconds;
  if (r.has_test) {
    j["pixel_accuracy"] = r.test_pixel_accuracy;
    j["mean_iou"] = r.test_mean_iou;
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < r.test_class_iou.size(); ++c) {
      if (r.test_class_present[c]) {
        per.push_back(r.test_class_iou[c]);
      } else {
        per.push_back(nullptr);
      }
    }
    j["class_iou"] = per;
  }
  return j;
}

int cmd_compare(const std::string& config_path, const std::string& out_dir,
                std::ostream& out) {
  const ExperimentConfig cfg = load_config(config_path);
  cfg.validate();
  const HeadRun one_hot = run_experiment(cfg, netkit::Head::kOneHot, fs::path(out_dir) / "one_hot", out);
  const HeadRun hadamard =
      run_experiment(cfg, netkit::Head::kHadamard, fs::path(out_dir) / "hadamard", out);

  nlohmann::ordered_json doc;
  doc["seed"] = cfg.train.seed;
  doc["steps"] = cfg.train.steps;
  doc["num_classes"] = cfg.num_classes();
  doc["code_bits"] = cfg.code_bits();
  doc["one_hot"] = run_json(one_hot);
  doc["hadamard"] = run_json(hadamard);
  doc["parameter_difference"] =
      static_cast<long long>(hadamard.parameters) - static_cast<long long>(one_hot.parameters);
  if (one_hot.has_test && hadamard.has_test) {
    const double d_acc = hadamard.test_pixel_accuracy - one_hot.test_pixel_accuracy;
    const double d_iou = hadamard.test_mean_iou - one_hot.test_mean_iou;
    doc["accuracy_gap_hadamard_minus_one_hot"] = d_acc;
    doc["mean_iou_gap_hadamard_minus_one_hot"] = d_iou;
  }
  auto js = open_text(fs::path(out_dir) / "comparison.json");
  js << doc.dump(2) << "\n";

  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << "| Head | Pixel Acc. | Class IoU | Params | Steps |\n";
  table << "|---|---|---|---|---|\n";
  for (const HeadRun* r : {&one_hot, &hadamard}) {
    table << "| " << netkit::head_name(r->head) << " | " << r->test_pixel_accuracy << " | "
          << r->test_mean_iou << " | " << r->parameters << " | " << r->steps << " |\n";
  }
  auto ts = open_text(fs::path(out_dir) / "comparison.md");
  ts << table.str();
  out << table.str();
  return kOk;
}

}  // namespace

ExitCode exit_code_for(ErrorClass cls) {
  switch (cls) {
    case ErrorClass::kConfig:
    case ErrorClass::kCapacity:
      return kConfigFailure;
    case ErrorClass::kShape:
    case ErrorClass::kClassIndex:
    case ErrorClass::kFormat:
    case ErrorClass::kData:
      return kDataFailure;
    case ErrorClass::kMetric:
    case ErrorClass::kNumeric:
      return kNumericFailure;
  }
  return kNumericFailure;
}

HeadRun run_experiment(const ExperimentConfig& base, netkit::Head head, const fs::path& out_dir,
                       std::ostream& log_out) {
  ExperimentConfig cfg = base;
  cfg.generator.head = head;
  cfg.validate();
  fs::create_directories(out_dir);
  {
    auto os = open_text(out_dir / "config.txt");
    os << to_text(cfg);
  }
  auto log_file = open_text(out_dir / "train.log");
  auto log = [&](const std::string& line) {
    log_file << line << "\n";
    log_out << line << "\n";
  };

  const Datasets ds = load_datasets(cfg);
  const std::size_t every = cfg.train.metrics_every ? cfg.train.metrics_every : 100;
  log("head: " + std::string(netkit::head_name(head)));
  log("threads: " + std::to_string(netkit::kKernelThreads));
  log("train_samples: " + std::to_string(ds.train.size()) +
      " test_samples: " + std::to_string(ds.test.size()));

  const auto t0 = Clock::now();
  auto progress = [&](const netkit::HistoryRow& row) {
    if (row.step % every == 0 || row.step + 1 == cfg.train.steps) {
      std::ostringstream os;
      os << std::setprecision(6) << "step " << row.step << " L_D=" << row.d_loss
         << " L_G=" << row.g.total << " S_ce=" << row.g.cross_entropy;
      log(os.str());
    }
  };
  log("parameters: " +
      std::to_string(netkit::build_generator(cfg.generator, 0).graph.parameter_count()));
  auto result =
      netkit::train_cgan(cfg.generator, cfg.discriminator, ds.train, cfg.train, progress);

  HeadRun run;
  run.head = head;
  run.parameters = result.generator.graph.parameter_count();
  run.steps = cfg.train.steps;
  run.seconds = seconds_since(t0);
  {
    auto os = open_text(out_dir / "history.csv");
    netkit::write_history_csv(os, result.history, head, cfg.train.seed);
  }
  {
    auto os = open_text(out_dir / "metrics.csv");
    netkit::write_metrics_csv(os, result.history);
  }
  netkit::save_generator(out_dir / "model", result.generator, cfg.num_classes());

  if (!ds.test.empty()) {
    const auto cm = netkit::evaluate(result.generator, ds.test, cfg.num_classes());
    const auto iou = metrics::class_iou(cm);
    run.has_test = true;
    run.test_pixel_accuracy = metrics::pixel_accuracy(cm);
    run.test_mean_iou = iou.mean;
    run.test_class_iou = iou.per_class;
    run.test_class_present = iou.present;
    auto os = open_text(out_dir / "eval.json");
    os << metrics::metrics_report(cm);
    std::ostringstream line;
    line << std::setprecision(6) << "test pixel_accuracy=" << run.test_pixel_accuracy
         << " mean_iou=" << run.test_mean_iou;
    log(line.str());
  }
  std::ostringstream line;
  line << std::setprecision(4) << "seconds: " << run.seconds;
  log(line.str());
  return run;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hadamard class codes for semantic segmentation"};
  app.require_subcommand(1);

  int k = 0;
  std::size_t classes = 0;
  std::string out_path;
  auto* codebook = app.add_subcommand("codebook", "Print or export the Sylvester matrix H_{2^k}");
  codebook->add_option("--k", k, "Order exponent")->required();
  codebook->add_option("--classes", classes, "Active class count (default 2^k)");
  codebook->add_option("--out", out_path, "Write CSV here instead of stdout");

  std::uint64_t seed = 0;
  std::size_t count = 0, size = 64;
  std::string dir;
  auto* gen_data = app.add_subcommand("gen-data", "Generate a synthetic segmentation dataset");
  gen_data->add_option("--seed", seed)->required();
  gen_data->add_option("--count", count)->required();
  gen_data->add_option("--size", size)->required();
  gen_data->add_option("--classes", classes)->required();
  gen_data->add_option("--out", dir)->required();

  std::string config_path, head_text;
  std::size_t steps_override = 0;
  bool has_steps = false;
  auto* train = app.add_subcommand("train", "Train one head under a config file");
  train->add_option("--config", config_path)->required();
  train->add_option("--head", head_text)->required()->check(CLI::IsMember({"one_hot", "hadamard"}));
  train->add_option("--out", dir)->required();
  auto* steps_opt = train->add_option("--steps", steps_override, "Override train.steps");

  std::string model, data_dir, report;
  bool ground_truth = false;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset directory");
  eval->add_option("--model", model);
  eval->add_option("--data", data_dir)->required();
  eval->add_option("--report", report)->required();
  eval->add_flag("--ground-truth", ground_truth, "Score the labels against themselves");
  eval->add_option("--classes", classes, "Class count for --ground-truth");

  std::string image;
  auto* predict = app.add_subcommand("predict", "Predict a label map for one image");
  predict->add_option("--model", model)->required();
  predict->add_option("--image", image)->required();
  predict->add_option("--out", out_path)->required();

  std::string segl;
  auto* render = app.add_subcommand("render", "Render a label map as a PGM image");
  render->add_option("--segl", segl)->required();
  render->add_option("--out", out_path)->required();
  render->add_option("--classes", classes, "Class count used for grey levels");

  std::size_t reps = 0;
  auto* bench = app.add_subcommand("fwht-bench", "Time dense vs fast Hadamard products");
  bench->add_option("--k", k)->required();
  bench->add_option("--reps", reps);
  bench->add_option("--seed", seed);

  auto* compare = app.add_subcommand("compare", "Train both heads and tabulate test metrics");
  compare->add_option("--config", config_path)->required();
  compare->add_option("--out", dir)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigFailure;
  }
  has_steps = steps_opt->count() > 0;

  try {
    if (*codebook) return cmd_codebook(k, classes, out_path, out, err);
    if (*gen_data) return cmd_gen_data(seed, count, size, classes, dir, out);
    if (*train) {
      ExperimentConfig cfg = load_config(config_path);
      if (has_steps) cfg.train.steps = steps_override;
      cfg.validate();
      run_experiment(cfg, netkit::parse_head(head_text), dir, out);
      return kOk;
    }
    if (*eval) return cmd_eval(model, data_dir, report, ground_truth, classes, out);
    if (*predict) return cmd_predict(model, image, out_path, out);
    if (*render) return cmd_render(segl, out_path, classes, out);
    if (*bench) return cmd_fwht_bench(k, reps, seed, out);
    if (*compare) return cmd_compare(config_path, dir, out);
  } catch (const Error& e) {
    err << "error[" << error_class_name(e.error_class()) << "]: " << e.what() << "\n";
    return exit_code_for(e.error_class());
  } catch (const fs::filesystem_error& e) {
    err << "error[data]: " << e.what() << "\n";
    return kDataFailure;
  }
  return kConfigFailure;
}

}  // namespace hadseg::cli
