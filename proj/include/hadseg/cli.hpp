#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hadseg/config.hpp"
#include "hadseg/error.hpp"

namespace hadseg::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigFailure = 2,
  kDataFailure = 3,
  kNumericFailure = 4,
};

ExitCode exit_code_for(ErrorClass cls);

/// Result of training one head and scoring it on the held-out samples.
struct HeadRun {
  netkit::Head head = netkit::Head::kHadamard;
  std::size_t parameters = 0;
  std::size_t steps = 0;
  double seconds = 0.0;
  double test_pixel_accuracy = 0.0;
  double test_mean_iou = 0.0;
  std::vector<double> test_class_iou;
  std::vector<bool> test_class_present;
  bool has_test = false;
};

/// Trains `head` under `cfg`, writing config.txt, history.csv, metrics.csv,
/// train.log, model/ and (with test data) eval.json into `out_dir`.
HeadRun run_experiment(const ExperimentConfig& cfg, netkit::Head head,
                       const std::filesystem::path& out_dir, std::ostream& log);

/// Entry point shared by the executable and the tests. argv[0] is the
/// program name. Failures print "error[<class>]: <message>" to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hadseg::cli
