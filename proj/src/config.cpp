#include "hadseg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include "hadseg/error.hpp"

namespace hadseg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto sz = [&t](const std::string& key, auto member) {
      t[key] = [key, member](ExperimentConfig& c, const std::string& v) {
        member(c) = static_cast<std::size_t>(parse_uint(key, v));
      };
    };
    auto real = [&t](const std::string& key, auto member) {
      t[key] = [key, member](ExperimentConfig& c, const std::string& v) {
        member(c) = parse_real(key, v);
      };
    };
    t["codebook.k"] = [](ExperimentConfig& c, const std::string& v) {
      c.generator.code_bits = static_cast<int>(parse_uint("codebook.k", v));
    };
    sz("codebook.classes", [](ExperimentConfig& c) -> std::size_t& { return c.train.num_classes; });
    sz("generator.depth", [](ExperimentConfig& c) -> std::size_t& { return c.generator.depth; });
    sz("generator.base_channels",
       [](ExperimentConfig& c) -> std::size_t& { return c.generator.base_channels; });
    real("generator.head_scale",
         [](ExperimentConfig& c) -> double& { return c.generator.head_scale; });
    t["generator.head"] = [](ExperimentConfig& c, const std::string& v) {
      c.generator.head = netkit::parse_head(v);
    };
    sz("discriminator.layers",
       [](ExperimentConfig& c) -> std::size_t& { return c.discriminator.layers; });
    sz("discriminator.base_channels",
       [](ExperimentConfig& c) -> std::size_t& { return c.discriminator.base_channels; });
    sz("discriminator.kernel",
       [](ExperimentConfig& c) -> std::size_t& { return c.discriminator.kernel; });
    real("loss.lambda1", [](ExperimentConfig& c) -> double& { return c.train.weights.lambda1; });
    real("loss.lambda2", [](ExperimentConfig& c) -> double& { return c.train.weights.lambda2; });
    real("loss.lambda3", [](ExperimentConfig& c) -> double& { return c.train.weights.lambda3; });
    sz("train.steps", [](ExperimentConfig& c) -> std::size_t& { return c.train.steps; });
    sz("train.batch_size", [](ExperimentConfig& c) -> std::size_t& { return c.train.batch_size; });
    sz("train.metrics_every",
       [](ExperimentConfig& c) -> std::size_t& { return c.train.metrics_every; });
    t["train.seed"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.seed = parse_uint("train.seed", v);
    };
    t["train.lr"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.gen_adam.lr = parse_real("train.lr", v);
      c.train.disc_adam.lr = c.train.gen_adam.lr;
    };
    real("train.disc_lr", [](ExperimentConfig& c) -> double& { return c.train.disc_adam.lr; });
    t["train.beta1"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.gen_adam.beta1 = c.train.disc_adam.beta1 = parse_real("train.beta1", v);
    };
    t["train.beta2"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.gen_adam.beta2 = c.train.disc_adam.beta2 = parse_real("train.beta2", v);
    };
    t["train.eps"] = [](ExperimentConfig& c, const std::string& v) {
      c.train.gen_adam.eps = c.train.disc_adam.eps = parse_real("train.eps", v);
    };
    t["data.source"] = [](ExperimentConfig& c, const std::string& v) {
      if (v == "synthetic") {
        c.data.kind = DataSource::Kind::kSynthetic;
      } else if (v == "directory") {
        c.data.kind = DataSource::Kind::kDirectory;
      } else {
        throw ConfigError("data.source must be 'synthetic' or 'directory', got '" + v + "'");
      }
    };
    t["data.seed"] = [](ExperimentConfig& c, const std::string& v) {
      c.data.seed = parse_uint("data.seed", v);
    };
    sz("data.train_count", [](ExperimentConfig& c) -> std::size_t& { return c.data.train_count; });
    sz("data.test_count", [](ExperimentConfig& c) -> std::size_t& { return c.data.test_count; });
    sz("data.size", [](ExperimentConfig& c) -> std::size_t& { return c.data.size; });
    t["data.train_dir"] = [](ExperimentConfig& c, const std::string& v) { c.data.train_dir = v; };
    t["data.test_dir"] = [](ExperimentConfig& c, const std::string& v) { c.data.test_dir = v; };
    return t;
  }();
  return table;
}

std::string real_text(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void ExperimentConfig::validate() const {
  generator.validate();
  train.weights.validate();
  const std::size_t n = generator.output_channels();
  if (train.num_classes < 2 || train.num_classes > n) {
    throw ConfigError("codebook.classes = " + std::to_string(train.num_classes) +
                      " must lie in [2, 2^k = " + std::to_string(n) + "]");
  }
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  for (const auto* adam : {&train.gen_adam, &train.disc_adam}) {
    if (!(adam->lr > 0) || !(adam->beta1 >= 0 && adam->beta1 < 1) ||
        !(adam->beta2 >= 0 && adam->beta2 < 1) || !(adam->eps > 0)) {
      throw ConfigError("invalid Adam hyperparameters");
    }
  }
  if (data.kind == DataSource::Kind::kSynthetic) {
    if (data.size < 16) throw ConfigError("data.size must be >= 16");
    if (data.train_count == 0) throw ConfigError("data.train_count must be >= 1");
    const std::size_t div = std::size_t{1} << generator.depth;
    if (data.size % div) {
      throw ConfigError("data.size " + std::to_string(data.size) +
                        " not divisible by 2^depth = " + std::to_string(div));
    }
    if (train.num_classes > 256) throw ConfigError("synthetic data supports at most 256 classes");
    discriminator.validate(data.size, data.size);
  } else if (data.train_dir.empty()) {
    throw ConfigError("data.source = directory requires data.train_dir");
  }
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    it->second(cfg, value);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  ExperimentConfig cfg = parse_config(is);
  const auto base = path.parent_path();
  if (!cfg.data.train_dir.empty() && cfg.data.train_dir.is_relative()) {
    cfg.data.train_dir = base / cfg.data.train_dir;
  }
  if (!cfg.data.test_dir.empty() && cfg.data.test_dir.is_relative()) {
    cfg.data.test_dir = base / cfg.data.test_dir;
  }
  return cfg;
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "[codebook]\nk = " << c.generator.code_bits << "\nclasses = " << c.train.num_classes
     << "\n\n[generator]\ndepth = " << c.generator.depth
     << "\nbase_channels = " << c.generator.base_channels
     << "\nhead_scale = " << real_text(c.generator.head_scale)
     << "\nhead = " << netkit::head_name(c.generator.head)
     << "\n\n[discriminator]\nlayers = " << c.discriminator.layers
     << "\nbase_channels = " << c.discriminator.base_channels
     << "\nkernel = " << c.discriminator.kernel
     << "\n\n[loss]\nlambda1 = " << real_text(c.train.weights.lambda1)
     << "\nlambda2 = " << real_text(c.train.weights.lambda2)
     << "\nlambda3 = " << real_text(c.train.weights.lambda3)
     << "\n\n[train]\nsteps = " << c.train.steps << "\nbatch_size = " << c.train.batch_size
     << "\nseed = " << c.train.seed << "\nlr = " << real_text(c.train.gen_adam.lr)
     << "\ndisc_lr = " << real_text(c.train.disc_adam.lr)
     << "\nbeta1 = " << real_text(c.train.gen_adam.beta1)
     << "\nbeta2 = " << real_text(c.train.gen_adam.beta2)
     << "\neps = " << real_text(c.train.gen_adam.eps)
     << "\nmetrics_every = " << c.train.metrics_every << "\n\n[data]\n";
  if (c.data.kind == DataSource::Kind::kSynthetic) {
    os << "source = synthetic\nseed = " << c.data.seed << "\ntrain_count = " << c.data.train_count
       << "\ntest_count = " << c.data.test_count << "\nsize = " << c.data.size << "\n";
  } else {
    os << "source = directory\ntrain_dir = " << c.data.train_dir.string() << "\n";
    if (!c.data.test_dir.empty()) os << "test_dir = " << c.data.test_dir.string() << "\n";
  }
  return os.str();
}

}  // namespace hadseg
