#include "picce/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "picce/csv.hpp"

namespace picce {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
    throw ConfigError("key '" + key + "': expected a quoted string, got " + v);
  }
  return v.substr(1, v.size() - 2);
}

std::vector<std::string> split_array(const std::string& key, const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ConfigError("key '" + key + "': expected an array, got " + v);
  }
  std::vector<std::string> items;
  std::string current;
  bool quoted = false;
  for (char c : v.substr(1, v.size() - 2)) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (!trim(current).empty()) items.push_back(trim(current));
  for (const auto& item : items) {
    if (item.empty()) throw ConfigError("key '" + key + "': empty array element");
  }
  return items;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got " + v);
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false, got " + v);
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

template <typename T, typename Fmt>
std::string array_text(const std::vector<T>& items, Fmt fmt) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += fmt(items[i]);
  }
  return out + "]";
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value,
                                  const std::filesystem::path& base_dir)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size_key = [](std::size_t RunConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.*field = to_size(k, v);
      };
    };
    t["command"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.command = unquote(k, v);
    };
    t["seed"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.seed = to_u64(k, v);
    };
    t["out_dir"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.out_dir = unquote(k, v);
    };
    t["jobs"] = size_key(&RunConfig::jobs);
    t["fixtures"] = [](RunConfig& c, const std::string& k, const std::string& v,
                       const std::filesystem::path& base) {
      c.fixtures.clear();
      for (const auto& item : split_array(k, v)) {
        std::filesystem::path p = unquote(k, item);
        if (p.is_relative()) p = base / p;
        if (!std::filesystem::exists(p)) {
          throw ConfigError("key 'fixtures': file does not exist: " + p.string());
        }
        c.fixtures.push_back(std::filesystem::weakly_canonical(p));
      }
    };
    t["random_points"] = size_key(&RunConfig::random_points);
    t["identity_points"] = size_key(&RunConfig::identity_points);
    t["mc_samples"] = size_key(&RunConfig::mc_samples);
    t["max_experts"] = size_key(&RunConfig::max_experts);

    t["max_iters"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.optimizer.max_iters = to_size(k, v);
    };
    t["step_size"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.optimizer.step_size = to_double(k, v);
    };
    t["grad_tolerance"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.optimizer.grad_tolerance = to_double(k, v);
    };
    t["newton"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.optimizer.newton = to_bool(k, v);
    };
    t["line_search"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.optimizer.use_line_search = to_bool(k, v);
    };

    auto sweep_size = [](std::size_t SweepConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.*field = to_size(k, v);
      };
    };
    auto sweep_double = [](double SweepConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.*field = to_double(k, v);
      };
    };
    auto pattern_double = [](double ExpertPattern::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.pattern.*field = to_double(k, v);
      };
    };
    auto pattern_size = [](std::size_t ExpertPattern::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.pattern.*field = to_size(k, v);
      };
    };
    auto train_size = [](std::size_t TrainConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.train.*field = to_size(k, v);
      };
    };
    auto train_double = [](double TrainConfig::*field) {
      return [field](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
        c.sweep.train.*field = to_double(k, v);
      };
    };
    t["num_classes"] = sweep_size(&SweepConfig::num_classes);
    t["feature_dim"] = sweep_size(&SweepConfig::feature_dim);
    t["ring_radius"] = sweep_double(&SweepConfig::ring_radius);
    t["sigma"] = sweep_double(&SweepConfig::sigma);
    t["trials"] = sweep_size(&SweepConfig::trials);
    t["n_train"] = sweep_size(&SweepConfig::n_train);
    t["n_test"] = sweep_size(&SweepConfig::n_test);
    t["hidden_width"] = sweep_size(&SweepConfig::hidden_width);
    t["architecture"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      try {
        c.sweep.architecture = parse_architecture(unquote(k, v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    };
    t["record_timing"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.sweep.record_timing = to_bool(k, v);
    };
    t["expert_counts"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.sweep.expert_counts.clear();
      for (const auto& item : split_array(k, v)) c.sweep.expert_counts.push_back(to_size(k, item));
    };
    t["specs"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      c.sweep.specs.clear();
      for (const auto& item : split_array(k, v)) {
        try {
          c.sweep.specs.push_back(parse_surrogate_spec(unquote(k, item)));
        } catch (const std::invalid_argument& e) {
          throw ConfigError("key '" + k + "': " + e.what());
        }
      }
    };
    t["pattern"] = [](RunConfig& c, const std::string& k, const std::string& v, const auto&) {
      try {
        c.sweep.pattern.kind = parse_pattern_kind(unquote(k, v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("key '" + k + "': " + e.what());
      }
    };
    t["in_domain_accuracy"] = pattern_double(&ExpertPattern::in_domain_accuracy);
    t["family_accuracy"] = pattern_double(&ExpertPattern::family_accuracy);
    t["accuracy_lo"] = pattern_double(&ExpertPattern::accuracy_lo);
    t["accuracy_hi"] = pattern_double(&ExpertPattern::accuracy_hi);
    t["domain_size"] = pattern_size(&ExpertPattern::domain_size);
    t["overlap"] = pattern_size(&ExpertPattern::overlap);
    t["family_size"] = pattern_size(&ExpertPattern::family_size);
    t["epochs"] = train_size(&TrainConfig::epochs);
    t["batch_size"] = train_size(&TrainConfig::batch_size);
    t["learning_rate"] = train_double(&TrainConfig::learning_rate);
    t["momentum"] = train_double(&TrainConfig::momentum);
    t["weight_decay"] = train_double(&TrainConfig::weight_decay);
    return t;
  }();
  return table;
}

}  // namespace

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!out.emplace(key, value).second) throw ConfigError("key '" + key + "' given twice");
  }
  return out;
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig config;
  // Sweep defaults that differ from the library's bare structs.
  config.sweep.pattern.kind = PatternKind::DomainExpert;
  for (const auto& [key, value] : parse_flat_config(text)) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown key '" + key + "'");
    it->second(config, key, value, base_dir);
  }
  if (config.jobs == 0) throw ConfigError("key 'jobs': must be at least 1");
  try {
    config.optimizer.validate();
    config.sweep.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  config.sweep.seed = config.seed;
  config.sweep.jobs = config.jobs;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path());
}

std::string echo_run_config(const RunConfig& c) {
  const auto& s = c.sweep;
  const auto& p = s.pattern;
  std::ostringstream out;
  out << "# effective configuration\n";
  if (!c.command.empty()) out << "command = " << quote(c.command) << '\n';
  out << "seed = " << c.seed << '\n';
  out << "out_dir = " << quote(c.out_dir.string()) << '\n';
  out << "jobs = " << c.jobs << '\n';
  out << "fixtures = "
      << array_text(c.fixtures, [](const std::filesystem::path& f) { return quote(f.string()); })
      << '\n';
  out << "random_points = " << c.random_points << '\n';
  out << "identity_points = " << c.identity_points << '\n';
  out << "mc_samples = " << c.mc_samples << '\n';
  out << "max_experts = " << c.max_experts << '\n';
  out << "max_iters = " << c.optimizer.max_iters << '\n';
  out << "step_size = " << format_double(c.optimizer.step_size) << '\n';
  out << "grad_tolerance = " << format_double(c.optimizer.grad_tolerance) << '\n';
  out << "line_search = " << (c.optimizer.use_line_search ? "true" : "false") << '\n';
  out << "newton = " << (c.optimizer.newton ? "true" : "false") << '\n';
  out << "num_classes = " << s.num_classes << '\n';
  out << "feature_dim = " << s.feature_dim << '\n';
  out << "ring_radius = " << format_double(s.ring_radius) << '\n';
  out << "sigma = " << format_double(s.sigma) << '\n';
  out << "pattern = " << quote(std::string(to_string(p.kind))) << '\n';
  out << "in_domain_accuracy = " << format_double(p.in_domain_accuracy) << '\n';
  out << "family_accuracy = " << format_double(p.family_accuracy) << '\n';
  out << "accuracy_lo = " << format_double(p.accuracy_lo) << '\n';
  out << "accuracy_hi = " << format_double(p.accuracy_hi) << '\n';
  out << "domain_size = " << p.domain_size << '\n';
  out << "overlap = " << p.overlap << '\n';
  out << "family_size = " << p.family_size << '\n';
  out << "expert_counts = "
      << array_text(s.expert_counts, [](std::size_t j) { return std::to_string(j); }) << '\n';
  out << "specs = "
      << array_text(s.specs, [](const SurrogateSpec& sp) { return quote(to_string(sp)); }) << '\n';
  out << "trials = " << s.trials << '\n';
  out << "n_train = " << s.n_train << '\n';
  out << "n_test = " << s.n_test << '\n';
  out << "architecture = " << quote(std::string(to_string(s.architecture))) << '\n';
  out << "hidden_width = " << s.hidden_width << '\n';
  out << "epochs = " << s.train.epochs << '\n';
  out << "batch_size = " << s.train.batch_size << '\n';
  out << "learning_rate = " << format_double(s.train.learning_rate) << '\n';
  out << "momentum = " << format_double(s.train.momentum) << '\n';
  out << "weight_decay = " << format_double(s.train.weight_decay) << '\n';
  out << "record_timing = " << (s.record_timing ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace picce
