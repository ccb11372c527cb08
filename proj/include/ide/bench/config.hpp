#pragma once

// Experiment configuration. Files are INI style:
//
//   [common]
//   seed = 42
//   [exp4]
//   m = 500
//   n = 200
//
// Keys in [common] apply to every experiment; the section named after the
// selected experiment overrides them. Command-line flags override both.

#include "ide/core.hpp"
#include "ide/estimation.hpp"
#include "ide/problem.hpp"
#include "ide/schedule.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ide::bench {

/// Configuration problems; the CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { exp1, exp2, exp3, exp4, exp5, single };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::exp1: return "exp1";
    case Experiment::exp2: return "exp2";
    case Experiment::exp3: return "exp3";
    case Experiment::exp4: return "exp4";
    case Experiment::exp5: return "exp5";
    case Experiment::single: return "single";
  }
  return "unknown";
}

inline Experiment parse_experiment(std::string_view s) {
  for (auto e : {Experiment::exp1, Experiment::exp2, Experiment::exp3, Experiment::exp4,
                 Experiment::exp5, Experiment::single})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names = {"ide_s", "ide_x", "mof", "mp", "lp"};
  return names;
}

inline std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline double parse_double(const std::string& s, std::string_view key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "': expected a number, got '" + s + "'");
  }
}

inline long long parse_int(const std::string& s, std::string_view key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "': expected an integer, got '" + s + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& s, std::string_view key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || s.starts_with('-')) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + std::string(key) + "': expected an unsigned integer, got '" + s + "'");
  }
}

/// Schedule from a preset name or a comma-separated list of thresholds.
inline ThresholdSchedule parse_schedule(const std::string& text) {
  try {
    if (text == "exp1_short" || text == "general_10" || text == "wide_13")
      return ThresholdSchedule::preset(text);
    std::vector<double> values;
    for (const auto& tok : split_list(text)) values.push_back(parse_double(tok, "schedule"));
    return ThresholdSchedule(std::move(values), "custom");
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

struct SystemCase {
  Index m = 0;
  double n_ratio = 0.0;
};

struct ExperimentConfig {
  Experiment experiment = Experiment::exp1;

  // Problem shape: n = floor(n_ratio * m) unless n is set explicitly.
  Index m = 1024;
  Index n = 0;
  double n_ratio = 0.4;

  SourceModel source = SourceModel::mog;
  MogParams mog{};
  ExactKParams exact_k{};

  std::vector<ThresholdSchedule> schedules;
  std::vector<std::string> algorithms;
  int trials = 1;
  std::uint64_t seed = 1;
  std::vector<int> mp_iterations;
  bool mp_reselect = false;
  SSpaceMethod s_method = SSpaceMethod::automatic;
  std::filesystem::path output_dir = "results";
  double scale = 1.0;
  int threads = 1;

  // exp2: one entry per (m, n/m) case; `samples` time samples each.
  std::vector<SystemCase> cases;
  int samples = 0;
  // exp3: problem sizes to sweep.
  std::vector<Index> m_points;
  // exp4: ratio #act / (n/2) sweep.
  double ratio_min = 0.1;
  double ratio_max = 1.0;
  int ratio_points = 25;
  // exp5: dictionary noise sweep; the source has n / active_divisor actives.
  double sigma_min = 0.001;
  double sigma_max = 0.1;
  int sigma_points = 10;
  int active_divisor = 8;
  PerturbationScale perturbation = PerturbationScale::variance;
  // single: optional instance file.
  std::optional<std::filesystem::path> problem_path;

  Index resolved_n() const {
    return n > 0 ? n : static_cast<Index>(std::floor(n_ratio * static_cast<double>(m)));
  }

  bool runs(std::string_view algorithm) const {
    return std::find(algorithms.begin(), algorithms.end(), algorithm) != algorithms.end();
  }

  /// Full-size defaults for each experiment.
  static ExperimentConfig defaults(Experiment e) {
    ExperimentConfig c;
    c.experiment = e;
    switch (e) {
      case Experiment::exp1:
        c.m = 1024;
        c.n_ratio = 0.4;
        c.schedules = {ThresholdSchedule::exp1_short()};
        c.algorithms = known_algorithms();
        c.mp_iterations = {10, 100, 1000};
        break;
      case Experiment::exp2:
        c.schedules = {ThresholdSchedule::general_10()};
        c.algorithms = {"ide_s", "ide_x", "lp"};
        c.cases = {{100, 0.6}, {500, 0.6}, {500, 0.4}};
        c.samples = 1000;
        break;
      case Experiment::exp3:
        c.n_ratio = 0.6;
        c.schedules = {ThresholdSchedule::general_10()};
        c.algorithms = known_algorithms();
        c.trials = 10;
        c.mp_iterations = {10};
        c.m_points = {10, 20, 50, 100, 200, 500, 1000};
        break;
      case Experiment::exp4:
        c.m = 1000;
        c.n = 400;
        c.source = SourceModel::exact_k;
        c.schedules = {ThresholdSchedule::general_10(), ThresholdSchedule::wide_13()};
        c.algorithms = {"ide_s", "ide_x", "lp"};
        c.trials = 10;
        break;
      case Experiment::exp5:
        c.m = 500;
        c.n = 200;
        c.source = SourceModel::exact_k;
        c.schedules = {ThresholdSchedule::general_10()};
        c.algorithms = {"ide_s", "ide_x", "lp"};
        c.trials = 10;
        break;
      case Experiment::single:
        c.m = 64;
        c.n = 16;
        c.schedules = {ThresholdSchedule::exp1_short()};
        c.algorithms = known_algorithms();
        c.mp_iterations = {100};
        break;
    }
    return c;
  }

  /// Shrinks problem sizes and trial counts by `factor` in (0, 1].
  void apply_scale(double factor) {
    if (!(factor > 0.0 && factor <= 1.0)) throw ConfigError("scale must lie in (0, 1]");
    scale = factor;
    if (factor == 1.0) return;
    auto shrink = [factor](Index v, Index floor_value) {
      return std::max<Index>(floor_value, static_cast<Index>(std::lround(static_cast<double>(v) * factor)));
    };
    if (n > 0) {
      const double ratio = static_cast<double>(n) / static_cast<double>(m);
      m = shrink(m, 8);
      n = std::max<Index>(2, static_cast<Index>(std::floor(ratio * static_cast<double>(m))));
    } else {
      m = shrink(m, 8);
    }
    trials = static_cast<int>(shrink(trials, 1));
    samples = static_cast<int>(shrink(samples, 1));
    for (auto& c : cases) c.m = shrink(c.m, 8);
    std::set<Index> pts;
    for (Index p : m_points) pts.insert(shrink(p, 8));
    m_points.assign(pts.begin(), pts.end());
  }

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    if (algorithms.empty()) throw ConfigError("no algorithms selected");
    for (const auto& a : algorithms)
      if (std::find(known_algorithms().begin(), known_algorithms().end(), a) ==
          known_algorithms().end())
        throw ConfigError("unknown algorithm '" + a + "'");
    if (schedules.empty()) throw ConfigError("no threshold schedule");
    for (int it : mp_iterations)
      if (it < 1) throw ConfigError("mp iterations must be positive");
    if (experiment != Experiment::single || !problem_path) {
      if (experiment != Experiment::exp2 && experiment != Experiment::exp3) {
        const Index nn = resolved_n();
        if (!(nn > 0 && nn < m)) throw ConfigError("need 0 < n < m after resolution");
      }
    }
    if (experiment == Experiment::exp2) {
      if (cases.empty()) throw ConfigError("exp2 needs at least one case");
      if (samples < 1) throw ConfigError("exp2 needs samples >= 1");
      for (const auto& c : cases) {
        const auto nn = static_cast<Index>(std::floor(c.n_ratio * static_cast<double>(c.m)));
        if (!(nn > 0 && nn < c.m)) throw ConfigError("exp2 case needs 0 < n < m");
      }
    }
    if (experiment == Experiment::exp3 && m_points.empty())
      throw ConfigError("exp3 needs at least one m point");
    if (experiment == Experiment::exp4) {
      if (!(ratio_min > 0.0 && ratio_min <= ratio_max) || ratio_points < 1)
        throw ConfigError("exp4 needs 0 < ratio_min <= ratio_max and ratio_points >= 1");
    }
    if (experiment == Experiment::exp5) {
      if (!(sigma_min > 0.0 && sigma_min <= sigma_max) || sigma_points < 1)
        throw ConfigError("exp5 needs 0 < sigma_min <= sigma_max and sigma_points >= 1");
      if (active_divisor < 1) throw ConfigError("active_divisor must be positive");
    }
    try {
      mog.validate();
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
};

/// Documented configuration keys, for --help.
inline std::string config_keys_help() {
  return R"(Configuration keys ([common] or [expN] sections):
  m, n, n_ratio            problem size; n = floor(n_ratio*m) when n is unset
  source                   mog | exact_k
  p0, sigma0, sigma1       mixture-of-Gaussians source parameters
  num_active, inactive_sigma  exact-k source parameters
  schedule                 preset name(s) or comma list; several presets with ';'
  algorithms               comma list of ide_s, ide_x, mof, mp, lp
  trials, seed, threads, scale, output_dir
  mp_iterations            comma list of MP step counts
  mp_reselect              true to allow MP to re-select atoms
  s_method                 auto | closed_form_2 | closed_form_1 | kkt_direct
  cases                    exp2: list like 100:0.6, 500:0.6
  samples                  exp2: time samples per case
  m_points                 exp3: comma list of m values
  ratio_min, ratio_max, ratio_points        exp4 sweep
  sigma_min, sigma_max, sigma_points        exp5 sweep
  active_divisor           exp5: actives = n / active_divisor
  perturbation             variance | std_dev (exp5 noise reading)
  problem                  single: path to a .sdp instance
)";
}

inline SSpaceMethod parse_s_method(const std::string& s) {
  if (s == "auto") return SSpaceMethod::automatic;
  if (s == "closed_form_2") return SSpaceMethod::closed_form_2;
  if (s == "closed_form_1") return SSpaceMethod::closed_form_1;
  if (s == "kkt_direct") return SSpaceMethod::kkt_direct;
  throw ConfigError("unknown s_method '" + s + "'");
}

inline std::vector<ThresholdSchedule> parse_schedules(const std::string& text) {
  std::vector<ThresholdSchedule> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ';')) {
    if (split_list(part).empty()) continue;
    out.push_back(parse_schedule(part));
  }
  if (out.empty()) throw ConfigError("empty schedule");
  return out;
}

/// Applies one key = value pair.
inline void apply_key(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "m") c.m = parse_int(value, key);
  else if (key == "n") c.n = parse_int(value, key);
  else if (key == "n_ratio") { c.n_ratio = parse_double(value, key); c.n = 0; }
  else if (key == "source") {
    if (value == "mog") c.source = SourceModel::mog;
    else if (value == "exact_k") c.source = SourceModel::exact_k;
    else throw ConfigError("unknown source model '" + value + "'");
  }
  else if (key == "p0") c.mog.p0 = parse_double(value, key);
  else if (key == "sigma0") c.mog.sigma0 = parse_double(value, key);
  else if (key == "sigma1") c.mog.sigma1 = parse_double(value, key);
  else if (key == "num_active") c.exact_k.num_active = parse_int(value, key);
  else if (key == "inactive_sigma") c.exact_k.inactive_sigma = parse_double(value, key);
  else if (key == "schedule") c.schedules = parse_schedules(value);
  else if (key == "algorithms") c.algorithms = split_list(value);
  else if (key == "trials") c.trials = static_cast<int>(parse_int(value, key));
  else if (key == "seed") c.seed = parse_u64(value, key);
  else if (key == "threads") c.threads = static_cast<int>(parse_int(value, key));
  else if (key == "scale") c.scale = parse_double(value, key);
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "mp_iterations") {
    c.mp_iterations.clear();
    for (const auto& tok : split_list(value)) c.mp_iterations.push_back(static_cast<int>(parse_int(tok, key)));
  }
  else if (key == "mp_reselect") c.mp_reselect = (value == "true" || value == "1");
  else if (key == "s_method") c.s_method = parse_s_method(value);
  else if (key == "cases") {
    c.cases.clear();
    for (const auto& tok : split_list(value)) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ConfigError("cases entries look like m:ratio");
      c.cases.push_back({parse_int(tok.substr(0, colon), key), parse_double(tok.substr(colon + 1), key)});
    }
  }
  else if (key == "samples") c.samples = static_cast<int>(parse_int(value, key));
  else if (key == "m_points") {
    c.m_points.clear();
    for (const auto& tok : split_list(value)) c.m_points.push_back(parse_int(tok, key));
  }
  else if (key == "ratio_min") c.ratio_min = parse_double(value, key);
  else if (key == "ratio_max") c.ratio_max = parse_double(value, key);
  else if (key == "ratio_points") c.ratio_points = static_cast<int>(parse_int(value, key));
  else if (key == "sigma_min") c.sigma_min = parse_double(value, key);
  else if (key == "sigma_max") c.sigma_max = parse_double(value, key);
  else if (key == "sigma_points") c.sigma_points = static_cast<int>(parse_int(value, key));
  else if (key == "active_divisor") c.active_divisor = static_cast<int>(parse_int(value, key));
  else if (key == "perturbation") {
    if (value == "variance") c.perturbation = PerturbationScale::variance;
    else if (value == "std_dev") c.perturbation = PerturbationScale::std_dev;
    else throw ConfigError("perturbation must be variance or std_dev");
  }
  else if (key == "problem") c.problem_path = value;
  else throw ConfigError("unknown configuration key '" + key + "'");
}

/// Reads [common] then [<experiment>] from an INI file into `c`.
inline void load_config_file(ExperimentConfig& c, const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  for (const std::string section : {std::string("common"), std::string(to_string(c.experiment))}) {
    const auto child = tree.get_child_optional(section);
    if (!child) continue;
    for (const auto& [key, node] : *child) apply_key(c, key, node.data());
  }
}

}  // namespace ide::bench
