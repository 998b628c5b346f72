#include "dpwfl/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dpwfl/csv.hpp"

namespace dpwfl {

namespace {

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  return s;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(parse_double(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' has malformed number '" + item + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument("config: key '" + key + "' needs at least one value");
  return out;
}

long parse_long(const std::string& value, const std::string& key) {
  long v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
    throw std::invalid_argument("config: key '" + key + "' expects an unsigned integer, got '" +
                                value + "'");
  return v;
}

double parse_num(const std::string& value, const std::string& key) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& key) {
  if (value == "true" || value == "on" || value == "1") return true;
  if (value == "false" || value == "off" || value == "0") return false;
  throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string& value, const std::string& key)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n", [](auto& c, const auto& v, const auto& k) { c.params.n = static_cast<int>(parse_long(v, k)); }},
      {"p", [](auto& c, const auto& v, const auto& k) { c.params.p = parse_num(v, k); }},
      {"q", [](auto& c, const auto& v, const auto& k) { c.params.q = parse_num(v, k); }},
      {"c", [](auto& c, const auto& v, const auto& k) { c.params.c = parse_num(v, k); }},
      {"D", [](auto& c, const auto& v, const auto& k) { c.params.D = parse_num(v, k); }},
      {"L", [](auto& c, const auto& v, const auto& k) { c.params.L = parse_num(v, k); }},
      {"eta", [](auto& c, const auto& v, const auto& k) { c.params.eta = parse_num(v, k); }},
      {"sigma", [](auto& c, const auto& v, const auto& k) { c.params.sigma = parse_num(v, k); }},
      {"delta", [](auto& c, const auto& v, const auto& k) { c.params.delta = parse_num(v, k); }},
      {"dataset_size",
       [](auto& c, const auto& v, const auto& k) { c.params.dataset_size = static_cast<int>(parse_long(v, k)); }},
      {"dim", [](auto& c, const auto& v, const auto& k) { c.params.dim = static_cast<int>(parse_long(v, k)); }},
      {"T", [](auto& c, const auto& v, const auto& k) { c.T = parse_long(v, k); }},
      {"seed", [](auto& c, const auto& v, const auto& k) { c.seed = parse_u64(v, k); }},
      {"alpha", [](auto& c, const auto& v, const auto& k) { c.alpha = parse_num(v, k); }},
      {"gamma_policy",
       [](auto& c, const auto& v, const auto& k) {
         if (v == "constant") c.policy.kind = GammaPolicy::Kind::Constant;
         else if (v == "power_limited") c.policy.kind = GammaPolicy::Kind::PowerLimited;
         else throw std::invalid_argument("config: key '" + k + "' expects constant|power_limited");
       }},
      {"gamma_value", [](auto& c, const auto& v, const auto& k) { c.policy.value = parse_num(v, k); }},
      {"power_budget",
       [](auto& c, const auto& v, const auto& k) { c.policy.power_budget = parse_num(v, k); }},
      {"fading",
       [](auto& c, const auto& v, const auto& k) {
         if (v == "constant") c.fading.kind = FadingSpec::Kind::Constant;
         else if (v == "rayleigh") c.fading.kind = FadingSpec::Kind::Rayleigh;
         else throw std::invalid_argument("config: key '" + k + "' expects constant|rayleigh");
       }},
      {"fading_value", [](auto& c, const auto& v, const auto& k) { c.fading.value = parse_num(v, k); }},
      {"rayleigh_scale",
       [](auto& c, const auto& v, const auto& k) { c.fading.scale = parse_num(v, k); }},
      {"h_min", [](auto& c, const auto& v, const auto& k) { c.fading.h_min = parse_num(v, k); }},
      {"loss",
       [](auto& c, const auto& v, const auto& k) {
         if (v == "quadratic") c.loss = LossModel::Kind::Quadratic;
         else if (v == "logistic") c.loss = LossModel::Kind::Logistic;
         else throw std::invalid_argument("config: key '" + k + "' expects quadratic|logistic");
       }},
      {"device_sigma",
       [](auto& c, const auto& v, const auto& k) { c.spread.device_sigma = parse_num(v, k); }},
      {"sample_sigma",
       [](auto& c, const auto& v, const auto& k) { c.spread.sample_sigma = parse_num(v, k); }},
      {"heavy_tail",
       [](auto& c, const auto& v, const auto& k) { c.spread.heavy_tail = parse_num(v, k); }},
      {"feature_radius",
       [](auto& c, const auto& v, const auto& k) { c.feature_radius = parse_num(v, k); }},
      {"feature_scale",
       [](auto& c, const auto& v, const auto& k) { c.feature_scale = parse_num(v, k); }},
      {"normalization",
       [](auto& c, const auto& v, const auto& k) {
         if (v == "paper") c.normalization = Normalization::PaperSum;
         else if (v == "mean") c.normalization = Normalization::SampleMean;
         else throw std::invalid_argument("config: key '" + k + "' expects paper|mean");
       }},
      {"project", [](auto& c, const auto& v, const auto& k) { c.project = parse_bool(v, k); }},
      {"theta0_value",
       [](auto& c, const auto& v, const auto& k) { c.theta0_value = parse_num(v, k); }},
      {"mc_reps",
       [](auto& c, const auto& v, const auto& k) { c.mc_reps = static_cast<int>(parse_long(v, k)); }},
      {"eps_targets",
       [](auto& c, const auto& v, const auto& k) { c.eps_targets = parse_double_list(v, k); }},
  };
  return table;
}

// Scalar fields a sweep axis may address.
double* sweep_target(ExperimentConfig& config, const std::string& field) {
  static const std::map<std::string, double HyperParams::*> hyper = {
      {"p", &HyperParams::p},         {"q", &HyperParams::q},   {"c", &HyperParams::c},
      {"D", &HyperParams::D},         {"L", &HyperParams::L},   {"eta", &HyperParams::eta},
      {"sigma", &HyperParams::sigma}, {"delta", &HyperParams::delta},
  };
  if (auto it = hyper.find(field); it != hyper.end()) return &(config.params.*(it->second));
  if (field == "gamma_value") return &config.policy.value;
  if (field == "theta0_value") return &config.theta0_value;
  if (field == "alpha") return &config.alpha;
  return nullptr;
}

void apply_line(ExperimentConfig& config, const std::string& key, const std::string& value) {
  if (key.rfind("sweep.", 0) == 0) {
    const std::string field = key.substr(6);
    if (sweep_target(config, field) == nullptr)
      throw std::invalid_argument("config: field '" + field + "' is not sweepable");
    // re-declaring an axis replaces it
    for (auto& axis : config.sweeps)
      if (axis.first == field) {
        axis.second = parse_double_list(value, key);
        return;
      }
    if (config.sweeps.size() >= 2)
      throw std::invalid_argument("config: at most 2 sweep axes are supported");
    config.sweeps.emplace_back(field, parse_double_list(value, key));
    return;
  }
  const auto it = setters().find(key);
  if (it == setters().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  it->second(config, value, key);
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig config;  // defaults already carry the standard parameters
  if (name == "default") return config;
  if (name == "fig1a") {
    config.sweeps.emplace_back("D", std::vector<double>{0.25, 0.5, 1.0});
    return config;
  }
  if (name == "fig1b") {
    config.sweeps.emplace_back("p", std::vector<double>{1.0, 0.5});
    config.sweeps.emplace_back("q", std::vector<double>{1.0, 0.5});
    return config;
  }
  throw std::invalid_argument("config: unknown preset '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text, const ExperimentConfig& base) {
  ExperimentConfig config = base;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                                 " has an empty key");
    apply_line(config, key, value);
  }
  return config;
}

ExperimentConfig parse_config_file(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), base);
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  const auto& p = config.params;
  out << "n = " << p.n << "\n";
  out << "p = " << format_double(p.p) << "\n";
  out << "q = " << format_double(p.q) << "\n";
  out << "c = " << format_double(p.c) << "\n";
  out << "D = " << format_double(p.D) << "\n";
  out << "L = " << format_double(p.L) << "\n";
  out << "eta = " << format_double(p.eta) << "\n";
  out << "sigma = " << format_double(p.sigma) << "\n";
  out << "delta = " << format_double(p.delta) << "\n";
  out << "dataset_size = " << p.dataset_size << "\n";
  out << "dim = " << p.dim << "\n";
  out << "T = " << config.T << "\n";
  out << "seed = " << config.seed << "\n";
  out << "alpha = " << format_double(config.alpha) << "\n";
  out << "gamma_policy = "
      << (config.policy.kind == GammaPolicy::Kind::Constant ? "constant" : "power_limited") << "\n";
  out << "gamma_value = " << format_double(config.policy.value) << "\n";
  out << "power_budget = " << format_double(config.policy.power_budget) << "\n";
  out << "fading = " << (config.fading.kind == FadingSpec::Kind::Constant ? "constant" : "rayleigh")
      << "\n";
  out << "fading_value = " << format_double(config.fading.value) << "\n";
  out << "rayleigh_scale = " << format_double(config.fading.scale) << "\n";
  out << "h_min = " << format_double(config.fading.h_min) << "\n";
  out << "loss = " << (config.loss == LossModel::Kind::Quadratic ? "quadratic" : "logistic")
      << "\n";
  out << "device_sigma = " << format_double(config.spread.device_sigma) << "\n";
  out << "sample_sigma = " << format_double(config.spread.sample_sigma) << "\n";
  out << "heavy_tail = " << format_double(config.spread.heavy_tail) << "\n";
  out << "feature_radius = " << format_double(config.feature_radius) << "\n";
  out << "feature_scale = " << format_double(config.feature_scale) << "\n";
  out << "normalization = "
      << (config.normalization == Normalization::PaperSum ? "paper" : "mean") << "\n";
  out << "project = " << (config.project ? "true" : "false") << "\n";
  out << "theta0_value = " << format_double(config.theta0_value) << "\n";
  out << "mc_reps = " << config.mc_reps << "\n";
  if (!config.eps_targets.empty()) {
    out << "eps_targets = ";
    for (std::size_t i = 0; i < config.eps_targets.size(); ++i)
      out << (i ? "," : "") << format_double(config.eps_targets[i]);
    out << "\n";
  }
  for (const auto& [field, values] : config.sweeps) {
    out << "sweep." << field << " = ";
    for (std::size_t i = 0; i < values.size(); ++i)
      out << (i ? "," : "") << format_double(values[i]);
    out << "\n";
  }
  return out.str();
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  std::vector<SweepPoint> points;
  if (config.sweeps.empty()) {
    points.push_back({});
    return points;
  }
  if (config.sweeps.size() == 1) {
    for (double v : config.sweeps[0].second)
      points.push_back({{{config.sweeps[0].first, v}}});
    return points;
  }
  for (double a : config.sweeps[0].second)
    for (double b : config.sweeps[1].second)
      points.push_back({{{config.sweeps[0].first, a}, {config.sweeps[1].first, b}}});
  return points;
}

ExperimentConfig apply_sweep(const ExperimentConfig& config, const SweepPoint& point) {
  ExperimentConfig out = config;
  for (const auto& [field, value] : point.assignments) {
    double* target = sweep_target(out, field);
    if (target == nullptr)
      throw std::invalid_argument("config: field '" + field + "' is not sweepable");
    *target = value;
  }
  return out;
}

}  // namespace dpwfl
