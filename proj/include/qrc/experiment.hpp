// Copyright 2026 The QRC Measurement Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Declarative experiment driver behind the `qrc` command-line tool.
//
// A run config (JSON) fixes a reservoir family, a task, a list of protocol
// entries and the sweep axes. Every sweep point is a (protocol entry, g,
// N_meas, reservoir seed) tuple; each point yields one capacity row per
// delay / horizon plus derived rows. Output order is the enumeration order
// of sweep points and never depends on the worker count.

#include "qrc/observables.hpp"
#include "qrc/parallel.hpp"
#include "qrc/protocols.hpp"
#include "qrc/random.hpp"
#include "qrc/reservoir.hpp"
#include "qrc/resources.hpp"
#include "qrc/tasks.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#ifndef QRC_VERSION
#define QRC_VERSION "1.0.0"
#endif

namespace qrc {

inline constexpr const char* kVersion = QRC_VERSION;

using Json = nlohmann::json;

/// Configuration problem, tagged with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ReservoirConfig {
  int n = 6;
  double h = 10.0;
  double j_s = 1.0;
  double dt = 10.0;
};

enum class TaskKind { stm, forecast };

struct TaskConfig {
  TaskKind kind = TaskKind::stm;
  int n_t = 1000;
  int n_wo = kDefaultWashout;
  std::uint64_t input_seed = 1;
  /// Forecast input: a series file, or the synthetic stand-in if empty.
  std::string series_file;
  std::uint64_t synthetic_seed = 1;
};

struct ProtocolEntry {
  std::string label;
  Protocol protocol = Protocol::rsp;
  NoiseMode noise = NoiseMode::ideal_unperturbed;
  std::vector<double> g;
  std::vector<EnsembleSize> n_meas;
  TrajectoryState trajectory_state = TrajectoryState::pure;
};

struct ObservableConfig {
  OrderSelector orders = OrderSelector::order1;
  std::vector<Axis> axes{Axis::x, Axis::y, Axis::z};

  std::string descriptor() const {
    std::string s = to_string(orders);
    if (axes.size() != 3) {
      s += ':';
      for (Axis a : axes) s += axis_char(a);
    }
    return s;
  }
};

struct ResourceSweep {
  double dt = 1.0;
  double tau_m = 0.0;
  double tau_r = 0.0;
  int n_wo = kDefaultWashout;
  std::vector<std::int64_t> n_t{1000};
  std::vector<EnsembleSize> n_meas{EnsembleSize::finite(1)};
  /// OLP strengths for the equal-uncertainty comparison rows.
  std::vector<double> g;
  /// Strength of the reference (rewinding) measurement; inf = projective.
  double reference_g = std::numeric_limits<double>::infinity();
};

struct ExperimentConfig {
  ReservoirConfig reservoir;
  TaskConfig task;
  std::vector<ProtocolEntry> protocols;
  std::vector<int> targets;  ///< delays (stm) or horizons (forecast)
  std::vector<std::uint64_t> seeds{1};
  ObservableConfig observables;
  double ridge = 0.0;
  std::uint64_t noise_seed = 0;
  std::string output = "qrc_results";
  ResourceSweep resources;
  /// The config exactly as parsed (after overrides); echoed in manifests.
  Json source;
};

namespace detail {

/// Path-tracking accessor that rejects unknown keys.
class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string child_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const Json* find(std::string_view key) {
    used_.insert(std::string(key));
    const auto it = node_.find(std::string(key));
    return it == node_.end() ? nullptr : &*it;
  }

  void reject_unknown(const std::set<std::string>& ignored = {}) const {
    for (const auto& [key, value] : node_.items())
      if (!used_.count(key) && !ignored.count(key))
        throw ConfigError(child_path(key), "unknown field");
  }

  const std::string& path() const noexcept { return path_; }

 private:
  const Json& node_;
  std::string path_;
  std::set<std::string> used_;
};

inline double json_number(const Json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  throw ConfigError(path, "expected a number");
}

inline std::int64_t json_integer(const Json& v, const std::string& path) {
  const double d = json_number(v, path);
  if (!std::isfinite(d) || std::floor(d) != d || std::abs(d) > 9.0e15)
    throw ConfigError(path, "expected an integer");
  return static_cast<std::int64_t>(d);
}

inline std::uint64_t json_seed(const Json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  const auto i = json_integer(v, path);
  if (i < 0) throw ConfigError(path, "seeds must be non-negative");
  return static_cast<std::uint64_t>(i);
}

inline std::string json_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

inline EnsembleSize json_ensemble(const Json& v, const std::string& path) {
  try {
    if (v.is_string()) return EnsembleSize::parse(v.get<std::string>());
    if (v.is_number()) return EnsembleSize::from_double(v.get<double>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a positive integer or \"inf\"");
}

/// Scalar or list; `fn(element, element_path)` converts one element.
template <typename T, typename Fn>
std::vector<T> json_list(const Json& v, const std::string& path, Fn fn) {
  std::vector<T> out;
  if (v.is_array()) {
    if (v.empty()) throw ConfigError(path, "list must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(fn(v[i], path + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(fn(v, path));
  }
  return out;
}

/// Integer list; also accepts a {"from": a, "to": b} inclusive range.
inline std::vector<int> json_int_list(const Json& v, const std::string& path) {
  if (v.is_object()) {
    ConfigReader r(v, path);
    const Json* from = r.find("from");
    const Json* to = r.find("to");
    r.reject_unknown();
    if (!from || !to) throw ConfigError(path, "range needs 'from' and 'to'");
    const auto a = json_integer(*from, r.child_path("from"));
    const auto b = json_integer(*to, r.child_path("to"));
    if (b < a) throw ConfigError(path, "empty range");
    std::vector<int> out;
    for (auto i = a; i <= b; ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  return json_list<int>(v, path, [](const Json& e, const std::string& p) {
    return static_cast<int>(json_integer(e, p));
  });
}

template <typename Parse>
auto parse_enum(const Json& v, const std::string& path, Parse parse) {
  const auto s = json_string(v, path);
  try {
    return parse(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

inline std::vector<double> json_g_list(const Json& v, const std::string& path) {
  return json_list<double>(v, path, [](const Json& e, const std::string& p) {
    const double g = json_number(e, p);
    if (!(g >= 0.0)) throw ConfigError(p, "g must be >= 0");
    return g;
  });
}

inline std::vector<EnsembleSize> json_ensemble_list(const Json& v, const std::string& path) {
  return json_list<EnsembleSize>(v, path, json_ensemble);
}

}  // namespace detail

/// Parses a run / resources config. Unknown fields are errors; a
/// "manifest" key (present in emitted manifests) is ignored.
inline ExperimentConfig parse_config(const Json& root) {
  using namespace detail;
  ExperimentConfig cfg;
  cfg.source = root;
  ConfigReader top(root, "");

  if (const Json* r = top.find("reservoir")) {
    ConfigReader rd(*r, "reservoir");
    if (const Json* v = rd.find("n")) cfg.reservoir.n = static_cast<int>(json_integer(*v, "reservoir.n"));
    if (const Json* v = rd.find("h")) cfg.reservoir.h = json_number(*v, "reservoir.h");
    if (const Json* v = rd.find("j_s")) cfg.reservoir.j_s = json_number(*v, "reservoir.j_s");
    if (const Json* v = rd.find("dt")) cfg.reservoir.dt = json_number(*v, "reservoir.dt");
    rd.reject_unknown();
    if (cfg.reservoir.n < 2 || cfg.reservoir.n > kMaxQubits)
      throw ConfigError("reservoir.n", "must be in [2, " + std::to_string(kMaxQubits) + "]");
    if (!(cfg.reservoir.h > 0.0)) throw ConfigError("reservoir.h", "must be > 0");
    if (!(cfg.reservoir.j_s > 0.0)) throw ConfigError("reservoir.j_s", "must be > 0");
    if (!(cfg.reservoir.dt > 0.0)) throw ConfigError("reservoir.dt", "must be > 0");
  }

  bool n_t_given = false;
  if (const Json* t = top.find("task")) {
    ConfigReader tr(*t, "task");
    if (const Json* v = tr.find("kind"))
      cfg.task.kind = parse_enum(*v, "task.kind", [](std::string_view s) {
        if (s == "stm") return TaskKind::stm;
        if (s == "forecast") return TaskKind::forecast;
        throw std::invalid_argument("expected 'stm' or 'forecast'");
      });
    if (const Json* v = tr.find("n_t")) {
      cfg.task.n_t = static_cast<int>(json_integer(*v, "task.n_t"));
      n_t_given = true;
    }
    if (const Json* v = tr.find("n_wo")) cfg.task.n_wo = static_cast<int>(json_integer(*v, "task.n_wo"));
    if (const Json* v = tr.find("input_seed")) cfg.task.input_seed = json_seed(*v, "task.input_seed");
    if (const Json* v = tr.find("series_file")) cfg.task.series_file = json_string(*v, "task.series_file");
    if (const Json* v = tr.find("synthetic_seed"))
      cfg.task.synthetic_seed = json_seed(*v, "task.synthetic_seed");
    tr.reject_unknown();
  }
  if (!n_t_given && cfg.task.kind == TaskKind::forecast) cfg.task.n_t = 2000;
  if (cfg.task.n_wo < 1) throw ConfigError("task.n_wo", "must be >= 1");
  if (cfg.task.n_t < cfg.task.n_wo + 2)
    throw ConfigError("task.n_t", "must be at least n_wo + 2");

  if (const Json* o = top.find("observables")) {
    ConfigReader orr(*o, "observables");
    if (const Json* v = orr.find("orders"))
      cfg.observables.orders = parse_enum(*v, "observables.orders", parse_order_selector);
    if (const Json* v = orr.find("axes")) {
      const auto s = json_string(*v, "observables.axes");
      std::vector<Axis> axes;
      for (char c : s) {
        try {
          axes.push_back(parse_axis(std::string_view(&c, 1)));
        } catch (const std::invalid_argument& e) {
          throw ConfigError("observables.axes", e.what());
        }
      }
      std::sort(axes.begin(), axes.end());
      axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
      if (axes.empty()) throw ConfigError("observables.axes", "needs at least one axis");
      cfg.observables.axes = axes;
    }
    orr.reject_unknown();
  }

  std::optional<std::vector<double>> sweep_g;
  std::optional<std::vector<EnsembleSize>> sweep_n;
  if (const Json* s = top.find("sweep")) {
    ConfigReader sr(*s, "sweep");
    const Json* tau = sr.find("tau");
    const Json* eta = sr.find("eta");
    if (tau && eta) throw ConfigError("sweep", "give either 'tau' or 'eta', not both");
    if (tau) {
      if (cfg.task.kind != TaskKind::stm) throw ConfigError("sweep.tau", "delays apply to the stm task");
      cfg.targets = json_int_list(*tau, "sweep.tau");
    }
    if (eta) {
      if (cfg.task.kind != TaskKind::forecast)
        throw ConfigError("sweep.eta", "horizons apply to the forecast task");
      cfg.targets = json_int_list(*eta, "sweep.eta");
    }
    if (const Json* v = sr.find("g")) sweep_g = json_g_list(*v, "sweep.g");
    if (const Json* v = sr.find("n_meas")) sweep_n = json_ensemble_list(*v, "sweep.n_meas");
    if (const Json* v = sr.find("seeds")) {
      if (v->is_object()) {
        const auto range = json_int_list(*v, "sweep.seeds");
        cfg.seeds.assign(range.begin(), range.end());
        for (auto sd : range)
          if (sd < 0) throw ConfigError("sweep.seeds", "seeds must be non-negative");
      } else {
        cfg.seeds = json_list<std::uint64_t>(*v, "sweep.seeds", json_seed);
      }
    }
    sr.reject_unknown();
  }
  if (cfg.targets.empty()) {
    const int hi = cfg.task.kind == TaskKind::stm ? kDefaultMaxDelay : 20;
    for (int i = 1; i <= hi; ++i) cfg.targets.push_back(i);
  }
  for (std::size_t i = 0; i < cfg.targets.size(); ++i)
    if (cfg.targets[i] < 1 || cfg.targets[i] >= cfg.task.n_t)
      throw ConfigError(std::string(cfg.task.kind == TaskKind::stm ? "sweep.tau" : "sweep.eta") + "[" +
                            std::to_string(i) + "]",
                        "must be in [1, n_t)");

  if (const Json* p = top.find("protocols")) {
    if (!p->is_array() || p->empty()) throw ConfigError("protocols", "expected a non-empty list");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < p->size(); ++i) {
      const std::string path = "protocols[" + std::to_string(i) + "]";
      ConfigReader er((*p)[i], path);
      ProtocolEntry e;
      const Json* proto = er.find("protocol");
      if (!proto) throw ConfigError(er.child_path("protocol"), "required");
      e.protocol = parse_enum(*proto, er.child_path("protocol"), parse_protocol);
      e.label = to_string(e.protocol);
      if (const Json* v = er.find("label")) e.label = json_string(*v, er.child_path("label"));
      if (const Json* v = er.find("noise"))
        e.noise = parse_enum(*v, er.child_path("noise"), parse_noise_mode);
      else
        e.noise = e.protocol == Protocol::olp ? NoiseMode::ideal_with_backaction
                                              : NoiseMode::ideal_unperturbed;
      if (const Json* v = er.find("g"))
        e.g = json_g_list(*v, er.child_path("g"));
      else if (sweep_g)
        e.g = *sweep_g;
      else if (e.protocol == Protocol::olp)
        throw ConfigError(er.child_path("g"), "required for OLP entries (or set sweep.g)");
      else
        e.g = {10.0};
      if (const Json* v = er.find("n_meas"))
        e.n_meas = json_ensemble_list(*v, er.child_path("n_meas"));
      else if (sweep_n)
        e.n_meas = *sweep_n;
      else
        e.n_meas = {EnsembleSize::infinite()};
      if (const Json* v = er.find("trajectory_state"))
        e.trajectory_state = parse_enum(*v, er.child_path("trajectory_state"), [](std::string_view s) {
          if (s == "pure") return TrajectoryState::pure;
          if (s == "density") return TrajectoryState::density;
          throw std::invalid_argument("expected 'pure' or 'density'");
        });
      er.reject_unknown();
      if (!labels.insert(e.label).second) throw ConfigError(er.child_path("label"), "duplicate label");
      for (double g : e.g)
        for (const auto& n : e.n_meas) {
          ProtocolRun run;
          run.protocol = e.protocol;
          run.noise = e.noise;
          run.g = g;
          run.n_meas = n;
          run.n_wo = cfg.task.n_wo;
          try {
            validate_run(run);
          } catch (const std::invalid_argument& ex) {
            throw ConfigError(path, ex.what());
          }
        }
      cfg.protocols.push_back(std::move(e));
    }
  }

  if (const Json* r = top.find("readout")) {
    ConfigReader rr(*r, "readout");
    if (const Json* v = rr.find("ridge")) cfg.ridge = json_number(*v, "readout.ridge");
    rr.reject_unknown();
    if (!(cfg.ridge >= 0.0)) throw ConfigError("readout.ridge", "must be >= 0");
  }
  if (const Json* v = top.find("noise_seed")) cfg.noise_seed = json_seed(*v, "noise_seed");
  if (const Json* v = top.find("output")) cfg.output = json_string(*v, "output");

  if (const Json* r = top.find("resources")) {
    ConfigReader rr(*r, "resources");
    auto& rs = cfg.resources;
    if (const Json* v = rr.find("dt")) rs.dt = json_number(*v, "resources.dt");
    if (const Json* v = rr.find("tau_m")) rs.tau_m = json_number(*v, "resources.tau_m");
    if (const Json* v = rr.find("tau_r")) rs.tau_r = json_number(*v, "resources.tau_r");
    if (const Json* v = rr.find("n_wo")) rs.n_wo = static_cast<int>(json_integer(*v, "resources.n_wo"));
    if (const Json* v = rr.find("n_t"))
      rs.n_t = json_list<std::int64_t>(*v, "resources.n_t", json_integer);
    if (const Json* v = rr.find("n_meas")) {
      rs.n_meas = json_ensemble_list(*v, "resources.n_meas");
      for (const auto& n : rs.n_meas)
        if (n.is_infinite())
          throw ConfigError("resources.n_meas", "experimental time needs a finite N_meas");
    }
    if (const Json* v = rr.find("g")) rs.g = json_g_list(*v, "resources.g");
    if (const Json* v = rr.find("reference_g")) rs.reference_g = json_number(*v, "resources.reference_g");
    rr.reject_unknown();
    if (!(rs.dt >= 0.0) || !(rs.tau_m >= 0.0) || !(rs.tau_r >= 0.0))
      throw ConfigError("resources", "durations must be >= 0");
    if (rs.n_wo < 2) throw ConfigError("resources.n_wo", "must be >= 2 for the g thresholds");
    for (auto n_t : rs.n_t)
      if (n_t < rs.n_wo + 1) throw ConfigError("resources.n_t", "needs n_t > n_wo");
    for (double g : rs.g)
      if (!(g > 0.0)) throw ConfigError("resources.g", "must be > 0");
    if (!(rs.reference_g > 0.0)) throw ConfigError("resources.reference_g", "must be > 0");
  }

  top.reject_unknown({"manifest"});
  return cfg;
}

/// Applies `path=value` to a JSON config. Path segments are object keys or
/// array indices ("protocols.1.g"); the value is parsed as JSON when
/// possible and taken as a string otherwise.
inline void apply_override(Json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError(std::string(assignment), "override must look like path=value");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError(path, "empty path segment");
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw ConfigError(path, "'" + key + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError(path, "index " + key + " out of range");
      node = &(*node)[idx];
    } else {
      if (node->is_null()) *node = Json::object();
      if (!node->is_object()) throw ConfigError(path, "'" + key + "' is not inside an object");
      node = &(*node)[key];
    }
    if (last) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path, "not valid JSON");
  return j;
}

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline constexpr const char* kRunCsvHeader =
    "task,protocol,label,noise,g,n_meas,n_wo,reservoir_seed,input_seed,observables,target,"
    "target_param,metric,value,nominal_uncertainty";

struct ResultRow {
  std::string task;
  std::string protocol;
  std::string label;
  std::string noise;
  double g = 0.0;
  std::string n_meas;
  int n_wo = 0;
  std::string reservoir_seed;
  std::string input_seed;
  std::string observables;
  std::string target;
  std::string target_param;
  std::string metric;
  double value = 0.0;
  std::optional<double> nominal_uncertainty;

  std::string to_csv() const {
    std::string s;
    for (const std::string& f :
         {csv_field(task), csv_field(protocol), csv_field(label), csv_field(noise), format_double(g),
          csv_field(n_meas), std::to_string(n_wo), csv_field(reservoir_seed), csv_field(input_seed),
          csv_field(observables), csv_field(target), csv_field(target_param), csv_field(metric),
          format_double(value),
          nominal_uncertainty ? format_double(*nominal_uncertainty) : std::string()}) {
      if (!s.empty()) s += ',';
      s += f;
    }
    return s;
  }
};

struct RunOutput {
  std::vector<ResultRow> rows;
  Json manifest;

  std::string csv() const {
    std::string s = std::string(kRunCsvHeader) + "\n";
    for (const auto& r : rows) s += r.to_csv() + "\n";
    return s;
  }
};

inline Dataset build_dataset(const ExperimentConfig& cfg) {
  if (cfg.task.kind == TaskKind::stm)
    return generate_stm_inputs(cfg.task.n_t, cfg.task.input_seed, cfg.task.n_wo);
  if (!cfg.task.series_file.empty())
    return load_series_file(cfg.task.series_file, cfg.task.n_t, cfg.task.n_wo);
  const auto raw = synthetic_laser_series(cfg.task.n_t, cfg.task.synthetic_seed);
  return forecast_dataset("synthetic-laser", raw, cfg.task.n_t, cfg.task.n_wo);
}

namespace detail {

struct SweepPoint {
  std::size_t entry = 0;
  double g = 0.0;
  EnsembleSize n_meas = EnsembleSize::infinite();
  std::size_t seed_index = 0;
  std::uint64_t noise_seed = 0;
};

inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Executes every sweep point of a run config and assembles result rows.
inline RunOutput execute_run(const ExperimentConfig& cfg, int workers = 0) {
  if (cfg.protocols.empty()) throw ConfigError("protocols", "required for 'run'");
  const Dataset data = build_dataset(cfg);
  const auto inputs = data.samples();
  const ObservableSet observables =
      ObservableSet::build(cfg.reservoir.n, cfg.observables.orders, cfg.observables.axes);
  const bool stm = cfg.task.kind == TaskKind::stm;

  std::vector<TargetSeries> targets;
  for (int t : cfg.targets)
    targets.push_back(stm ? stm_targets(data.inputs, t) : forecast_targets(data.inputs, t));

  std::vector<detail::SweepPoint> points;
  for (std::size_t e = 0; e < cfg.protocols.size(); ++e)
    for (double g : cfg.protocols[e].g)
      for (const auto& n : cfg.protocols[e].n_meas)
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s)
          points.push_back({e, g, n, s, derive_seed(cfg.noise_seed, points.size())});

  const int threads = resolve_workers(workers);
  const int inner = points.size() == 1 ? threads : 1;
  std::vector<std::vector<double>> capacities(points.size());
  parallel_for(points.size(), points.size() == 1 ? 1 : threads, [&](std::size_t i) {
    const auto& p = points[i];
    const auto& entry = cfg.protocols[p.entry];
    const ReservoirSpec res = build_reservoir(cfg.reservoir.n, cfg.reservoir.h, cfg.reservoir.j_s,
                                              cfg.reservoir.dt, cfg.seeds[p.seed_index]);
    ProtocolRun run;
    run.protocol = entry.protocol;
    run.noise = entry.noise;
    run.g = p.g;
    run.n_meas = p.n_meas;
    run.n_wo = cfg.task.n_wo;
    run.observables = observables;
    run.seed = p.noise_seed;
    run.workers = inner;
    run.trajectory_state = entry.trajectory_state;
    const ObservableSeries series = run_protocol(res, inputs, run);
    for (const auto& t : targets) capacities[i].push_back(evaluate_task(series, data, t, cfg.ridge).capacity);
  });

  RunOutput out;
  const std::string task = stm ? "stm" : "forecast";
  const std::string target = stm ? "delay" : "horizon";
  auto base_row = [&](const detail::SweepPoint& p) {
    const auto& entry = cfg.protocols[p.entry];
    ResultRow r;
    r.task = task;
    r.protocol = to_string(entry.protocol);
    r.label = entry.label;
    r.noise = to_string(entry.noise);
    r.g = p.g;
    r.n_meas = p.n_meas.to_string();
    r.n_wo = cfg.task.n_wo;
    r.reservoir_seed = std::to_string(cfg.seeds[p.seed_index]);
    r.input_seed = stm ? std::to_string(cfg.task.input_seed) : data.name;
    r.observables = cfg.observables.descriptor();
    r.target = target;
    const bool noisy = entry.noise != NoiseMode::ideal_unperturbed &&
                       entry.noise != NoiseMode::ideal_with_backaction && !p.n_meas.is_infinite();
    if (noisy) r.nominal_uncertainty = uncertainty_bound(p.g, p.n_meas.as_double(), 1);
    return r;
  };

  // Points of one (entry, g, N_meas) group are contiguous, seeds innermost.
  const std::size_t group = cfg.seeds.size();
  for (std::size_t g0 = 0; g0 < points.size(); g0 += group) {
    std::vector<std::vector<double>> per_target(cfg.targets.size());
    std::vector<double> sums;
    for (std::size_t i = g0; i < g0 + group; ++i) {
      double total = 0.0;
      for (std::size_t t = 0; t < cfg.targets.size(); ++t) {
        ResultRow r = base_row(points[i]);
        r.target_param = std::to_string(cfg.targets[t]);
        r.metric = "capacity";
        r.value = capacities[i][t];
        out.rows.push_back(std::move(r));
        per_target[t].push_back(capacities[i][t]);
        total += capacities[i][t];
      }
      sums.push_back(total);
      if (stm) {
        ResultRow r = base_row(points[i]);
        r.metric = "sum_capacity";
        r.value = total;
        out.rows.push_back(std::move(r));
      }
    }
    auto aggregate = [&](const std::vector<double>& v, std::string param, const std::string& metric) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (int which = 0; which < 2; ++which) {
        ResultRow r = base_row(points[g0]);
        r.reservoir_seed = "all";
        r.target_param = param;
        r.metric = metric + (which == 0 ? "_mean" : "_std");
        r.value = which == 0 ? mean : detail::sample_std(v);
        out.rows.push_back(std::move(r));
      }
    };
    for (std::size_t t = 0; t < cfg.targets.size(); ++t)
      aggregate(per_target[t], std::to_string(cfg.targets[t]), "capacity");
    if (stm) aggregate(sums, "", "sum_capacity");
  }

  Json seeds = Json::array();
  for (auto s : cfg.seeds) seeds.push_back(s);
  out.manifest = cfg.source;
  out.manifest["manifest"] = {{"version", kVersion},
                              {"dataset", data.name},
                              {"n_t", data.n_t()},
                              {"train_count", data.train_count},
                              {"test_count", data.test_count},
                              {"reservoir_seeds", seeds},
                              {"input_seed", cfg.task.input_seed},
                              {"noise_seed", cfg.noise_seed},
                              {"sweep_points", points.size()},
                              {"rows", out.rows.size()}};
  return out;
}

inline constexpr const char* kResourcesCsvHeader =
    "protocol,label,g,n_meas,n_t,n_wo,dt,tau_m,tau_r,metric,order,value";

/// Experimental-time table: every protocol at every (N_t, N_meas), the OLP
/// ensemble and time that match the reference measurement's uncertainty at
/// each listed g, and the g thresholds.
inline std::string execute_resources(const ExperimentConfig& cfg) {
  const auto& rs = cfg.resources;
  std::string csv = std::string(kResourcesCsvHeader) + "\n";
  auto row = [&](const std::string& protocol, const std::string& label, std::optional<double> g,
                 const std::string& n_meas, std::optional<std::int64_t> n_t, const std::string& metric,
                 std::optional<int> order, double value) {
    csv += protocol + "," + label + "," + (g ? format_double(*g) : "") + "," + n_meas + "," +
           (n_t ? std::to_string(*n_t) : "") + "," + std::to_string(rs.n_wo) + "," +
           format_double(rs.dt) + "," + format_double(rs.tau_m) + "," + format_double(rs.tau_r) +
           "," + metric + "," + (order ? std::to_string(*order) : "") + "," + format_double(value) +
           "\n";
  };
  for (int order = 1; order <= 2; ++order)
    row("olp", "threshold", std::nullopt, "", std::nullopt, "g_threshold", order,
        g_threshold(rs.n_wo, order));
  for (auto n_t : rs.n_t)
    for (const auto& n : rs.n_meas) {
      ResourceParams p;
      p.dt = rs.dt;
      p.tau_m = rs.tau_m;
      p.tau_r = rs.tau_r;
      p.n_t = n_t;
      p.n_wo = rs.n_wo;
      p.n_meas = n;
      for (Protocol proto : {Protocol::rsp, Protocol::rwp, Protocol::olp})
        row(to_string(proto), to_string(proto), std::nullopt, n.to_string(), n_t, "experimental_time",
            std::nullopt, experimental_time(proto, p));
      for (double g : rs.g)
        for (int order = 1; order <= 2; ++order) {
          const auto n_eq = equivalent_measurements(g, rs.reference_g, n.count(), order);
          ResourceParams q = p;
          q.n_meas = EnsembleSize::finite(n_eq);
          row("olp", "equivalent", g, n.to_string(), n_t, "n_meas_equivalent", order,
              static_cast<double>(n_eq));
          row("olp", "equivalent", g, n.to_string(), n_t, "experimental_time_equivalent", order,
              experimental_time(Protocol::olp, q));
        }
    }
  return csv;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace qrc
