// Copyright 2026 The NCB Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment configuration files.
//
// Plain text, one `key = value` per line, grouped under [market], [train],
// [eval] and [experiment]. `#` starts a comment. An optional top-level
// `version = 1` names the schema. Lists are comma separated. Distributions
// are written `uniform LO HI`, `discrete A:P A:P ...` or `constant V`.
// Unknown keys are errors. Keys left out take their defaults; per-agent
// lists default to 1.0 for every agent and a single entry is broadcast.
//
// to_config_text writes every field, with doubles in shortest round-trip
// form, so loading the resolved file gives back the identical config.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "ncb/baselines.hpp"
#include "ncb/bpg.hpp"
#include "ncb/exploitability.hpp"
#include "ncb/market.hpp"

namespace ncb {

inline constexpr int kConfigVersion = 1;

/// Raised for unreadable, malformed or invalid configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  MarketConfig market;
  TrainConfig train;
  BestResponseConfig eval;
  Method method = Method::bpg;
  std::vector<double> epsilon_list{0.08};
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";

  /// Throws ConfigError naming the offending field.
  void validate() const {
    try {
      market.validate();
      train.validate();
      eval.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (epsilon_list.empty()) throw ConfigError("experiment.epsilons: must not be empty");
    for (double e : epsilon_list) {
      if (!(e >= 0.0) || !std::isfinite(e)) throw ConfigError("experiment.epsilons: entries must be finite and >= 0");
      if (train.epsilon_normalized && e > 1.0)
        throw ConfigError("experiment.epsilons: normalized entries must lie in [0, 1]");
    }
    if (seeds.empty()) throw ConfigError("experiment.seeds: must not be empty");
    if (output_dir.empty()) throw ConfigError("experiment.output_dir: must not be empty");
  }

  /// Train config for one grid cell.
  TrainConfig train_for(double epsilon, std::uint64_t seed) const {
    TrainConfig t = train;
    t.epsilon = epsilon;
    t.seed = seed;
    return t;
  }

  bool operator==(const ExperimentConfig&) const = default;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline double to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) throw std::invalid_argument("expected a number, got '" + s + "'");
  return v;
}

inline std::uint64_t to_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end)
    throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + s + "'");
}

inline std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& w : split(s, ',')) out.push_back(to_double(w));
  return out;
}

inline std::vector<std::uint64_t> to_u64s(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& w : split(s, ',')) out.push_back(to_u64(w));
  return out;
}

inline Distribution1D to_distribution(const std::string& s) {
  const auto w = words(s);
  if (w.empty()) throw std::invalid_argument("empty distribution");
  if (w[0] == "uniform") {
    if (w.size() != 3) throw std::invalid_argument("expected 'uniform LO HI'");
    return Distribution1D::uniform(to_double(w[1]), to_double(w[2]));
  }
  if (w[0] == "constant") {
    if (w.size() != 2) throw std::invalid_argument("expected 'constant V'");
    return Distribution1D::constant(to_double(w[1]));
  }
  if (w[0] == "discrete") {
    if (w.size() < 2) throw std::invalid_argument("expected 'discrete A:P ...'");
    std::vector<double> atoms, probs;
    for (std::size_t k = 1; k < w.size(); ++k) {
      const auto colon = w[k].find(':');
      if (colon == std::string::npos) throw std::invalid_argument("discrete atom '" + w[k] + "' needs the form A:P");
      atoms.push_back(to_double(w[k].substr(0, colon)));
      probs.push_back(to_double(w[k].substr(colon + 1)));
    }
    return Distribution1D::discrete(std::move(atoms), std::move(probs));
  }
  throw std::invalid_argument("unknown distribution '" + w[0] + "' (expected uniform, discrete or constant)");
}

inline TieBreak to_tie_break(const std::string& s) {
  if (s == "lowest_index") return TieBreak::lowest_index;
  if (s == "random") return TieBreak::random;
  throw std::invalid_argument("expected lowest_index or random, got '" + s + "'");
}

inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? ", " : "") + fmt(v[k]);
  return out;
}

inline std::string fmt(const Distribution1D& d) {
  if (d.kind == Distribution1D::Kind::uniform) return "uniform " + fmt(d.lo) + " " + fmt(d.hi);
  std::string out = "discrete";
  for (std::size_t k = 0; k < d.atoms.size(); ++k) out += " " + fmt(d.atoms[k]) + ":" + fmt(d.probs[k]);
  return out;
}

inline std::string fmt(TieBreak t) { return t == TieBreak::random ? "random" : "lowest_index"; }

inline std::string fmt(Method m) { return to_string(m); }
inline std::string fmt(const std::string& s) { return s; }

inline void parse_into(std::size_t& out, const std::string& v) { out = static_cast<std::size_t>(to_u64(v)); }
inline void parse_into(double& out, const std::string& v) { out = to_double(v); }
inline void parse_into(bool& out, const std::string& v) { out = to_bool(v); }
inline void parse_into(std::vector<double>& out, const std::string& v) { out = to_doubles(v); }
inline void parse_into(std::vector<std::uint64_t>& out, const std::string& v) { out = to_u64s(v); }
inline void parse_into(Distribution1D& out, const std::string& v) { out = to_distribution(v); }
inline void parse_into(TieBreak& out, const std::string& v) { out = to_tie_break(v); }
inline void parse_into(Method& out, const std::string& v) { out = parse_method(v); }
inline void parse_into(std::string& out, const std::string& v) {
  if (v.empty()) throw std::invalid_argument("expected a non-empty value");
  out = v;
}

/// Calls v(section, key, member) for every configurable field, in file order.
template <class Config, class Visitor>
void for_each_field(Config& c, Visitor&& v) {
  v("market", "n_agents", c.market.n_agents);
  v("market", "horizon", c.market.horizon);
  v("market", "impressions_per_step", c.market.impressions_per_step);
  v("market", "budgets", c.market.budgets);
  v("market", "base_values", c.market.base_values);
  v("market", "base_noise", c.market.base_noise);
  v("market", "value_noise", c.market.value_noise);
  v("market", "reserve_price", c.market.reserve_price);
  v("market", "bid_levels", c.market.bid_levels);
  v("market", "tie_break", c.market.tie_break);
  v("market", "seed", c.market.seed);
  v("train", "xi", c.train.xi);
  v("train", "alpha1", c.train.alpha1);
  v("train", "alpha2", c.train.alpha2);
  v("train", "unified_train_iters", c.train.unified_train_iters);
  v("train", "unified_lr", c.train.unified_lr);
  v("train", "unified_episodes", c.train.unified_episodes);
  v("train", "episodes_per_estimate", c.train.episodes_per_estimate);
  v("train", "eval_episodes", c.train.eval_episodes);
  v("train", "max_outer_iters", c.train.max_outer_iters);
  v("train", "convergence_window", c.train.convergence_window);
  v("train", "convergence_tol", c.train.convergence_tol);
  v("train", "epsilon_normalized", c.train.epsilon_normalized);
  v("train", "embed_dim", c.train.embed_dim);
  v("train", "init_scale", c.train.init_scale);
  v("train", "baseline", c.train.baseline);
  v("train", "clamp_competitive_factor", c.train.clamp_competitive_factor);
  v("train", "cold_start_unified", c.train.cold_start_unified);
  v("train", "bpg_zero_br_steps", c.train.bpg_zero_br_steps);
  v("train", "independent_rounds", c.train.independent_rounds);
  v("eval", "br_steps", c.eval.steps);
  v("eval", "br_episodes", c.eval.episodes);
  v("eval", "br_lr", c.eval.lr);
  v("eval", "br_eval_episodes", c.eval.eval_episodes);
  v("eval", "br_baseline", c.eval.baseline);
  v("experiment", "method", c.method);
  v("experiment", "epsilons", c.epsilon_list);
  v("experiment", "seeds", c.seeds);
  v("experiment", "output_dir", c.output_dir);
}

inline std::string fmt_value(const std::vector<double>& v) { return fmt_list(v); }
inline std::string fmt_value(const std::vector<std::uint64_t>& v) { return fmt_list(v); }
inline std::string fmt_value(std::size_t v) { return fmt(static_cast<std::uint64_t>(v)); }
template <class T>
std::string fmt_value(const T& v) {
  return fmt(v);
}

}  // namespace config_detail

/// Parses config text. `source` names the input in error messages.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  using namespace config_detail;
  ExperimentConfig cfg;
  bool budgets_set = false, base_values_set = false;
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    auto fail = [&](const std::string& what) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + what);
    };
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "market" && section != "train" && section != "eval" && section != "experiment")
        fail("unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) fail("missing key before '='");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!seen.insert(full).second) fail("duplicate key '" + full + "'");
    if (section.empty()) {
      if (key != "version") fail("key '" + key + "' must appear inside a section");
      try {
        if (to_u64(value) != kConfigVersion) fail("unsupported config version " + value);
      } catch (const std::invalid_argument& e) {
        fail("version: " + std::string(e.what()));
      }
      continue;
    }
    bool matched = false;
    try {
      for_each_field(cfg, [&](const char* s, const char* k, auto& member) {
        if (matched || section != s || key != k) return;
        matched = true;
        parse_into(member, value);
      });
    } catch (const std::invalid_argument& e) {
      fail(full + ": " + e.what());
    }
    if (!matched) fail("unknown key '" + key + "' in [" + section + "]");
    budgets_set |= full == "market.budgets";
    base_values_set |= full == "market.base_values";
  }
  // Per-agent lists: default 1.0 each, a single entry is broadcast.
  const std::size_t n = cfg.market.n_agents;
  auto fill = [n](std::vector<double>& v, bool set) {
    if (!set) v.assign(n, 1.0);
    else if (v.size() == 1 && n > 1) v.assign(n, v.front());
  };
  fill(cfg.market.budgets, budgets_set);
  fill(cfg.market.base_values, base_values_set);
  cfg.validate();
  return cfg;
}

/// Reads and parses a config file. Errors name the path.
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

/// Every field, fully resolved. parse_config(to_config_text(c)) == c.
inline std::string to_config_text(const ExperimentConfig& cfg) {
  using namespace config_detail;
  std::string out = "# resolved configuration\nversion = " + std::to_string(kConfigVersion) + "\n";
  std::string section;
  for_each_field(cfg, [&](const char* s, const char* k, const auto& member) {
    if (section != s) {
      section = s;
      out += "\n[" + section + "]\n";
    }
    out += std::string(k) + " = " + fmt_value(member) + "\n";
  });
  return out;
}

inline void write_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_config_text(cfg);
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace ncb
