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

// Shared linear-softmax bidding policy pi(a | s, i).
//
// The input is the agent's local features concatenated with a learned
// embedding row for the agent index:
//
//   z = [step/T, budget_remaining/B_i, context_0, context_1, embed[i]]
//   logits = W z,  W is K x (F + E)
//
// Parameters are one flat vector: W in row-major order, then the N x E
// embedding table. Scores d ln pi / d params are closed form.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ncb/market.hpp"
#include "ncb/rng.hpp"

namespace ncb {

inline constexpr std::size_t kFeatureDim = 2 + kContextDim;
inline constexpr std::size_t kMaxActions = 64;
inline constexpr std::size_t kMaxEmbedDim = 64;

struct PolicyArch {
  std::uint32_t feature_dim = kFeatureDim;
  std::uint32_t n_actions = 2;
  std::uint32_t n_agents = 1;
  std::uint32_t embed_dim = 2;

  std::size_t input_dim() const { return feature_dim + embed_dim; }
  std::size_t weight_count() const { return input_dim() * n_actions; }
  std::size_t param_count() const { return weight_count() + std::size_t{n_agents} * embed_dim; }

  bool operator==(const PolicyArch&) const = default;
};

inline PolicyArch arch_for(const MarketConfig& config, std::size_t embed_dim) {
  if (config.n_actions() > kMaxActions) throw std::invalid_argument("too many bid levels");
  if (embed_dim > kMaxEmbedDim) throw std::invalid_argument("embed_dim too large");
  return PolicyArch{static_cast<std::uint32_t>(kFeatureDim), static_cast<std::uint32_t>(config.n_actions()),
                    static_cast<std::uint32_t>(config.n_agents), static_cast<std::uint32_t>(embed_dim)};
}

struct PolicyParams {
  PolicyArch arch;
  std::vector<double> values;

  PolicyParams() = default;
  explicit PolicyParams(PolicyArch a) : arch(a), values(a.param_count(), 0.0) {}

  static PolicyParams zeros(PolicyArch a) { return PolicyParams(a); }

  /// Entries i.i.d. Uniform(-scale, scale).
  static PolicyParams random(PolicyArch a, Rng& rng, double scale = 0.1) {
    PolicyParams p(a);
    for (auto& v : p.values) v = rng.uniform(-scale, scale);
    return p;
  }

  double& weight(std::size_t action, std::size_t input) { return values[action * arch.input_dim() + input]; }
  double weight(std::size_t action, std::size_t input) const { return values[action * arch.input_dim() + input]; }

  std::span<double> embedding(std::size_t agent) {
    return std::span<double>(values).subspan(arch.weight_count() + agent * arch.embed_dim, arch.embed_dim);
  }
  std::span<const double> embedding(std::size_t agent) const {
    return std::span<const double>(values).subspan(arch.weight_count() + agent * arch.embed_dim, arch.embed_dim);
  }

  void validate() const {
    if (arch.feature_dim != kFeatureDim) throw std::invalid_argument("policy: unsupported feature_dim");
    if (arch.n_actions < 2 || arch.n_actions > kMaxActions) throw std::invalid_argument("policy: bad n_actions");
    if (arch.n_agents < 1) throw std::invalid_argument("policy: n_agents must be >= 1");
    if (arch.embed_dim > kMaxEmbedDim) throw std::invalid_argument("policy: embed_dim too large");
    if (values.size() != arch.param_count()) throw std::invalid_argument("policy: parameter count does not match arch");
    for (double v : values)
      if (!std::isfinite(v)) throw std::invalid_argument("policy: non-finite parameter");
  }

  bool operator==(const PolicyParams&) const = default;
};

struct ActionDistribution {
  std::vector<double> probs;
};

inline std::array<double, kFeatureDim> features(const AgentLocalState& s) {
  const double total = s.budget_remaining + s.spent;
  const double budget_frac = total > 0.0 ? std::clamp(s.budget_remaining / total, 0.0, 1.0) : 0.0;
  const double time_frac = s.horizon > 0 ? static_cast<double>(s.step) / static_cast<double>(s.horizon) : 0.0;
  return {time_frac, budget_frac, s.context[0], s.context[1]};
}

namespace detail {
using InputBuffer = std::array<double, kFeatureDim + kMaxEmbedDim>;

inline void input_vector(const PolicyParams& p, const AgentLocalState& s, std::span<double> z) {
  if (s.agent_index >= p.arch.n_agents) throw std::out_of_range("policy: agent index outside embedding table");
  const auto f = features(s);
  std::copy(f.begin(), f.end(), z.begin());
  const auto e = p.embedding(s.agent_index);
  std::copy(e.begin(), e.end(), z.begin() + kFeatureDim);
}
}  // namespace detail

/// Writes the K logits into `out`. No allocation.
inline void logits_into(const PolicyParams& p, const AgentLocalState& s, std::span<double> out) {
  const std::size_t K = p.arch.n_actions, D = p.arch.input_dim();
  detail::InputBuffer zbuf{};
  std::span<double> z(zbuf.data(), D);
  detail::input_vector(p, s, z);
  for (std::size_t k = 0; k < K; ++k) {
    const double* w = &p.values[k * D];
    double l = 0.0;
    for (std::size_t d = 0; d < D; ++d) l += w[d] * z[d];
    out[k] = l;
  }
}

/// Writes softmax probabilities into `out` (size K). No allocation.
inline void probs_into(const PolicyParams& p, const AgentLocalState& s, std::span<double> out) {
  const std::size_t K = p.arch.n_actions;
  logits_into(p, s, out);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, out[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    out[k] = std::exp(out[k] - mx);
    sum += out[k];
  }
  for (std::size_t k = 0; k < K; ++k) out[k] /= sum;
}

inline ActionDistribution distribution(const PolicyParams& p, const AgentLocalState& s) {
  ActionDistribution d;
  d.probs.resize(p.arch.n_actions);
  probs_into(p, s, d.probs);
  return d;
}

inline int sample_action(const PolicyParams& p, const AgentLocalState& s, Rng& rng) {
  std::array<double, kMaxActions> buf{};
  std::span<double> probs(buf.data(), p.arch.n_actions);
  probs_into(p, s, probs);
  return static_cast<int>(rng.categorical(probs));
}

inline double log_prob(const PolicyParams& p, const AgentLocalState& s, int a) {
  const std::size_t K = p.arch.n_actions;
  if (a < 0 || static_cast<std::size_t>(a) >= K) throw std::out_of_range("log_prob: action out of range");
  std::array<double, kMaxActions> buf{};
  std::span<double> logits(buf.data(), K);
  logits_into(p, s, logits);
  double mx = -INFINITY;
  for (double l : logits) mx = std::max(mx, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return logits[a] - mx - std::log(sum);
}

/// Adds weight * d ln pi(a | s, i) / d params into `out`.
inline void accumulate_log_prob_grad(const PolicyParams& p, const AgentLocalState& s, int a, double weight,
                                     std::span<double> out) {
  if (weight == 0.0) return;
  const std::size_t K = p.arch.n_actions, D = p.arch.input_dim(), E = p.arch.embed_dim;
  if (a < 0 || static_cast<std::size_t>(a) >= K) throw std::out_of_range("log_prob_grad: action out of range");
  std::array<double, kMaxActions> buf{};
  std::span<double> probs(buf.data(), K);
  probs_into(p, s, probs);
  detail::InputBuffer zbuf{};
  std::span<double> z(zbuf.data(), D);
  detail::input_vector(p, s, z);
  const std::size_t emb_off = p.arch.weight_count() + s.agent_index * E;
  for (std::size_t k = 0; k < K; ++k) {
    const double g = weight * ((static_cast<int>(k) == a ? 1.0 : 0.0) - probs[k]);
    double* row = &out[k * D];
    for (std::size_t d = 0; d < D; ++d) row[d] += g * z[d];
    const double* w = &p.values[k * D + kFeatureDim];
    for (std::size_t e = 0; e < E; ++e) out[emb_off + e] += g * w[e];
  }
}

inline std::vector<double> log_prob_grad(const PolicyParams& p, const AgentLocalState& s, int a) {
  std::vector<double> g(p.values.size(), 0.0);
  accumulate_log_prob_grad(p, s, a, 1.0, g);
  return g;
}

/// d ln pi(a) / d logits: the one-hot of a minus the probabilities.
inline std::vector<double> logit_score(const PolicyParams& p, const AgentLocalState& s, int a) {
  auto d = distribution(p, s);
  for (std::size_t k = 0; k < d.probs.size(); ++k) d.probs[k] = (static_cast<int>(k) == a ? 1.0 : 0.0) - d.probs[k];
  return d.probs;
}

/// Relabels agents: the embedding row of agent i moves to perm[i]. With the
/// market permuted the same way, every agent keeps its behavior.
inline PolicyParams permute(const PolicyParams& p, std::span<const std::size_t> perm) {
  check_permutation(perm);
  if (perm.size() != p.arch.n_agents) throw std::invalid_argument("permute: length mismatch");
  PolicyParams q = p;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const auto src = p.embedding(i);
    std::copy(src.begin(), src.end(), q.embedding(perm[i]).begin());
  }
  return q;
}

// Checkpoints -----------------------------------------------------------
//
// Little-endian: "NCBP", u32 version, u32 feature_dim, u32 n_actions,
// u32 n_agents, u32 embed_dim, then param_count() IEEE-754 doubles.

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline std::uint64_t get_le(const std::string& in, std::size_t off, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= std::uint64_t{static_cast<unsigned char>(in[off + b])} << (8 * b);
  return v;
}
}  // namespace detail

inline std::string encode_checkpoint(const PolicyParams& p) {
  p.validate();
  std::string out = "NCBP";
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, p.arch.feature_dim);
  detail::put_u32(out, p.arch.n_actions);
  detail::put_u32(out, p.arch.n_agents);
  detail::put_u32(out, p.arch.embed_dim);
  for (double v : p.values) detail::put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline PolicyParams decode_checkpoint(const std::string& bytes) {
  constexpr std::size_t header = 4 + 4 * 5;
  if (bytes.size() < header || bytes.compare(0, 4, "NCBP") != 0)
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = static_cast<std::uint32_t>(detail::get_le(bytes, 4, 4));
  if (version != kCheckpointVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  PolicyArch arch;
  arch.feature_dim = static_cast<std::uint32_t>(detail::get_le(bytes, 8, 4));
  arch.n_actions = static_cast<std::uint32_t>(detail::get_le(bytes, 12, 4));
  arch.n_agents = static_cast<std::uint32_t>(detail::get_le(bytes, 16, 4));
  arch.embed_dim = static_cast<std::uint32_t>(detail::get_le(bytes, 20, 4));
  if (arch.feature_dim != kFeatureDim || arch.n_actions < 2 || arch.n_actions > kMaxActions || arch.n_agents < 1 ||
      arch.embed_dim > kMaxEmbedDim)
    throw std::runtime_error("checkpoint: invalid architecture");
  if (bytes.size() != header + 8 * arch.param_count()) throw std::runtime_error("checkpoint: truncated or oversized");
  PolicyParams p(arch);
  for (std::size_t k = 0; k < p.values.size(); ++k)
    p.values[k] = std::bit_cast<double>(detail::get_le(bytes, header + 8 * k, 8));
  p.validate();
  return p;
}

inline void save_checkpoint(const PolicyParams& p, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(p);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace ncb
