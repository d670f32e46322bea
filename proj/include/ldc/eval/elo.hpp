// Copyright 2026 The LDC Codec Authors.
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

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/parallel.hpp"
#include "ldc/core/rng.hpp"

namespace ldc::eval {

// One 2AFC row: the participant saw reconstructions from method_a and
// method_b of the same source image and picked one (forced choice).
struct Comparison {
  std::string participant;
  std::string image;
  std::string method_a;
  std::string method_b;
  char winner = 'A';  // 'A' or 'B'
};

enum class EloTournamentMode { kPerComparison, kPerParticipant };

struct EloConfig {
  double k_factor = 32.0;
  double initial_rating = 1000.0;
  int iterations = 10000;
  uint64_t seed = 0;
  EloTournamentMode mode = EloTournamentMode::kPerComparison;
  int threads = 2;
};

struct EloMethodStats {
  std::string method;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
};

struct EloResult {
  std::vector<EloMethodStats> methods;  // in first-appearance order
  EloConfig config;
};

namespace detail {

// Linear-interpolation quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double pos = q * static_cast<double>(n - 1);
  size_t lo = static_cast<size_t>(pos);
  double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] * (1 - frac) + sorted[lo + 1] * frac;
}

}  // namespace detail

// Monte-Carlo Elo ranking. Game order matters for Elo, so each iteration
// reshuffles the tournament order, replays all tournaments from equal
// starting ratings, and records the final rating per method; the medians and
// quartiles over iterations are reported. Tournament updates are batched:
// expected scores use the ratings frozen at tournament start and the summed
// deltas are applied at tournament end. kPerComparison treats every row as
// its own tournament; kPerParticipant groups all rows of one participant.
//
// Method identity is positional (first appearance in the log), so relabeling
// methods permutes the output exactly.
inline EloResult elo_rank(const std::vector<Comparison>& log, const EloConfig& cfg) {
  require(!log.empty(), ErrorKind::kValidation, "elo_rank: empty comparison log");

  std::vector<std::string> method_names;
  std::map<std::string, int> method_index;
  auto intern_method = [&](const std::string& name) {
    require(!name.empty(), ErrorKind::kValidation, "elo_rank: empty method name");
    auto it = method_index.find(name);
    if (it != method_index.end()) return it->second;
    int id = static_cast<int>(method_names.size());
    method_index.emplace(name, id);
    method_names.push_back(name);
    return id;
  };
  struct Row {
    int a, b;
    double score_a;
  };
  std::vector<Row> rows;
  rows.reserve(log.size());
  std::vector<std::string> participant_names;
  std::map<std::string, int> participant_index;
  std::vector<std::vector<int>> participant_rows;
  for (const auto& c : log) {
    require(c.winner == 'A' || c.winner == 'B', ErrorKind::kValidation,
            "elo_rank: winner must be A or B, got '", std::string(1, c.winner), "'");
    Row r;
    r.a = intern_method(c.method_a);
    r.b = intern_method(c.method_b);
    r.score_a = (c.winner == 'A') ? 1.0 : 0.0;
    int p;
    auto it = participant_index.find(c.participant);
    if (it == participant_index.end()) {
      p = static_cast<int>(participant_names.size());
      participant_index.emplace(c.participant, p);
      participant_names.push_back(c.participant);
      participant_rows.emplace_back();
    } else {
      p = it->second;
    }
    participant_rows[static_cast<size_t>(p)].push_back(static_cast<int>(rows.size()));
    rows.push_back(r);
  }

  const int n_methods = static_cast<int>(method_names.size());
  const int n_tournaments = cfg.mode == EloTournamentMode::kPerComparison
                                ? static_cast<int>(rows.size())
                                : static_cast<int>(participant_rows.size());

  // ratings[iteration][method]
  std::vector<std::vector<double>> finals(static_cast<size_t>(cfg.iterations));
  parallel_for(cfg.iterations, cfg.threads, [&](int64_t iter, int) {
    Rng rng(Rng::mix(cfg.seed, static_cast<uint64_t>(iter)));
    std::vector<int> order(static_cast<size_t>(n_tournaments));
    for (int i = 0; i < n_tournaments; ++i) order[static_cast<size_t>(i)] = i;
    rng.shuffle(order);
    std::vector<double> rating(static_cast<size_t>(n_methods), cfg.initial_rating);
    std::vector<double> delta(static_cast<size_t>(n_methods), 0.0);
    auto play = [&](const Row& r, std::vector<double>& d) {
      double expected_a =
          1.0 / (1.0 + std::pow(10.0, (rating[static_cast<size_t>(r.b)] -
                                       rating[static_cast<size_t>(r.a)]) / 400.0));
      d[static_cast<size_t>(r.a)] += cfg.k_factor * (r.score_a - expected_a);
      d[static_cast<size_t>(r.b)] += cfg.k_factor * ((1.0 - r.score_a) - (1.0 - expected_a));
    };
    for (int t : order) {
      std::fill(delta.begin(), delta.end(), 0.0);
      if (cfg.mode == EloTournamentMode::kPerComparison) {
        play(rows[static_cast<size_t>(t)], delta);
      } else {
        for (int ri : participant_rows[static_cast<size_t>(t)]) play(rows[static_cast<size_t>(ri)], delta);
      }
      for (int m = 0; m < n_methods; ++m) rating[static_cast<size_t>(m)] += delta[static_cast<size_t>(m)];
    }
    finals[static_cast<size_t>(iter)] = std::move(rating);
  });

  EloResult result;
  result.config = cfg;
  for (int m = 0; m < n_methods; ++m) {
    std::vector<double> samples(static_cast<size_t>(cfg.iterations));
    for (int i = 0; i < cfg.iterations; ++i)
      samples[static_cast<size_t>(i)] = finals[static_cast<size_t>(i)][static_cast<size_t>(m)];
    std::sort(samples.begin(), samples.end());
    EloMethodStats s;
    s.method = method_names[static_cast<size_t>(m)];
    s.median = detail::quantile_sorted(samples, 0.5);
    s.q1 = detail::quantile_sorted(samples, 0.25);
    s.q3 = detail::quantile_sorted(samples, 0.75);
    result.methods.push_back(s);
  }
  return result;
}

// CSV with header participant,image,method_a,method_b,winner.
inline std::vector<Comparison> parse_comparison_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Comparison> out;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      first = false;
      require(cells.size() == 5 && cells[0] == "participant" && cells[4] == "winner",
              ErrorKind::kFormat,
              "comparison log must start with header participant,image,method_a,method_b,winner");
      continue;
    }
    require(cells.size() == 5, ErrorKind::kFormat, "comparison log line ", lineno,
            ": expected 5 columns");
    Comparison c;
    c.participant = cells[0];
    c.image = cells[1];
    c.method_a = cells[2];
    c.method_b = cells[3];
    require(cells[4] == "A" || cells[4] == "B", ErrorKind::kFormat, "comparison log line ",
            lineno, ": winner must be A or B");
    c.winner = cells[4][0];
    out.push_back(c);
  }
  require(!out.empty(), ErrorKind::kValidation, "comparison log has no rows");
  return out;
}

inline std::string comparison_csv(const std::vector<Comparison>& log) {
  std::string out = "participant,image,method_a,method_b,winner\n";
  for (const auto& c : log)
    out += c.participant + "," + c.image + "," + c.method_a + "," + c.method_b + "," +
           std::string(1, c.winner) + "\n";
  return out;
}

inline std::string elo_csv(const EloResult& r) {
  std::string out = "method,median,q1,q3,k_factor,initial_rating,iterations,mode\n";
  const char* mode = r.config.mode == EloTournamentMode::kPerComparison ? "per_comparison"
                                                                        : "per_participant";
  for (const auto& m : r.methods)
    out += m.method + "," + cat(m.median) + "," + cat(m.q1) + "," + cat(m.q3) + "," +
           cat(r.config.k_factor) + "," + cat(r.config.initial_rating) + "," +
           cat(r.config.iterations) + "," + mode + "\n";
  return out;
}

}  // namespace ldc::eval
