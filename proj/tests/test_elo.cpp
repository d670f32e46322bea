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

#include <catch2/catch_amalgamated.hpp>

#include <chrono>

#include "ldc/core/bytes.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/eval/elo.hpp"

using namespace ldc;
using namespace ldc::eval;

namespace {

Comparison row(const std::string& p, const std::string& img, const std::string& a,
               const std::string& b, char w) {
  return Comparison{p, img, a, b, w};
}

// A synthetic study: "strong" wins ~75% against "mid", "mid" ~75% against
// "weak", with multiple participants.
std::vector<Comparison> synthetic_log(int rows, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> methods = {"strong", "mid", "weak"};
  std::vector<Comparison> log;
  for (int i = 0; i < rows; ++i) {
    int a = static_cast<int>(rng.bounded(3));
    int b = (a + 1 + static_cast<int>(rng.bounded(2))) % 3;
    double p_a_wins = 0.5 + 0.25 * static_cast<double>(b - a);  // lower index is stronger
    char w = rng.uniform() < p_a_wins ? 'A' : 'B';
    log.push_back(row("user" + std::to_string(i % 10), "img" + std::to_string(i % 6),
                      methods[static_cast<size_t>(a)], methods[static_cast<size_t>(b)], w));
  }
  return log;
}

}  // namespace

TEST_CASE("elo dominance: winner of all games ranks higher", "[elo]") {
  std::vector<Comparison> log;
  for (int i = 0; i < 100; ++i)
    log.push_back(row("u" + std::to_string(i % 5), "img" + std::to_string(i % 10), "A_method",
                      "B_method", 'A'));
  for (auto mode : {EloTournamentMode::kPerComparison, EloTournamentMode::kPerParticipant}) {
    EloConfig cfg;
    cfg.iterations = 500;
    cfg.seed = 1;
    cfg.mode = mode;
    EloResult r = elo_rank(log, cfg);
    REQUIRE(r.methods.size() == 2);
    CHECK(r.methods[0].method == "A_method");
    CHECK(r.methods[0].median > r.methods[1].median + 100);
  }
}

TEST_CASE("elo symmetry: 50/50 split gives equal medians", "[elo]") {
  std::vector<Comparison> log;
  for (int i = 0; i < 200; ++i)
    log.push_back(row("u" + std::to_string(i % 8), "img", "left", "right", i % 2 ? 'A' : 'B'));
  EloConfig cfg;
  cfg.iterations = 10000;
  cfg.seed = 2;
  EloResult r = elo_rank(log, cfg);
  CHECK(std::abs(r.methods[0].median - r.methods[1].median) <= 1.0);
}

TEST_CASE("elo fixed seed is bitwise deterministic", "[elo]") {
  auto log = synthetic_log(300, 3);
  EloConfig cfg;
  cfg.iterations = 1000;
  cfg.seed = 77;
  EloResult a = elo_rank(log, cfg);
  EloResult b = elo_rank(log, cfg);
  REQUIRE(a.methods.size() == b.methods.size());
  for (size_t i = 0; i < a.methods.size(); ++i) {
    CHECK(a.methods[i].median == b.methods[i].median);
    CHECK(a.methods[i].q1 == b.methods[i].q1);
    CHECK(a.methods[i].q3 == b.methods[i].q3);
  }
}

TEST_CASE("elo output is invariant to method relabeling", "[elo]") {
  auto log = synthetic_log(300, 4);
  auto renamed = log;
  for (auto& c : renamed) {
    auto rename = [](std::string& m) {
      if (m == "strong") m = "zeta";
      else if (m == "mid") m = "eta";
      else m = "theta";
    };
    rename(c.method_a);
    rename(c.method_b);
  }
  EloConfig cfg;
  cfg.iterations = 800;
  cfg.seed = 5;
  EloResult a = elo_rank(log, cfg);
  EloResult b = elo_rank(renamed, cfg);
  REQUIRE(a.methods.size() == b.methods.size());
  // Same first-appearance positions, so stats line up index by index.
  for (size_t i = 0; i < a.methods.size(); ++i) {
    CHECK(a.methods[i].median == b.methods[i].median);
    CHECK(a.methods[i].q1 == b.methods[i].q1);
    CHECK(a.methods[i].q3 == b.methods[i].q3);
  }
}

TEST_CASE("elo modes differ but preserve ordering on a graded log", "[elo]") {
  auto log = synthetic_log(600, 6);
  EloConfig cfg;
  cfg.iterations = 2000;
  cfg.seed = 6;
  cfg.mode = EloTournamentMode::kPerComparison;
  EloResult per_cmp = elo_rank(log, cfg);
  cfg.mode = EloTournamentMode::kPerParticipant;
  EloResult per_part = elo_rank(log, cfg);
  auto median_of = [](const EloResult& r, const std::string& m) {
    for (const auto& s : r.methods)
      if (s.method == m) return s.median;
    FAIL("method not found");
    return 0.0;
  };
  for (const EloResult& r : {per_cmp, per_part}) {
    CHECK(median_of(r, "strong") > median_of(r, "mid"));
    CHECK(median_of(r, "mid") > median_of(r, "weak"));
  }
}

TEST_CASE("elo 10k iterations over 600 rows completes quickly", "[elo]") {
  auto log = synthetic_log(600, 7);
  EloConfig cfg;
  cfg.iterations = 10000;
  cfg.seed = 8;
  auto t0 = std::chrono::steady_clock::now();
  EloResult r = elo_rank(log, cfg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 60.0);
  REQUIRE(r.methods.size() == 3);
  for (const auto& m : r.methods) {
    CHECK(m.q1 <= m.median);
    CHECK(m.median <= m.q3);
  }
}

TEST_CASE("elo validation errors", "[elo]") {
  EloConfig cfg;
  CHECK_THROWS_AS(elo_rank({}, cfg), Error);
  std::vector<Comparison> bad = {row("u", "i", "a", "b", 'C')};
  CHECK_THROWS_AS(elo_rank(bad, cfg), Error);
  std::vector<Comparison> empty_name = {row("u", "i", "", "b", 'A')};
  CHECK_THROWS_AS(elo_rank(empty_name, cfg), Error);
}

TEST_CASE("comparison log csv round trip and validation", "[elo]") {
  auto log = synthetic_log(40, 9);
  std::string csv = comparison_csv(log);
  auto parsed = parse_comparison_csv(csv);
  REQUIRE(parsed.size() == log.size());
  for (size_t i = 0; i < log.size(); ++i) {
    CHECK(parsed[i].participant == log[i].participant);
    CHECK(parsed[i].method_a == log[i].method_a);
    CHECK(parsed[i].winner == log[i].winner);
  }
  CHECK_THROWS_AS(parse_comparison_csv("not,a,header\nx,y,z,w,A\n"), Error);
  CHECK_THROWS_AS(parse_comparison_csv("participant,image,method_a,method_b,winner\nu,i,a,b,X\n"),
                  Error);
  CHECK_THROWS_AS(parse_comparison_csv("participant,image,method_a,method_b,winner\n"), Error);
}

TEST_CASE("bundled synthetic log matches golden output", "[elo]") {
  auto read_text = [](const std::string& path) {
    auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
  };
  auto log = parse_comparison_csv(read_text(std::string(LDC_TEST_DATA_DIR) + "/elo_log.csv"));
  REQUIRE(log.size() == 600);
  EloConfig cfg;
  cfg.iterations = 10000;
  cfg.seed = 42;
  cfg.mode = EloTournamentMode::kPerComparison;
  CHECK(elo_csv(elo_rank(log, cfg)) ==
        read_text(std::string(LDC_TEST_DATA_DIR) + "/elo_golden.csv"));
  cfg.mode = EloTournamentMode::kPerParticipant;
  CHECK(elo_csv(elo_rank(log, cfg)) ==
        read_text(std::string(LDC_TEST_DATA_DIR) + "/elo_golden_participant.csv"));
}

TEST_CASE("elo csv output includes constants used", "[elo]") {
  auto log = synthetic_log(50, 10);
  EloConfig cfg;
  cfg.iterations = 100;
  EloResult r = elo_rank(log, cfg);
  std::string csv = elo_csv(r);
  CHECK(csv.find("method,median,q1,q3,k_factor,initial_rating,iterations,mode") == 0);
  CHECK(csv.find("32") != std::string::npos);
  CHECK(csv.find("1000") != std::string::npos);
  CHECK(csv.find("per_comparison") != std::string::npos);
}
