// Copyright 2026 The Authors.
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

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/pipeline.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using namespace ridepolicy::pipeline;

namespace {

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RIDEPOLICY_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config files set every section") {
  const auto dir = testutil::temp_dir("pipeline_cfg");
  const auto p = write_file(dir / "run.cfg",
                            "# comment\n"
                            "[run]\nseed = 17\nthreads = 3\nmodel = 2\n"
                            "[sim]\nn_drivers = 300\nanchor = 2024-02-05\ntwo_year = false\n"
                            "[estimate]\nbootstrap_reps = 50\noutcomes = num_hour, num_trip\n"
                            "[placebo]\nseeds = 1\n"
                            "[counterfactual]\nheuristics = one_hop,greedy_spatial\n");
  auto cfg = load_config(p);
  CHECK(cfg.seed == 17u);
  CHECK(cfg.threads == 3);
  CHECK(cfg.model == "2");
  CHECK(cfg.sim.n_drivers == 300);
  CHECK_FALSE(cfg.two_year);
  CHECK(cfg.bootstrap_reps == 50);
  CHECK(cfg.outcomes == std::vector<std::string>{"num_hour", "num_trip"});
  CHECK(cfg.placebo_seeds == 1);
  CHECK(cfg.heuristics == std::vector<std::string>{"one_hop", "greedy_spatial"});
  CHECK_NOTHROW(finalize(cfg));
  CHECK(cfg.sim.seed == 17u);
}

TEST_CASE("config errors") {
  const auto dir = testutil::temp_dir("pipeline_cfg_err");
  CHECK_THROWS_AS(load_config(dir / "nope.cfg"), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir / "a.cfg", "[run]\nbogus = 1\n")), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir / "b.cfg", "seed = 1\n")), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir / "c.cfg", "[sim]\nn_drivers = many\n")), ConfigError);

  RunConfig cfg;
  CHECK_THROWS_AS(finalize(cfg), ConfigError);  // no seed
  cfg.seed = 1;
  cfg.clip_lo = 0.6;
  cfg.clip_hi = 0.4;
  CHECK_THROWS_AS(finalize(cfg), ConfigError);
  cfg = RunConfig{};
  cfg.seed = 1;
  cfg.outcomes = {"num_hours"};
  CHECK_THROWS_AS(finalize(cfg), ConfigError);
  cfg = RunConfig{};
  cfg.seed = 1;
  apply_setting(cfg, "counterfactual", "heuristics", "teleport");
  CHECK_THROWS_AS(finalize(cfg), ConfigError);
}

TEST_CASE("config hash ignores output location only") {
  RunConfig a;
  a.seed = 5;
  RunConfig b = a;
  b.out = "/elsewhere";
  b.threads = 4;
  CHECK(config_hash(a) == config_hash(b));
  b.bootstrap_reps = 99;
  CHECK(config_hash(a) != config_hash(b));
  const auto kv = effective_config(a);
  CHECK(std::any_of(kv.begin(), kv.end(), [](const auto& p) { return p.first == "run.seed" && p.second == "5"; }));
}

TEST_CASE("truth and production parameter round trips") {
  const auto dir = testutil::temp_dir("pipeline_rt");
  sim::GroundTruth t;
  t.seed = 99;
  t.anchor = testutil::kAnchor;
  t.cohorts = {{1, 0}, {2, std::nullopt}, {-3, 4}};
  t.effects = {{"num_hour", 0.25}, {"ave_utilization", 0.03}};
  t.anticipation_weeks = 1;
  t.elasticities = {{{2, matchfn::Slot::kEveningPeak, 5}, 0.1, 0.8, 0.3}};
  write_truth(dir / "truth.json", t);
  const auto r = read_truth(dir / "truth.json");
  CHECK(r.seed == 99u);
  CHECK(r.anchor == t.anchor);
  CHECK(r.cohorts == t.cohorts);
  CHECK(r.effects == t.effects);
  CHECK(r.anticipation_weeks == 1);
  REQUIRE(r.elasticities.size() == 1);
  CHECK(r.elasticities[0].market == t.elasticities[0].market);
  CHECK(r.elasticities[0].beta == 0.3);
  CHECK(r.cohort_of(-3) == 4);
  CHECK_FALSE(r.cohort_of(2).has_value());

  std::vector<matchfn::ProductionParams> ps(2);
  ps[0].market = {1, matchfn::Slot::kMidday, 0};
  ps[0].log_A = -0.123456789012;
  ps[0].alpha = 0.75;
  ps[0].beta = 0.3;
  ps[0].n_obs = 40;
  ps[0].status = matchfn::FitStatus::kFitted;
  ps[1].market = {15, matchfn::Slot::kLateNight, 6};
  ps[1].status = matchfn::FitStatus::kTooFewObs;
  write_params(dir / "p.csv", ps);
  const auto q = read_params(dir / "p.csv");
  REQUIRE(q.size() == 2);
  CHECK(q[0].market == ps[0].market);
  CHECK(q[0].log_A == doctest::Approx(ps[0].log_A).epsilon(1e-12));
  CHECK(q[0].fitted());
  CHECK(q[1].status == matchfn::FitStatus::kTooFewObs);
  CHECK(slurp(dir / "p.csv") == (write_params(dir / "p2.csv", q), slurp(dir / "p2.csv")));
}

TEST_CASE("outcome transforms") {
  CHECK(log_outcome("num_hour"));
  CHECK(log_outcome("num_trip"));
  CHECK_FALSE(log_outcome("ave_utilization"));
  CHECK_FALSE(log_outcome("weekly_cancel_rate"));
}

TEST_CASE("a missing upstream artifact names the step to run") {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.quiet = true;
  cfg.out = testutil::temp_dir("pipeline_missing");
  finalize(cfg);
  try {
    cmd_panel(cfg);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& e) {
    CHECK(std::string(e.what()).find("ridepolicy simulate") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_counterfactual(cfg), MissingArtifact);
}

TEST_CASE("simulate then panel on a small market") {
  RunConfig cfg;
  cfg.seed = 4;
  cfg.quiet = true;
  cfg.two_year = false;
  cfg.sim.n_drivers = 150;
  cfg.out = testutil::temp_dir("pipeline_small");
  finalize(cfg);
  cmd_simulate(cfg);
  for (const char* f : {"trips.csv", "demand.csv", "truth.json", "drivers.csv"}) {
    CHECK(fs::exists(cfg.out / f));
  }
  cmd_panel(cfg);
  CHECK(fs::exists(cfg.out / "driver_week.csv"));
  CHECK(fs::exists(cfg.out / "cohorts.csv"));
  CHECK(read_truth(cfg.out / "truth.json").seed == 4u);
}

TEST_CASE("command-line exit codes") {
  const auto dir = testutil::temp_dir("pipeline_cli");
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") != 0);
  CHECK(run_cli("simulate") == 2);  // no seed
  write_file(dir / "bad.cfg", "[estimate]\nclip_lo = 2\n");
  CHECK(run_cli("--config " + (dir / "bad.cfg").string() + " --seed 1 simulate") == 2);
  CHECK(run_cli("--seed 1 --quiet --out " + (dir / "empty").string() + " panel") == 3);
  CHECK(run_cli("--seed 1 --quiet --out " + (dir / "empty").string() + " report") == 3);
}
