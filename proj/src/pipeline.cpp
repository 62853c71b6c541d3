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

#include "ridepolicy/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <Eigen/Core>

#include "pipeline_internal.hpp"
#include "ridepolicy/errors.hpp"
#include "ridepolicy/ineq.hpp"
#include "ridepolicy/io.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/realloc.hpp"

namespace ridepolicy::pipeline {

using namespace detail;

namespace {

const auto g_process_start = std::chrono::steady_clock::now();

constexpr const char* kVersion = "1.0.0";

std::string take_rate_name(sim::TakeRateType t) {
  return t == sim::TakeRateType::kAlwaysAbove70 ? "always_above_70" : "sometimes_below_70";
}

std::string variance_name(sim::EarningsVarianceType v) {
  switch (v) {
    case sim::EarningsVarianceType::kLow: return "low";
    case sim::EarningsVarianceType::kHigh: return "high";
    case sim::EarningsVarianceType::kMid: break;
  }
  return "mid";
}

void write_year(const fs::path& dir, const sim::SimOutput& o) {
  fs::create_directories(dir);
  io::write_trips(dir / "trips.csv", o.trips);
  io::write_demand(dir / "demand.csv", o.demand);
  write_truth(dir / "truth.json", o.truth);
  io::CsvWriter w(dir / "drivers.csv", {"driver_id", "driver_class", "home_market",
                                        "take_rate_type", "earnings_variance_type"});
  for (const auto& d : o.drivers) {
    w.row({num(d.driver_id), sim::driver_class_name(d.driver_class), num(d.home_market),
           take_rate_name(d.take_rate_type), variance_name(d.earnings_variance_type)});
  }
  w.close();
}

panel::PanelConfig panel_config(const RunConfig& cfg, Timestamp anchor) {
  panel::PanelConfig pc;
  pc.anchor = anchor;
  pc.first_week = cfg.sim.first_week();
  pc.last_week = cfg.sim.last_week();
  pc.demand_grid = geo::HexGrid(cfg.sim.hex_cell_area_km2);
  return pc;
}

}  // namespace

void cmd_simulate(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  if (cfg.two_year) {
    const auto two = sim::generate_two_year(cfg.sim);
    write_year(dir, two.treatment);
    write_year(prior_dir(cfg), two.prior);
    log(cfg, "simulate: " + num(two.treatment.trips.size()) + " trips (prior year " +
                 num(two.prior.trips.size()) + ") written to " + dir.string());
  } else {
    const auto o = sim::generate_market(cfg.sim);
    write_year(dir, o);
    log(cfg, "simulate: " + num(o.trips.size()) + " trips written to " + dir.string());
  }
}

void cmd_panel(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  fs::create_directories(dir);
  const auto trips = load_trips(require(trips_file(cfg), "simulate"));
  const auto demand = load_demand(require(demand_file(cfg), "simulate"));
  const auto& major = cfg.sim.major_market().polygon;
  const Timestamp anchor = cfg.sim.anchor;
  const auto cohorts =
      panel::assign_cohorts(trips, major, anchor, 0, cfg.sim.last_week());

  if (cfg.trips_path.empty()) {
    if (const auto truth = maybe_truth(dir / "truth.json")) {
      std::map<std::int64_t, std::optional<int>> want(truth->cohorts.begin(),
                                                      truth->cohorts.end());
      int mismatched = 0;
      for (const auto& c : cohorts) {
        const auto it = want.find(c.driver_id);
        if (it != want.end() && it->second != c.cohort) ++mismatched;
      }
      if (mismatched > 0) {
        throw IntegrityError("panel: " + num(mismatched) +
                             " drivers have a cohort different from truth.json");
      }
    }
  }

  auto pc = panel_config(cfg, anchor);
  pc.high_demand_cells = panel::median_high_demand_cells(demand, pc.first_week);
  const auto rows = panel::build_driver_week_panel(trips, cohorts, pc);
  panel::write_driver_week_panel(dir / "driver_week.csv", rows);
  io::CsvWriter cw(dir / "cohorts.csv", {"driver_id", "cohort"});
  for (const auto& c : cohorts) cw.row({num(c.driver_id), c.cohort ? num(*c.cohort) : ""});
  cw.close();

  for (const auto kind : {panel::ZoneKind::kZip, panel::ZoneKind::kHex}) {
    panel::ZoneConfig zc;
    zc.kind = kind;
    zc.anchor = anchor;
    zc.first_week = pc.first_week;
    zc.last_week = pc.last_week;
    zc.demand_grid = pc.demand_grid;
    zc.zip_grid = geo::HexGrid(cfg.zip_area_km2);
    zc.major = major;
    zc.top_hexagons = cfg.top_hexagons;
    const auto zones = panel::build_zone_week_demand(demand, trips, zc);
    panel::write_zone_week_demand(
        dir / (kind == panel::ZoneKind::kZip ? "zone_week_zip.csv" : "zone_week_hex.csv"),
        zones);
  }

  const fs::path pd = prior_dir(cfg);
  if (fs::exists(pd / "trips.csv")) {
    const auto ptrips = load_trips(pd / "trips.csv");
    const Timestamp panchor = prior_anchor(cfg);
    auto pco = panel::assign_cohorts(ptrips, major, panchor, 0, cfg.sim.last_week());
    for (auto& c : pco) {
      c.cohort.reset();
      c.first_treatment_trip.reset();
    }
    auto ppc = panel_config(cfg, panchor);
    if (fs::exists(pd / "demand.csv")) {
      ppc.high_demand_cells =
          panel::median_high_demand_cells(load_demand(pd / "demand.csv"), ppc.first_week);
    }
    panel::write_driver_week_panel(pd / "driver_week.csv",
                                   panel::build_driver_week_panel(ptrips, pco, ppc));
  }
  log(cfg, "panel: " + num(rows.size()) + " driver-weeks written to " + dir.string());
}

void cmd_production(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const auto trips = load_trips(require(trips_file(cfg), "simulate"));
  const auto demand = load_demand(require(demand_file(cfg), "simulate"));
  const auto layout = sim::build_layout(cfg.sim);
  const Timestamp anchor = cfg.sim.anchor;
  const auto supply = matchfn::supply_accounting(trips, layout.production_grid, anchor);
  const auto dem = matchfn::aggregate_demand(demand, layout.demand_grid, layout.production_grid);
  const auto obs = matchfn::build_market_obs(supply, dem, layout.areas, anchor);
  const auto params = matchfn::fit_all_markets(matchfn::define_markets(layout.areas), obs);
  write_params(dir / "production_params.csv", params);

  constexpr int kBins = 30;
  constexpr double kLo = 0.0, kHi = 1.5;
  io::CsvWriter hist(dir / "elasticity_hist.csv", {"parameter", "bin_lo", "bin_hi", "count"});
  for (const char* name : {"alpha", "beta", "returns_to_scale"}) {
    std::vector<int> count(kBins, 0);
    for (const auto& p : params) {
      if (!p.fitted()) continue;
      const std::string n = name;
      const double v = n == "alpha" ? p.alpha : n == "beta" ? p.beta : p.returns_to_scale();
      const int b = static_cast<int>(std::floor((v - kLo) / (kHi - kLo) * kBins));
      ++count[std::clamp(b, 0, kBins - 1)];
    }
    for (int b = 0; b < kBins; ++b) {
      hist.row({name, num(kLo + (kHi - kLo) * b / kBins), num(kLo + (kHi - kLo) * (b + 1) / kBins),
                num(count[b])});
    }
  }
  hist.close();

  int fitted = 0;
  for (const auto& p : params) fitted += p.fitted();
  if (const auto truth = maybe_truth(dir / "truth.json"); truth && cfg.trips_path.empty()) {
    std::map<matchfn::MarketKey, const sim::MarketElasticity*> by;
    for (const auto& e : truth->elasticities) by[e.market] = &e;
    io::CsvWriter rec(dir / "production_recovery.csv",
                      {"area", "slot", "day", "alpha", "alpha_true", "beta", "beta_true"});
    double ea = 0, eb = 0;
    for (const auto& p : params) {
      const auto it = by.find(p.market);
      if (!p.fitted() || it == by.end()) continue;
      rec.row({num(p.market.area), std::string(matchfn::slot_name(p.market.slot)),
               std::string(matchfn::day_name(p.market.day)), num(p.alpha),
               num(it->second->alpha), num(p.beta), num(it->second->beta)});
      ea += std::abs(p.alpha - it->second->alpha);
      eb += std::abs(p.beta - it->second->beta);
    }
    rec.close();
    if (fitted > 0) {
      std::printf("production: %d/%zu markets fitted; mean |alpha error| %.4f, "
                  "mean |beta error| %.4f\n",
                  fitted, params.size(), ea / fitted, eb / fitted);
    }
  } else {
    std::printf("production: %d/%zu markets fitted\n", fitted, params.size());
  }
}

void cmd_counterfactual(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  auto params = read_params(require(dir / "production_params.csv", "production"));
  const auto trips = load_trips(require(trips_file(cfg), "simulate"));
  const auto demand = load_demand(require(demand_file(cfg), "simulate"));
  const auto layout = sim::build_layout(cfg.sim);
  const Timestamp anchor = cfg.sim.anchor;

  const auto dem = matchfn::aggregate_demand(demand, layout.demand_grid, layout.production_grid);
  int pooled = 0, fitted = 0;
  for (const auto& p : params) fitted += p.fitted();
  if (fitted < static_cast<int>(params.size())) {
    // Unfitted markets borrow a fit pooled over areas for the same slot and day.
    const auto supply = matchfn::supply_accounting(trips, layout.production_grid, anchor);
    const auto obs = matchfn::build_market_obs(supply, dem, layout.areas, anchor);
    std::map<std::pair<matchfn::Slot, int>, std::vector<matchfn::MarketHourObs>> by;
    for (const auto& o : obs) by[{o.market.slot, o.market.day}].push_back(o);
    for (auto& p : params) {
      if (p.fitted()) continue;
      const auto fit = matchfn::fit_cobb_douglas(p.market, by[{p.market.slot, p.market.day}]);
      if (fit.fitted()) {
        p = fit;
        ++pooled;
      }
    }
  }
  const realloc::ProductionModel model(layout.areas, anchor, params);

  const std::int64_t h0 = static_cast<std::int64_t>(cfg.sim.first_week()) * 168;
  const std::int64_t h1 = static_cast<std::int64_t>(cfg.sim.last_week() + 1) * 168;
  const auto all = realloc::observe_sessions(trips, layout.production_grid, anchor, h0, h1);
  realloc::Instance inst;
  inst.distributions =
      realloc::build_outcome_distributions(all, layout.areas, anchor, cfg.min_sessions);
  const std::int64_t w0 = static_cast<std::int64_t>(cfg.counterfactual_week) * 168;
  for (const auto& s : all) {
    if (s.start.start_hour >= w0 && s.start.start_hour < w0 + 168 &&
        layout.areas.contains(s.start.hex)) {
      inst.sessions.push_back(s.start);
    }
  }
  inst.demand = dem;

  const auto base = realloc::baseline_plan(inst);
  realloc::check_plan(inst, base, anchor);
  const double base_total =
      realloc::predict_rides(realloc::plan_supply(inst, base, anchor), dem, model).total;

  using Fn = realloc::ReallocationPlan (*)(const realloc::Instance&,
                                           const realloc::ProductionModel&);
  const std::map<std::string, Fn> fns = {
      {"one_hop", realloc::heuristic_one_hop},
      {"two_hop", realloc::heuristic_two_hop},
      {"demand_weighted", realloc::heuristic_demand_weighted},
      {"greedy_spatial", realloc::heuristic_greedy_spatial},
      {"greedy_temporal", realloc::heuristic_greedy_temporal},
  };
  std::vector<realloc::ReallocationPlan> plans;
  std::vector<realloc::Comparison> rows = {{"baseline", base_total, 0.0, 0.0, 0}};
  for (const auto& h : cfg.heuristics) {
    auto plan = fns.at(h)(inst, model);
    realloc::check_plan(inst, plan, anchor);
    rows.push_back(realloc::evaluate_plan(inst, plan, model, base_total));
    std::printf("%-16s predicted %12.1f  delta %+10.1f  one-at-a-time %+10.1f  moved %d\n",
                h.c_str(), rows.back().predicted_total, rows.back().delta_vs_baseline,
                rows.back().one_at_a_time_gain, rows.back().moved);
    plans.push_back(std::move(plan));
  }
  realloc::write_plan_csv(dir / "realloc_plan.csv", inst, plans);
  realloc::write_comparison_csv(dir / "realloc_comparison.csv", rows);

  io::CsvWriter s(dir / "realloc_summary.csv", {"quantity", "value"});
  s.row({"week", num(cfg.counterfactual_week)});
  s.row({"sessions", num(inst.sessions.size())});
  s.row({"sessions_all_weeks", num(all.size())});
  s.row({"markets_fitted", num(fitted)});
  s.row({"markets_pooled_fallback", num(pooled)});
  s.row({"baseline_total", num(base_total)});
  s.close();
}

void cmd_gini(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const auto trips = load_trips(require(trips_file(cfg), "simulate"));
  const auto layout = sim::build_layout(cfg.sim);
  const auto field = matchfn::supply_accounting(trips, layout.demand_grid, cfg.sim.anchor);
  const auto& cells = layout.demand_cells;
  const int fw = cfg.sim.first_week(), lw = cfg.sim.last_week();
  const int nw = lw - fw + 1;
  std::vector<std::vector<double>> weekly(nw, std::vector<double>(cells.size(), 0.0));
  for (const auto& [key, hours] : field.raw()) {
    const auto hex = matchfn::hex_from_key(key);
    const auto it = std::lower_bound(cells.begin(), cells.end(), hex);
    if (it == cells.end() || *it != hex) continue;
    const auto w = floor_div(matchfn::hour_from_key(key), 168);
    if (w < fw || w > lw) continue;
    weekly[w - fw][static_cast<std::size_t>(it - cells.begin())] += hours.total();
  }
  // Sum in cell order so totals do not depend on hash iteration order.
  std::vector<double> pre(cells.size(), 0.0);
  const int npre = -fw;
  for (int w = fw; w < 0; ++w) {
    for (std::size_t c = 0; c < cells.size(); ++c) pre[c] += weekly[w - fw][c] / npre;
  }
  auto safe_gini = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s > 0 ? ineq::gini(v) : std::nan("");
  };
  io::CsvWriter g(dir / "gini.csv", {"week", "gini", "period"});
  io::CsvWriter l(dir / "lorenz.csv", {"series", "week", "population_share", "value_share"});
  auto add_lorenz = [&](const std::string& series, const std::string& week,
                        const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    if (!(s > 0)) return;
    const auto lc = ineq::lorenz(v);
    for (std::size_t i = 0; i < lc.population_share.size(); ++i) {
      l.row({series, week, num(lc.population_share[i]), num(lc.value_share[i])});
    }
  };
  g.row({"", num(safe_gini(pre)), "pre_average"});
  add_lorenz("pre_average", "", pre);
  for (int w = fw; w <= lw; ++w) {
    const auto& v = weekly[w - fw];
    g.row({num(w), num(safe_gini(v)), w < 0 ? "pre" : "post"});
    if (w >= 0) add_lorenz("post", num(w), v);
  }
  g.close();
  l.close();
  std::printf("gini: pre-average %.4f over %zu hexagons\n", safe_gini(pre), cells.size());
}

namespace {

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += "\\";
    out += c;
  }
  return out;
}

// Markdown table of selected columns (all if empty) of rows passing `keep`.
std::string md_table(const fs::path& path, std::vector<std::string> cols = {},
                     const std::function<bool(const io::CsvTable&, std::size_t)>& keep = {},
                     std::size_t max_rows = 200) {
  const auto t = io::CsvTable::read(path);
  if (cols.empty()) cols = t.header();
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(t.column(c));
  std::ostringstream os;
  os << "|";
  for (const auto& c : cols) os << " " << c << " |";
  os << "\n|";
  for (std::size_t i = 0; i < cols.size(); ++i) os << "---|";
  os << "\n";
  std::size_t shown = 0, total = 0;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    if (keep && !keep(t, r)) continue;
    ++total;
    if (shown >= max_rows) continue;
    ++shown;
    os << "|";
    for (auto j : idx) os << " " << md_escape(t.at(r, j)) << " |";
    os << "\n";
  }
  if (total > shown) {
    os << "\n(" << shown << " of " << total << " rows; see " << path.filename().string()
       << ")\n";
  }
  return os.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void cmd_report(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  require(dir / "aggregates.csv", "estimate");
  std::ostringstream md;
  auto section = [&](const std::string& title, const std::string& file,
                     const std::string& producer, const std::function<void()>& body) {
    md << "\n## " << title << "\n\n";
    if (fs::exists(dir / file)) {
      body();
    } else {
      md << "Not available: run `ridepolicy " << producer << "`.\n";
    }
  };

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_process_start).count();
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  md << "# ridepolicy report\n\n";
  md << "run: config_hash=" << hash << " timestamp=" << utc_now() << " wall_time_s=";
  char wt[32];
  std::snprintf(wt, sizeof wt, "%.1f", wall);
  md << wt << "\n\n";
  md << "versions: ridepolicy " << kVersion << ", Eigen " << EIGEN_WORLD_VERSION << "."
     << EIGEN_MAJOR_VERSION << "." << EIGEN_MINOR_VERSION << ", compiler " << __VERSION__
     << "\n";

  md << "\n## Configuration\n\n```ini\n";
  std::string last;
  for (const auto& [k, v] : effective_config(cfg)) {
    const auto dot = k.find('.');
    const auto sec = k.substr(0, dot);
    if (sec != last) {
      md << (last.empty() ? "" : "\n") << "[" << sec << "]\n";
      last = sec;
    }
    md << k.substr(dot + 1) << " = " << v << "\n";
  }
  md << "```\n";

  section("Estimation samples", "samples.csv", "estimate",
          [&] { md << md_table(dir / "samples.csv"); });
  section("Average effects", "aggregates.csv", "estimate", [&] {
    md << "Log outcomes: pct_effect = 100 (exp(estimate) - 1). `injected` is the "
          "simulated effect where one applies.\n\n";
    md << md_table(dir / "aggregates.csv",
                   {"model", "outcome", "transform", "kind", "estimate", "std_error", "ci_lo",
                    "ci_hi", "pct_effect", "injected", "n_units", "note"},
                   [](const io::CsvTable& t, std::size_t r) {
                     return t.at(r, t.column("kind")) != "dynamic";
                   });
  });
  section("Event study", "aggregates.csv", "estimate", [&] {
    std::string first = cfg.outcomes.empty() ? "num_hour" : cfg.outcomes.front();
    md << "theta(e) for " << first << " by model.\n\n";
    md << md_table(dir / "aggregates.csv",
                   {"model", "e", "estimate", "std_error", "ci_lo", "ci_hi"},
                   [first](const io::CsvTable& t, std::size_t r) {
                     return t.at(r, t.column("kind")) == "dynamic" &&
                            t.at(r, t.column("outcome")) == first;
                   });
  });
  section("Covariate balance", "balance.csv", "estimate",
          [&] { md << md_table(dir / "balance.csv"); });
  section("Heterogeneity", "heterogeneity.csv", "estimate",
          [&] { md << md_table(dir / "heterogeneity.csv"); });
  section("Two-year TWFE", "model4.csv", "estimate",
          [&] { md << md_table(dir / "model4.csv"); });
  section("Demand spillover", "spillover.csv", "estimate",
          [&] { md << md_table(dir / "spillover.csv"); });
  section("Goodman-Bacon decomposition", "bacon_summary.csv", "bacon", [&] {
    md << md_table(dir / "bacon_summary.csv") << "\n" << md_table(dir / "bacon_check.csv");
  });
  section("Placebo", "placebo_summary.csv", "placebo", [&] {
    md << md_table(dir / "placebo_summary.csv") << "\n"
       << md_table(dir / "placebo.csv", {}, {}, 60);
  });
  section("Production function", "production_params.csv", "production", [&] {
    const auto params = read_params(dir / "production_params.csv");
    int fitted = 0;
    double a = 0, b = 0;
    for (const auto& p : params) {
      if (!p.fitted()) continue;
      ++fitted;
      a += p.alpha;
      b += p.beta;
    }
    md << "| markets | fitted | mean_alpha | mean_beta |\n|---|---|---|---|\n| "
       << params.size() << " | " << fitted << " | " << num(fitted ? a / fitted : std::nan(""))
       << " | " << num(fitted ? b / fitted : std::nan("")) << " |\n\n"
       << "Per-market estimates: production_params.csv; histogram data: "
          "elasticity_hist.csv.\n";
  });
  section("Supply reallocation", "realloc_comparison.csv", "counterfactual", [&] {
    md << md_table(dir / "realloc_comparison.csv") << "\n"
       << md_table(dir / "realloc_summary.csv");
  });
  section("Spatial supply inequality", "gini.csv", "gini",
          [&] { md << md_table(dir / "gini.csv"); });

  md << "\n## Artifacts\n\n";
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "report.md") {
      files.push_back(fs::relative(e.path(), dir).generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) md << "- " << f << "\n";

  std::ofstream out(dir / "report.md");
  if (!out) throw IntegrityError("cannot write " + (dir / "report.md").string());
  out << md.str();
  log(cfg, "report: wrote " + (dir / "report.md").string());
}

void cmd_all(const RunConfig& cfg) {
  cmd_simulate(cfg);
  cmd_panel(cfg);
  cmd_estimate(cfg);
  cmd_bacon(cfg);
  cmd_placebo(cfg);
  cmd_production(cfg);
  cmd_counterfactual(cfg);
  cmd_gini(cfg);
  cmd_report(cfg);
}

}  // namespace ridepolicy::pipeline
