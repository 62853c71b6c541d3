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

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <tuple>

#include "pipeline_internal.hpp"
#include "ridepolicy/csa.hpp"
#include "ridepolicy/designs.hpp"
#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/pipeline.hpp"
#include "ridepolicy/splits.hpp"
#include "ridepolicy/twfe.hpp"

namespace ridepolicy::pipeline {

using causal::CsaResult;
using causal::OutcomeTransform;
using causal::UnitPanel;
using namespace detail;

namespace {

constexpr std::uint64_t kTagBoot = 0x5eedb007;
constexpr std::uint64_t kTagKmeans = 0x5eed0c1a;
constexpr std::uint64_t kTagPlacebo = 0x5eedb1ac;

OutcomeTransform transform_of(const std::string& outcome) {
  return log_outcome(outcome) ? OutcomeTransform::kLog : OutcomeTransform::kLevel;
}

std::string transform_name(OutcomeTransform t) {
  switch (t) {
    case OutcomeTransform::kLog: return "log";
    case OutcomeTransform::kLog1p: return "log1p";
    case OutcomeTransform::kLevel: break;
  }
  return "level";
}

causal::CsaOptions csa_options(const RunConfig& cfg, std::uint64_t a, std::uint64_t b) {
  causal::CsaOptions o;
  o.anticipation = cfg.anticipation;
  o.never_treated_only = cfg.never_treated_only;
  o.clip_lo = cfg.clip_lo;
  o.clip_hi = cfg.clip_hi;
  o.boot.reps = cfg.bootstrap_reps;
  o.boot.seed = sim::derive_seed(*cfg.seed, kTagBoot, a, b);
  o.boot.threads = cfg.threads;
  return o;
}

std::vector<std::size_t> indices_of(const UnitPanel& p, const std::set<std::int64_t>& ids) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.n_units(); ++i) {
    if (ids.count(p.unit_ids[i])) out.push_back(i);
  }
  return out;
}

int treated_units(const UnitPanel& p) {
  int n = 0;
  for (const auto& c : p.cohort) n += c.has_value();
  return n;
}

// Injected effect on the estimand's scale, when the simulator records one.
std::optional<double> injected(const std::optional<sim::GroundTruth>& truth,
                               const std::string& outcome, OutcomeTransform t) {
  if (!truth) return std::nullopt;
  std::string key;
  if (outcome == "num_hour" && t == OutcomeTransform::kLog) key = "log_num_hour";
  if (outcome == "ave_utilization" && t == OutcomeTransform::kLevel) key = "ave_utilization";
  if (outcome == "weekly_cancel_rate" && t == OutcomeTransform::kLevel) {
    key = "weekly_cancel_rate";
  }
  const auto it = truth->effects.find(key);
  if (it == truth->effects.end()) return std::nullopt;
  return it->second;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string pct_or_blank(double v, OutcomeTransform t) {
  return t == OutcomeTransform::kLevel ? "" : num(causal::pct_effect(v));
}

struct PretrendStats {
  int cells = 0;
  int within = 0;
};

PretrendStats pretrend(const CsaResult& r) {
  PretrendStats s;
  for (const auto& a : r.dynamic) {
    if (a.e >= 0 || !(a.std_error > 0)) continue;
    ++s.cells;
    if (std::abs(a.value) <= 2.0 * a.std_error) ++s.within;
  }
  return s;
}

class EstimateOutputs {
 public:
  EstimateOutputs(const fs::path& dir, std::optional<sim::GroundTruth> truth)
      : truth_(std::move(truth)),
        att_(dir / "att_gt.csv", {"model", "outcome", "transform", "g", "t", "estimate",
                                  "std_error", "n_treated", "n_control", "base_period",
                                  "ipw_fallback"}),
        agg_(dir / "aggregates.csv",
             {"model", "outcome", "transform", "kind", "e", "estimate", "std_error", "ci_lo",
              "ci_hi", "pct_effect", "injected", "n_units", "n_treated_units",
              "excluded_cells", "omitted_cells", "boot_reps", "boot_dropped", "note"}) {}

  void add(const std::string& model, const std::string& outcome, OutcomeTransform t,
           const UnitPanel& p, const CsaResult& r) {
    const auto tn = transform_name(t);
    for (const auto& c : r.cells) {
      att_.row({model, outcome, tn, num(c.g), num(c.t), num(c.estimate), num(c.std_error),
                num(c.n_treated), num(c.n_control), num(c.base_period),
                c.ipw_fallback ? "1" : "0"});
    }
    const auto inj = injected(truth_, outcome, t);
    const auto& o = r.overall;
    agg_.row({model, outcome, tn, "overall", "", num(o.value), num(o.std_error), num(o.ci_lo),
              num(o.ci_hi), pct_or_blank(o.value, t), opt_num(inj), num(p.n_units()),
              num(treated_units(p)), num(p.excluded), num(r.omitted_cells), num(r.boot_reps),
              num(r.boot_dropped), ""});
    for (const auto& d : r.dynamic) {
      agg_.row({model, outcome, tn, "dynamic", num(d.e), num(d.value), num(d.std_error),
                num(d.ci_lo), num(d.ci_hi), pct_or_blank(d.value, t), "", num(p.n_units()),
                num(treated_units(p)), num(p.excluded), num(r.omitted_cells),
                num(r.boot_reps), num(r.boot_dropped), ""});
    }
    print(model, outcome, tn, o.value, o.std_error, t, inj);
  }

  void add_twfe(const std::string& outcome, OutcomeTransform t, const causal::TwfeResult& r) {
    const auto inj = injected(truth_, outcome, t);
    agg_.row({"model4", outcome, transform_name(t), "twfe_did", "", num(r.beta3), num(r.se3),
              num(r.beta3 - 1.96 * r.se3), num(r.beta3 + 1.96 * r.se3),
              pct_or_blank(r.beta3, t), opt_num(inj), num(r.n_units), num(r.n_units), "", "",
              "", "", ""});
    print("model4", outcome, transform_name(t), r.beta3, r.se3, t, inj);
  }

  void failed(const std::string& model, const std::string& outcome, OutcomeTransform t,
              const std::string& why) {
    agg_.row({model, outcome, transform_name(t), "overall", "", "", "", "", "", "", "", "",
              "", "", "", "", "", why});
    std::printf("%-7s %-20s %-6s  not estimated: %s\n", model.c_str(), outcome.c_str(),
                transform_name(t).c_str(), why.c_str());
  }

  void close() {
    att_.close();
    agg_.close();
  }

 private:
  void print(const std::string& model, const std::string& outcome, const std::string& tn,
             double est, double se, OutcomeTransform t, const std::optional<double>& inj) {
    std::printf("%-7s %-20s %-6s psi %9.4f  se %7.4f", model.c_str(), outcome.c_str(),
                tn.c_str(), est, se);
    if (t != OutcomeTransform::kLevel) std::printf("  pct %7.2f%%", causal::pct_effect(est));
    if (inj) std::printf("  injected %7.4f", *inj);
    std::printf("\n");
  }

  std::optional<sim::GroundTruth> truth_;
  io::CsvWriter att_;
  io::CsvWriter agg_;
};

std::vector<panel::CohortAssignment> cohorts_of(const std::vector<panel::DriverWeekRecord>& rows) {
  std::vector<panel::CohortAssignment> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().driver_id != r.driver_id) {
      panel::CohortAssignment c;
      c.driver_id = r.driver_id;
      c.cohort = r.cohort;
      out.push_back(c);
    }
  }
  return out;
}

std::map<std::int64_t, std::optional<int>> cohort_map(
    const std::vector<panel::DriverWeekRecord>& rows) {
  std::map<std::int64_t, std::optional<int>> m;
  for (const auto& r : rows) m.emplace(r.driver_id, r.cohort);
  return m;
}

void write_balance_rows(io::CsvWriter& w, const std::string& model,
                        const std::vector<causal::BalanceRow>& rows) {
  for (const auto& b : rows) {
    w.row({model, b.name, num(b.smd_pre), num(b.smd_post), b.constant ? "1" : "0"});
  }
}

std::vector<int> treated_flags(const UnitPanel& p) {
  std::vector<int> t;
  for (const auto& c : p.cohort) t.push_back(c.has_value() ? 1 : 0);
  return t;
}

}  // namespace

void cmd_estimate(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const auto cur = panel::read_driver_week_panel(require(dir / "driver_week.csv", "panel"));
  const auto trips = load_trips(require(trips_file(cfg), "simulate"));
  const auto truth = maybe_truth(dir / "truth.json");
  const auto& major = cfg.sim.major_market().polygon;
  const Timestamp anchor = cfg.sim.anchor;
  const int fw = cfg.sim.first_week();
  const int lw = cfg.sim.last_week();
  const bool all = cfg.model == "all";
  auto want = [&](int m) { return all || cfg.model == std::to_string(m); };

  EstimateOutputs out(dir, truth);
  io::CsvWriter samples(dir / "samples.csv", {"model", "quantity", "value"});
  io::CsvWriter balance(dir / "balance.csv",
                        {"model", "covariate", "smd_pre", "smd_post", "constant"});
  const auto& covs = causal::default_covariates();

  // Runs one CSA estimate, recording estimation failures instead of aborting.
  auto run_csa = [&](const std::string& model, int m, std::size_t oi, const std::string& o,
                     const UnitPanel& p, bool never_only) {
    auto opt = csa_options(cfg, static_cast<std::uint64_t>(m), oi);
    opt.never_treated_only = opt.never_treated_only || never_only;
    try {
      out.add(model, o, transform_of(o), p, causal::estimate_csa(p, opt));
    } catch (const EstimationError& e) {
      out.failed(model, o, transform_of(o), e.what());
    }
  };

  std::set<std::int64_t> m1_ids;
  if (want(1)) {
    m1_ids = causal::model1_sample(trips, major, anchor, fw, cfg.buffer_km);
    for (std::size_t oi = 0; oi < cfg.outcomes.size(); ++oi) {
      const auto& o = cfg.outcomes[oi];
      const auto up = causal::make_unit_panel(cur, o, transform_of(o));
      const auto sub = causal::subset_units(up, indices_of(up, m1_ids));
      if (oi == 0) {
        samples.row({"model1", "drivers", num(sub.n_units())});
        samples.row({"model1", "treated_drivers", num(treated_units(sub))});
        try {
          const auto flags = treated_flags(sub);
          const auto ps = causal::fit_propensity(sub.x, flags, covs, cfg.clip_lo, cfg.clip_hi);
          write_balance_rows(balance, "model1",
                             causal::balance_diagnostics(
                                 sub.x, causal::att_weights(ps.scores, flags), flags, covs));
        } catch (const EstimationError& e) {
          log(cfg, std::string("estimate: model1 balance skipped: ") + e.what());
        }
      }
      run_csa("model1", 1, oi, o, sub, false);
    }
  }

  if (want(2)) {
    const auto weeks = causal::border_samples(trips, major, anchor, 0, lw, cfg.band_km);
    const auto bu = causal::border_units(weeks, cohorts_of(cur));
    const auto up0 = causal::make_unit_panel(cur, "num_hour", OutcomeTransform::kLevel);
    const auto ti = indices_of(up0, bu.treated);
    const auto ci = indices_of(up0, bu.control);
    const auto cm = causal::caliper_match(up0, ti, ci, cfg.caliper_sd);
    std::set<std::int64_t> keep;
    for (auto i : cm.keep) keep.insert(up0.unit_ids[i]);
    samples.row({"model2", "border_treated", num(ti.size())});
    samples.row({"model2", "border_control", num(ci.size())});
    samples.row({"model2", "matched_treated", num(cm.n_treated_matched)});
    samples.row({"model2", "unmatched_treated", num(cm.n_treated_unmatched)});
    samples.row({"model2", "controls_used", num(cm.n_controls_used)});
    samples.row({"model2", "drivers", num(keep.size())});
    if (!ti.empty() && !ci.empty() && cm.n_treated_matched > 0) {
      std::vector<std::size_t> both(ti);
      both.insert(both.end(), ci.begin(), ci.end());
      std::sort(both.begin(), both.end());
      const auto pre = causal::subset_units(up0, both);
      const auto post = causal::subset_units(up0, cm.keep);
      const auto fp = treated_flags(pre), fq = treated_flags(post);
      const auto bp = causal::balance_diagnostics(
          pre.x, Eigen::VectorXd::Ones(pre.x.rows()), fp, covs);
      const auto bq = causal::balance_diagnostics(
          post.x, Eigen::VectorXd::Ones(post.x.rows()), fq, covs);
      std::vector<causal::BalanceRow> rows = bp;
      for (std::size_t j = 0; j < rows.size(); ++j) rows[j].smd_post = bq[j].smd_pre;
      write_balance_rows(balance, "model2", rows);
    }
    for (std::size_t oi = 0; oi < cfg.outcomes.size(); ++oi) {
      const auto& o = cfg.outcomes[oi];
      const auto up = causal::make_unit_panel(cur, o, transform_of(o));
      run_csa("model2", 2, oi, o, causal::subset_units(up, indices_of(up, keep)), false);
    }
  }

  const fs::path prior_panel = prior_dir(cfg) / "driver_week.csv";
  if ((want(3) || want(4)) && !fs::exists(prior_panel)) {
    if (!all) require(prior_panel, "simulate and panel with [sim] two_year = true");
    log(cfg, "estimate: no prior-year panel; models 3 and 4 skipped");
  } else if (want(3) || want(4)) {
    const auto pri = panel::read_driver_week_panel(prior_panel);
    const auto m3 = causal::match_across_years(cur, pri, covs, cfg.match_threshold_sd);
    if (!m3.warning.empty()) log(cfg, "estimate: model3 " + m3.warning);
    if (want(3)) {
      samples.row({"model3", "eligible", num(m3.eligible.size())});
      samples.row({"model3", "retained", num(m3.retained.size())});
      write_balance_rows(balance, "model3", m3.balance);
      for (std::size_t oi = 0; oi < cfg.outcomes.size(); ++oi) {
        const auto& o = cfg.outcomes[oi];
        const auto up = causal::make_unit_panel(cur, o, transform_of(o));
        const auto upp = causal::make_unit_panel(pri, o, transform_of(o));
        try {
          run_csa("model3", 3, oi, o, causal::stack_two_year(up, upp, m3.retained), true);
        } catch (const EstimationError& e) {
          out.failed("model3", o, transform_of(o), e.what());
        }
      }
    }
    if (want(4)) {
      const fs::path pd = prior_dir(cfg);
      const auto ptrips = load_trips(require(pd / "trips.csv", "simulate"));
      const auto demand = load_demand(require(demand_file(cfg), "simulate"));
      const auto pdemand = load_demand(require(pd / "demand.csv", "simulate"));
      const auto layout = sim::build_layout(cfg.sim);
      const geo::HexGrid zip(cfg.zip_area_km2);
      const Timestamp panchor = prior_anchor(cfg);
      const auto dc = causal::driver_demand_exposure(trips, demand, layout.demand_grid, zip,
                                                     anchor, fw, lw);
      const auto dp = causal::driver_demand_exposure(ptrips, pdemand, layout.demand_grid, zip,
                                                     panchor, fw, lw);
      const auto in_c = causal::all_pre_trips_inside(trips, major, anchor, fw);
      const auto in_p = causal::all_pre_trips_inside(ptrips, major, panchor, fw);
      std::set<std::int64_t> drivers;
      for (auto id : m3.retained) {
        if (in_c.count(id) && in_p.count(id)) drivers.insert(id);
      }
      io::CsvWriter m4(dir / "model4.csv",
                       {"outcome", "transform", "beta1", "se1", "beta2", "se2",
                        "beta2_identified", "beta3", "se3", "beta_demand", "se_demand",
                        "n_obs", "n_units", "residual_sd"});
      for (std::size_t oi = 0; oi < cfg.outcomes.size(); ++oi) {
        const auto& o = cfg.outcomes[oi];
        const auto t = transform_of(o);
        const auto obs = causal::model4_observations(cur, pri, drivers, o, t, dc, dp, fw);
        try {
          const auto r = causal::twfe_did(obs);
          if (oi == 0) {
            samples.row({"model4", "drivers", num(r.n_units)});
            samples.row({"model4", "observations", num(r.n_obs)});
          }
          m4.row({o, transform_name(t), num(r.beta1), num(r.se1),
                  r.beta2_identified ? num(r.beta2) : "", r.beta2_identified ? num(r.se2) : "",
                  r.beta2_identified ? "1" : "0", num(r.beta3), num(r.se3),
                  num(r.beta_demand), num(r.se_demand), num(r.n_obs), num(r.n_units),
                  num(r.residual_sd)});
          out.add_twfe(o, t, r);
        } catch (const EstimationError& e) {
          out.failed("model4", o, t, e.what());
        }
      }
      m4.close();
    }
  }

  if (want(1)) {
    // Heterogeneity within the Model 1 sample.
    const auto hl = causal::split_hh_lh(cur, cfg.sim.guarantee_share);
    const auto us = causal::split_uncertainty(cur);
    std::vector<std::tuple<std::string, std::string, std::set<std::int64_t>>> groups = {
        {"take_rate", "HH", hl.hh},
        {"take_rate", "LH", hl.lh},
        {"uncertainty", "low_tolerance", us.low_tolerance},
        {"uncertainty", "high_tolerance", us.high_tolerance},
        {"uncertainty", "others", us.others},
    };
    std::map<std::int64_t, std::string> type_of;
    const auto f = causal::driver_features(trips, anchor, fw);
    if (f.x.rows() >= 3) {
      const auto km = causal::kmeans(causal::zscore_columns(f.x), 3,
                                     sim::derive_seed(*cfg.seed, kTagKmeans));
      std::map<std::int64_t, double> hours;
      for (const auto& [id, v] : causal::pre_period_means(cur, {"num_hour"})) hours[id] = v[0];
      const auto names = causal::name_clusters(f, km, hours);
      std::map<std::string, std::set<std::int64_t>> by;
      for (std::size_t i = 0; i < f.driver_ids.size(); ++i) {
        type_of[f.driver_ids[i]] = names[km.labels[i]];
        by[names[km.labels[i]]].insert(f.driver_ids[i]);
      }
      for (const char* n : {"FT", "PT", "LUX"}) groups.emplace_back("driver_type", n, by[n]);
    }
    io::CsvWriter dg(dir / "driver_groups.csv",
                     {"driver_id", "take_rate", "uncertainty", "driver_type"});
    for (const auto& c : cohorts_of(cur)) {
      const auto id = c.driver_id;
      std::string u = us.low_tolerance.count(id)    ? "low_tolerance"
                      : us.high_tolerance.count(id) ? "high_tolerance"
                      : us.others.count(id)         ? "others"
                                                    : "no_data";
      std::string tr = hl.hh.count(id) ? "HH" : hl.lh.count(id) ? "LH" : "";
      const auto it = type_of.find(id);
      dg.row({num(id), tr, u, it == type_of.end() ? "" : it->second});
    }
    dg.close();

    io::CsvWriter het(dir / "heterogeneity.csv",
                      {"split", "group", "outcome", "transform", "n_units", "n_treated_units",
                       "estimate", "std_error", "ci_lo", "ci_hi", "pct_effect", "note"});
    std::uint64_t gi = 0;
    for (const auto& [split, group, ids] : groups) {
      std::set<std::int64_t> in;
      for (auto id : ids) {
        if (m1_ids.count(id)) in.insert(id);
      }
      for (std::size_t oi = 0; oi < cfg.heterogeneity_outcomes.size(); ++oi) {
        const auto& o = cfg.heterogeneity_outcomes[oi];
        const auto t = transform_of(o);
        const auto up = causal::make_unit_panel(cur, o, t);
        const auto sub = causal::subset_units(up, indices_of(up, in));
        try {
          const auto r = causal::estimate_csa(sub, csa_options(cfg, 100 + gi, oi));
          const auto& a = r.overall;
          het.row({split, group, o, transform_name(t), num(sub.n_units()),
                   num(treated_units(sub)), num(a.value), num(a.std_error), num(a.ci_lo),
                   num(a.ci_hi), pct_or_blank(a.value, t), ""});
          std::printf("het     %-12s %-15s %-14s psi %9.4f  se %7.4f  n %zu\n", split.c_str(),
                      group.c_str(), o.c_str(), a.value, a.std_error, sub.n_units());
        } catch (const EstimationError& e) {
          het.row({split, group, o, transform_name(t), num(sub.n_units()),
                   num(treated_units(sub)), "", "", "", "", "", e.what()});
        }
      }
      ++gi;
    }
    het.close();
  }

  if (all) {
    // Demand-side spillover on zone-week panels.
    io::CsvWriter sp(dir / "spillover.csv", {"zone_kind", "outcome", "design", "coefficient",
                                             "std_error", "pct_effect", "n_obs", "n_zones",
                                             "injected", "note"});
    std::optional<double> inj;
    if (truth) {
      const auto it = truth->effects.find("log1p_intents_spillover");
      if (it != truth->effects.end()) inj = it->second;
    }
    for (const char* kind : {"zip", "hex"}) {
      const auto rows = panel::read_zone_week_demand(
          require(dir / (std::string("zone_week_") + kind + ".csv"), "panel"));
      for (const char* o : {"intents", "requests", "completes"}) {
        for (bool triple : {false, true}) {
          const std::string design = triple ? "triple" : "did";
          const std::string injected_cell =
              std::string(o) == "intents" && !triple ? opt_num(inj) : "";
          try {
            const auto r = causal::demand_spillover_did(rows, o, triple);
            sp.row({kind, o, design, num(r.interaction), num(r.interaction_se),
                    num(causal::pct_effect(r.interaction)), num(r.fit.n_obs),
                    num(r.fit.n_clusters), injected_cell, ""});
          } catch (const EstimationError& e) {
            sp.row({kind, o, design, "", "", "", "", "", injected_cell, e.what()});
          }
        }
      }
    }
    sp.close();
  }

  samples.close();
  balance.close();
  out.close();
  log(cfg, "estimate: wrote aggregates.csv, att_gt.csv and companions to " + dir.string());
}

void cmd_bacon(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const auto cur = panel::read_driver_week_panel(require(dir / "driver_week.csv", "panel"));
  const auto p = causal::make_unit_panel(cur, cfg.bacon_outcome, OutcomeTransform::kLog1p);
  const auto r = causal::bacon_decompose(p);
  io::CsvWriter comp(dir / "bacon_components.csv",
                     {"category", "treated_group", "control_group", "estimate", "weight"});
  double wsum = 0.0;
  for (const auto& c : r.components) {
    comp.row({causal::bacon_category_name(c.category), num(c.treated_group),
              c.control_group ? num(*c.control_group) : "never", num(c.estimate),
              num(c.weight)});
    wsum += c.weight;
  }
  comp.close();
  io::CsvWriter sum(dir / "bacon_summary.csv",
                    {"category", "estimate", "weight", "n_components"});
  for (const auto& s : r.summary) {
    sum.row({causal::bacon_category_name(s.category), num(s.estimate), num(s.weight),
             num(s.n_components)});
  }
  sum.close();
  io::CsvWriter chk(dir / "bacon_check.csv", {"quantity", "value"});
  chk.row({"outcome", "log1p_" + cfg.bacon_outcome});
  chk.row({"n_units", num(p.n_units())});
  chk.row({"twfe_coefficient", io::fmt_double(r.twfe_coef, 15)});
  chk.row({"weighted_sum", io::fmt_double(r.weighted_sum, 15)});
  chk.row({"abs_difference", io::fmt_double(std::abs(r.weighted_sum - r.twfe_coef), 3)});
  chk.row({"weight_sum", io::fmt_double(wsum, 15)});
  chk.close();
  for (const auto& s : r.summary) {
    std::printf("%-26s estimate %8.4f  weight %.4f\n",
                causal::bacon_category_name(s.category).c_str(), s.estimate, s.weight);
  }
  std::printf("TWFE %.6f  weighted sum %.6f  weights %.6f\n", r.twfe_coef, r.weighted_sum,
              wsum);
}

void cmd_placebo(const RunConfig& cfg) {
  const fs::path dir = out_dir(cfg);
  const std::string outcome = "num_hour";
  const auto t = OutcomeTransform::kLog;
  io::CsvWriter pl(dir / "placebo.csv",
                   {"design", "replicate", "sim_seed", "psi", "std_error", "ci_lo", "ci_hi",
                    "pretrend_cells", "pretrend_within_2se", "n_units", "injected"});
  struct Acc {
    int n = 0, cells = 0, within = 0;
    double sum = 0.0, sum_abs = 0.0;
  };
  std::map<std::string, Acc> acc;
  auto record = [&](const std::string& design, int rep, std::uint64_t seed, const UnitPanel& p,
                    const CsaResult& r, double inj) {
    const auto pt = pretrend(r);
    pl.row({design, num(rep), std::to_string(seed), num(r.overall.value),
            num(r.overall.std_error), num(r.overall.ci_lo), num(r.overall.ci_hi),
            num(pt.cells), num(pt.within), num(p.n_units()), num(inj)});
    auto& a = acc[design];
    ++a.n;
    a.cells += pt.cells;
    a.within += pt.within;
    a.sum += r.overall.value;
    a.sum_abs += std::abs(r.overall.value);
    std::printf("%-18s rep %3d psi %9.4f se %7.4f pretrend %d/%d within 2 se\n",
                design.c_str(), rep, r.overall.value, r.overall.std_error, pt.within,
                pt.cells);
  };

  const fs::path prior_panel = prior_dir(cfg) / "driver_week.csv";
  if (fs::exists(prior_panel)) {
    const auto cur = panel::read_driver_week_panel(require(dir / "driver_week.csv", "panel"));
    const auto pri = panel::read_driver_week_panel(prior_panel);
    const auto truth = maybe_truth(dir / "truth.json");
    const double inj = truth ? truth->effects.at("log_num_hour") : std::nan("");
    const auto up = causal::make_unit_panel(cur, outcome, t);
    record("treatment_year", 0, cfg.sim.seed, up,
           causal::estimate_csa(up, csa_options(cfg, 200, 0)), inj);
    const auto relabelled = causal::relabel_cohorts(pri, cohort_map(cur));
    const auto pp = causal::make_unit_panel(relabelled, outcome, t);
    record("prior_year_labels", 0, cfg.sim.effective_prior_seed(), pp,
           causal::estimate_csa(pp, csa_options(cfg, 201, 0)), 0.0);
  } else {
    log(cfg, "placebo: no prior-year panel; prior-year label design skipped");
  }

  for (int k = 0; k < cfg.placebo_seeds; ++k) {
    sim::SimConfig c = sim::zero_effects(cfg.sim);
    c.seed = sim::derive_seed(*cfg.seed, kTagPlacebo, static_cast<std::uint64_t>(k));
    c.population_seed.reset();
    c.generate_demand = false;
    const auto o = sim::generate_market(c);
    const auto coh = panel::assign_cohorts(o.trips, c.major_market().polygon, c.anchor, 0,
                                           c.last_week());
    panel::PanelConfig pc;
    pc.anchor = c.anchor;
    pc.first_week = c.first_week();
    pc.last_week = c.last_week();
    pc.demand_grid = geo::HexGrid(c.hex_cell_area_km2);
    const auto rows = panel::build_driver_week_panel(o.trips, coh, pc);
    const auto up = causal::make_unit_panel(rows, outcome, t);
    record("zero_effect", k, c.seed, up,
           causal::estimate_csa(up, csa_options(cfg, 300, static_cast<std::uint64_t>(k))),
           0.0);
  }
  pl.close();

  io::CsvWriter sum(dir / "placebo_summary.csv",
                    {"design", "n", "mean_psi", "mean_abs_psi", "pretrend_cells",
                     "pretrend_share_within_2se"});
  for (const auto& [design, a] : acc) {
    sum.row({design, num(a.n), num(a.sum / a.n), num(a.sum_abs / a.n), num(a.cells),
             a.cells ? num(static_cast<double>(a.within) / a.cells) : ""});
  }
  sum.close();
}

}  // namespace ridepolicy::pipeline
