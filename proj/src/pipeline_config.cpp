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

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "pipeline_internal.hpp"
#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/pipeline.hpp"

namespace ridepolicy::pipeline {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& section, const std::string& key,
                      const std::string& value, const std::string& what) {
  throw ConfigError(section + "." + key + " = '" + value + "': " + what);
}

template <class T>
T parse_as(const std::string& v, const std::string& s, const std::string& k);

template <>
double parse_as<double>(const std::string& v, const std::string& s, const std::string& k) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) bad(s, k, v, "not a number");
    return d;
  } catch (const std::logic_error&) {
    bad(s, k, v, "not a number");
  }
}

template <>
int parse_as<int>(const std::string& v, const std::string& s, const std::string& k) {
  int x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(s, k, v, "not an integer");
  return x;
}

template <>
std::uint64_t parse_as<std::uint64_t>(const std::string& v, const std::string& s,
                                      const std::string& k) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad(s, k, v, "not an unsigned integer");
  return x;
}

template <>
bool parse_as<bool>(const std::string& v, const std::string& s, const std::string& k) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad(s, k, v, "not a boolean");
}

template <>
std::string parse_as<std::string>(const std::string& v, const std::string&,
                                  const std::string&) {
  return v;
}

template <>
fs::path parse_as<fs::path>(const std::string& v, const std::string&, const std::string&) {
  return fs::path(v);
}

template <>
std::vector<std::string> parse_as<std::vector<std::string>>(const std::string& v,
                                                            const std::string&,
                                                            const std::string&) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <>
std::optional<std::uint64_t> parse_as<std::optional<std::uint64_t>>(const std::string& v,
                                                                    const std::string& s,
                                                                    const std::string& k) {
  if (v.empty() || v == "none") return std::nullopt;
  return parse_as<std::uint64_t>(v, s, k);
}

template <>
Timestamp parse_as<Timestamp>(const std::string& v, const std::string& s,
                              const std::string& k) {
  try {
    return parse_timestamp(v.size() == 10 ? v + " 00:00" : v);
  } catch (const std::exception&) {
    bad(s, k, v, "expected YYYY-MM-DD");
  }
}

std::string show(double v) { return io::fmt_double(v, 15); }
std::string show(int v) { return std::to_string(v); }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::string& v) { return v; }
std::string show(const fs::path& v) { return v.string(); }
std::string show(const std::optional<std::uint64_t>& v) {
  return v ? std::to_string(*v) : "none";
}
std::string show(Timestamp v) { return format_timestamp(v).substr(0, 10); }
std::string show(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + x;
  return out;
}

struct Setting {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <class F>
Setting make(std::string section, std::string key, F ref) {
  using T = std::remove_reference_t<decltype(ref(std::declval<RunConfig&>()))>;
  Setting s{section, key, nullptr, nullptr};
  s.get = [ref](const RunConfig& c) { return show(ref(const_cast<RunConfig&>(c))); };
  s.set = [ref, section, key](RunConfig& c, const std::string& v) {
    ref(c) = parse_as<T>(v, section, key);
  };
  return s;
}

#define RP_SET(section, key, member) \
  make(section, key, [](RunConfig& c) -> auto& { return c.member; })

const std::vector<Setting>& settings() {
  static const std::vector<Setting> all = {
      RP_SET("run", "seed", seed),
      RP_SET("run", "out", out),
      RP_SET("run", "threads", threads),
      RP_SET("run", "model", model),
      RP_SET("paths", "trips", trips_path),
      RP_SET("paths", "demand", demand_path),
      RP_SET("sim", "two_year", two_year),
      RP_SET("sim", "n_drivers", sim.n_drivers),
      RP_SET("sim", "n_weeks_pre", sim.n_weeks_pre),
      RP_SET("sim", "n_weeks_post", sim.n_weeks_post),
      RP_SET("sim", "anchor", sim.anchor),
      RP_SET("sim", "prior_year_seed", sim.prior_year_seed),
      RP_SET("sim", "population_seed", sim.population_seed),
      RP_SET("sim", "hex_cell_area_km2", sim.hex_cell_area_km2),
      RP_SET("sim", "production_hex_area_km2", sim.production_hex_area_km2),
      RP_SET("sim", "base_intent_rate", sim.base_intent_rate),
      RP_SET("sim", "request_share", sim.request_share),
      RP_SET("sim", "generate_demand", sim.generate_demand),
      RP_SET("sim", "effect_hours", sim.effect_hours),
      RP_SET("sim", "effect_utilization", sim.effect_utilization),
      RP_SET("sim", "effect_hourly_earnings", sim.effect_hourly_earnings),
      RP_SET("sim", "cancel_lift", sim.cancel_lift),
      RP_SET("sim", "demand_spillover", sim.demand_spillover),
      RP_SET("sim", "anticipation_weeks", sim.anticipation_weeks),
      RP_SET("sim", "guarantee_share", sim.guarantee_share),
      RP_SET("sim", "apply_guarantee", sim.apply_guarantee),
      RP_SET("sim", "price_index_volatility", sim.price_index_volatility),
      RP_SET("sim", "major_home_share", sim.major_home_share),
      RP_SET("sim", "venture_scale", sim.venture_scale),
      RP_SET("sim", "cancel_base", sim.cancel_base),
      RP_SET("sim", "year_drift_share", sim.year_drift_share),
      RP_SET("estimate", "anticipation", anticipation),
      RP_SET("estimate", "bootstrap_reps", bootstrap_reps),
      RP_SET("estimate", "clip_lo", clip_lo),
      RP_SET("estimate", "clip_hi", clip_hi),
      RP_SET("estimate", "never_treated_only", never_treated_only),
      RP_SET("estimate", "outcomes", outcomes),
      RP_SET("estimate", "heterogeneity_outcomes", heterogeneity_outcomes),
      RP_SET("estimate", "buffer_km", buffer_km),
      RP_SET("estimate", "band_km", band_km),
      RP_SET("estimate", "caliper_sd", caliper_sd),
      RP_SET("estimate", "match_threshold_sd", match_threshold_sd),
      RP_SET("estimate", "zip_area_km2", zip_area_km2),
      RP_SET("estimate", "top_hexagons", top_hexagons),
      RP_SET("estimate", "bacon_outcome", bacon_outcome),
      RP_SET("placebo", "seeds", placebo_seeds),
      RP_SET("counterfactual", "week", counterfactual_week),
      RP_SET("counterfactual", "heuristics", heuristics),
      RP_SET("counterfactual", "min_sessions", min_sessions),
  };
  return all;
}

#undef RP_SET

const std::vector<std::string>& known_heuristics() {
  static const std::vector<std::string> h = {"one_hop", "two_hop", "demand_weighted",
                                             "greedy_spatial", "greedy_temporal"};
  return h;
}

}  // namespace

void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key,
                   const std::string& value) {
  for (const auto& s : settings()) {
    if (s.section == section && s.key == key) {
      s.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError("unknown setting " + section + "." + key);
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError("setting '" + section + "' is outside a [section]");
    }
    for (const auto& [key, value] : body) {
      apply_setting(cfg, section, key, value.data());
    }
  }
  return cfg;
}

std::vector<std::pair<std::string, std::string>> effective_config(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& s : settings()) out.emplace_back(s.section + "." + s.key, s.get(cfg));
  return out;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  // FNV-1a over the canonical "key = value" lines, output paths excluded so
  // that the same analysis written elsewhere hashes the same.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : effective_config(cfg)) {
    if (k == "run.out" || k == "run.threads") continue;
    for (const char c : k + " = " + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void finalize(RunConfig& cfg) {
  if (!cfg.seed) throw ConfigError("a seed is required (--seed N or [run] seed)");
  cfg.sim.seed = *cfg.seed;
  sim::validate(cfg.sim);
  if (cfg.threads < 1) throw ConfigError("threads must be at least 1");
  static const std::set<std::string> models = {"1", "2", "3", "4", "all"};
  if (!models.count(cfg.model)) throw ConfigError("model must be one of 1, 2, 3, 4, all");
  if (cfg.bootstrap_reps < 2) throw ConfigError("estimate.bootstrap_reps must be at least 2");
  if (!(cfg.clip_lo > 0 && cfg.clip_lo < cfg.clip_hi && cfg.clip_hi < 1)) {
    throw ConfigError("estimate.clip_lo/clip_hi must satisfy 0 < lo < hi < 1");
  }
  if (cfg.anticipation < 0) throw ConfigError("estimate.anticipation must be >= 0");
  for (const auto* list : {&cfg.outcomes, &cfg.heterogeneity_outcomes}) {
    for (const auto& o : *list) {
      if (!panel::is_outcome_name(o)) throw ConfigError("unknown outcome '" + o + "'");
    }
  }
  if (!panel::is_outcome_name(cfg.bacon_outcome)) {
    throw ConfigError("unknown outcome '" + cfg.bacon_outcome + "'");
  }
  for (const auto& h : cfg.heuristics) {
    const auto& k = known_heuristics();
    if (std::find(k.begin(), k.end(), h) == k.end()) {
      throw ConfigError("unknown heuristic '" + h + "'");
    }
  }
  if (cfg.buffer_km < 0 || cfg.band_km <= 0 || cfg.caliper_sd <= 0 ||
      cfg.match_threshold_sd <= 0 || cfg.zip_area_km2 <= 0 || cfg.top_hexagons < 1) {
    throw ConfigError("estimate: buffers, band, calipers and zone sizes must be positive");
  }
  if (cfg.placebo_seeds < 0) throw ConfigError("placebo.seeds must be >= 0");
  if (cfg.min_sessions < 1) throw ConfigError("counterfactual.min_sessions must be >= 1");
  if (cfg.counterfactual_week < cfg.sim.first_week() ||
      cfg.counterfactual_week > cfg.sim.last_week()) {
    throw ConfigError("counterfactual.week outside the simulated horizon");
  }
}

bool log_outcome(const std::string& outcome) {
  static const std::set<std::string> logs = {
      "num_trip",     "num_session", "num_hour",    "trip_hour",     "num_mile",
      "hourly_earning", "earning_per_ride", "ave_dur_per_session",
      "ave_n_trip_per_hour", "num_accepted", "earnings", "net_payments",
      "platform_take", "hourly_revenue"};
  return logs.count(outcome) > 0;
}

// Ground truth sidecar.

void write_truth(const fs::path& path, const sim::GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["seed"] = truth.seed;
  j["anchor"] = format_timestamp(truth.anchor);
  j["anticipation_weeks"] = truth.anticipation_weeks;
  j["effects"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : truth.effects) j["effects"][k] = v;
  auto cohorts = nlohmann::ordered_json::array();
  for (const auto& [id, g] : truth.cohorts) {
    cohorts.push_back({id, g ? nlohmann::ordered_json(*g) : nlohmann::ordered_json()});
  }
  j["cohorts"] = std::move(cohorts);
  auto el = nlohmann::ordered_json::array();
  for (const auto& e : truth.elasticities) {
    el.push_back({{"area", e.market.area},
                  {"slot", std::string(matchfn::slot_name(e.market.slot))},
                  {"day", std::string(matchfn::day_name(e.market.day))},
                  {"log_A", e.log_A},
                  {"alpha", e.alpha},
                  {"beta", e.beta}});
  }
  j["elasticities"] = std::move(el);
  std::ofstream out(path);
  if (!out) throw IntegrityError("cannot write " + path.string());
  out << j.dump(1) << "\n";
}

sim::GroundTruth read_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("cannot read " + path.string());
  sim::GroundTruth t;
  try {
    const auto j = nlohmann::json::parse(in);
    t.seed = j.at("seed").get<std::uint64_t>();
    t.anchor = parse_timestamp(j.at("anchor").get<std::string>());
    t.anticipation_weeks = j.at("anticipation_weeks").get<int>();
    for (const auto& [k, v] : j.at("effects").items()) t.effects[k] = v.get<double>();
    for (const auto& c : j.at("cohorts")) {
      std::optional<int> g;
      if (!c.at(1).is_null()) g = c.at(1).get<int>();
      t.cohorts.emplace_back(c.at(0).get<std::int64_t>(), g);
    }
    for (const auto& e : j.at("elasticities")) {
      sim::MarketElasticity m;
      m.market.area = e.at("area").get<int>();
      m.market.slot = matchfn::parse_slot(e.at("slot").get<std::string>());
      m.market.day = matchfn::parse_day(e.at("day").get<std::string>());
      m.log_A = e.at("log_A").get<double>();
      m.alpha = e.at("alpha").get<double>();
      m.beta = e.at("beta").get<double>();
      t.elasticities.push_back(m);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
  return t;
}

void write_params(const fs::path& path, const std::vector<matchfn::ProductionParams>& params) {
  io::CsvWriter w(path, {"area", "slot", "day", "log_A", "alpha", "beta", "r2", "n_obs",
                         "n_dropped", "status"});
  for (const auto& p : params) {
    const bool ok = p.fitted();
    w.row({std::to_string(p.market.area), std::string(matchfn::slot_name(p.market.slot)),
           std::string(matchfn::day_name(p.market.day)), ok ? io::fmt_double(p.log_A, 12) : "",
           ok ? io::fmt_double(p.alpha, 12) : "", ok ? io::fmt_double(p.beta, 12) : "",
           ok ? io::fmt_double(p.r2, 12) : "", std::to_string(p.n_obs),
           std::to_string(p.n_dropped), std::string(matchfn::fit_status_name(p.status))});
  }
  w.close();
}

std::vector<matchfn::ProductionParams> read_params(const fs::path& path) {
  const auto t = io::CsvTable::read(path);
  const auto ca = t.column("area"), cs = t.column("slot"), cd = t.column("day"),
             cl = t.column("log_A"), cal = t.column("alpha"), cb = t.column("beta"),
             cr = t.column("r2"), cn = t.column("n_obs"), cdr = t.column("n_dropped"),
             cst = t.column("status");
  std::vector<matchfn::ProductionParams> out;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    matchfn::ProductionParams p;
    p.market.area = static_cast<int>(io::parse_int(t.at(i, ca)));
    p.market.slot = matchfn::parse_slot(t.at(i, cs));
    p.market.day = matchfn::parse_day(t.at(i, cd));
    p.n_obs = static_cast<int>(io::parse_int(t.at(i, cn)));
    p.n_dropped = static_cast<int>(io::parse_int(t.at(i, cdr)));
    const auto& st = t.at(i, cst);
    if (st == matchfn::fit_status_name(matchfn::FitStatus::kFitted)) {
      p.status = matchfn::FitStatus::kFitted;
      p.log_A = io::parse_double(t.at(i, cl));
      p.alpha = io::parse_double(t.at(i, cal));
      p.beta = io::parse_double(t.at(i, cb));
      p.r2 = io::parse_double(t.at(i, cr));
      if (!std::isfinite(p.log_A) || !std::isfinite(p.alpha) || !std::isfinite(p.beta)) {
        throw IntegrityError(path.string() + ": fitted market " +
                             matchfn::market_label(p.market) + " has missing parameters");
      }
    } else if (st == matchfn::fit_status_name(matchfn::FitStatus::kCollinear)) {
      p.status = matchfn::FitStatus::kCollinear;
    } else if (st == matchfn::fit_status_name(matchfn::FitStatus::kTooFewObs)) {
      p.status = matchfn::FitStatus::kTooFewObs;
    } else {
      throw IntegrityError(path.string() + ": unknown status '" + st + "'");
    }
    out.push_back(p);
  }
  return out;
}

namespace detail {

fs::path out_dir(const RunConfig& cfg) { return cfg.out; }

fs::path trips_file(const RunConfig& cfg) {
  return cfg.trips_path.empty() ? out_dir(cfg) / "trips.csv" : cfg.trips_path;
}

fs::path demand_file(const RunConfig& cfg) {
  return cfg.demand_path.empty() ? out_dir(cfg) / "demand.csv" : cfg.demand_path;
}

const fs::path& require(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw MissingArtifact("missing " + path.string() + "; run `ridepolicy " + producer +
                          "` first");
  }
  return path;
}

void log(const RunConfig& cfg, const std::string& msg) {
  if (!cfg.quiet) std::cerr << msg << "\n";
}

std::string num(double v) { return io::fmt_double(v, 10); }
std::string num(int v) { return std::to_string(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(std::int64_t v) { return std::to_string(v); }

Timestamp prior_anchor(const RunConfig& cfg) { return sim::prior_year_config(cfg.sim).anchor; }

std::optional<sim::GroundTruth> maybe_truth(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  return read_truth(path);
}

std::vector<TripEvent> load_trips(const fs::path& path) { return io::read_trips(path); }
std::vector<DemandRow> load_demand(const fs::path& path) { return io::read_demand(path); }

}  // namespace detail

}  // namespace ridepolicy::pipeline
