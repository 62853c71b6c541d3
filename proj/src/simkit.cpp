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

#include "ridepolicy/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::sim {

namespace {

using Rng = std::mt19937_64;

enum StreamTag : std::uint64_t {
  kTagPopulation = 0x100,
  kTagDrift = 0x101,
  kTagSchedule = 0x200,
  kTagWeekTrips = 0x300,
  kTagWeekShock = 0x400,
  kTagPrice = 0x500,
  kTagDemand = 0x600,
  kTagCompletes = 0x700,
  kTagElasticity = 0x800,
};

constexpr double kMinutesPerWeek = 7.0 * 24.0 * 60.0;
constexpr double kRoadFactor = 1.25;
constexpr double kKmPerMile = 1.609344;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(Rng& rng, double mean, double sd) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

bool bernoulli(Rng& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

template <std::size_t N>
int draw_index(Rng& rng, const std::array<double, N>& probs) {
  const double u = uniform(rng, 0.0, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  for (std::size_t i = N; i-- > 0;) {
    if (probs[i] > 0) return static_cast<int>(i);
  }
  return 0;
}

template <std::size_t N>
std::array<double, N> perturb_mix(Rng& rng, const std::array<double, N>& base,
                                  double sd) {
  std::array<double, N> out{};
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = base[i] * std::exp(normal(rng, 0.0, sd));
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

geo::Point round_point(const geo::Point& p) {
  return {round4(p.x_km), round4(p.y_km)};
}

geo::Point uniform_in(Rng& rng, const geo::ConvexPolygon& poly) {
  const auto [lo, hi] = poly.bounds();
  for (int i = 0; i < 1000; ++i) {
    const geo::Point p{uniform(rng, lo.x_km, hi.x_km),
                       uniform(rng, lo.y_km, hi.y_km)};
    if (poly.contains(p)) return p;
  }
  return poly.centroid();
}

struct ClassParams {
  double share;
  double hours;
  double hours_sd;
  double session_lo, session_hi;
  double radius;
  double weekend;
  std::array<double, kNumTimeWindows> windows;
  std::array<double, kNumVehicleTypes> vehicles;
};

const std::array<ClassParams, 3> kClasses = {{
    {0.45, 9.0, 0.30, 4.5, 6.5, 10.0, 0.8,
     {0.25, 0.20, 0.10, 0.08, 0.22, 0.13, 0.01, 0.01},
     {0.60, 0.33, 0.05, 0.01, 0.01, 0.0}},
    {0.40, 4.0, 0.35, 2.0, 3.0, 6.0, 1.8,
     {0.06, 0.06, 0.08, 0.06, 0.22, 0.44, 0.06, 0.02},
     {0.80, 0.05, 0.0, 0.0, 0.0, 0.15}},
    {0.15, 6.0, 0.30, 3.0, 4.5, 12.0, 1.3,
     {0.15, 0.12, 0.12, 0.10, 0.18, 0.25, 0.06, 0.02},
     {0.05, 0.05, 0.30, 0.35, 0.25, 0.0}},
}};

constexpr std::array<double, kNumVehicleTypes> kFareMultiplier = {
    1.0, 1.5, 2.2, 2.8, 3.4, 0.8};

constexpr std::array<double, 24> kHourProfile = {
    0.35, 0.25, 0.18, 0.15, 0.18, 0.35, 0.70, 1.20, 1.40, 1.10, 0.95, 1.00,
    1.10, 1.00, 0.95, 1.05, 1.25, 1.45, 1.50, 1.30, 1.10, 0.95, 0.80, 0.55};
constexpr std::array<double, 7> kDayProfile = {1.0, 1.0, 1.0, 1.05,
                                               1.2, 1.15, 0.95};

void apply_class(DriverProfile& p, DriverClass c, Rng& rng) {
  const auto& cp = kClasses[static_cast<int>(c)];
  p.driver_class = c;
  p.log_hours_mean = std::log(cp.hours) + normal(rng, 0.0, cp.hours_sd);
  p.session_hours = uniform(rng, cp.session_lo, cp.session_hi);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                          std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(mix64(seed) ^ tag) ^ a) ^ b);
}

int time_window_of_hour(int hour_of_day) {
  if (hour_of_day < 3) return 6;
  if (hour_of_day < 6) return 7;
  for (int k = 0; k < 6; ++k) {
    if (hour_of_day < kWindowBounds[k + 1]) return k;
  }
  return 5;
}

std::uint64_t SimConfig::effective_prior_seed() const {
  return prior_year_seed ? *prior_year_seed : mix64(seed ^ 0x707269'6f72ULL);
}

std::uint64_t SimConfig::effective_population_seed() const {
  return population_seed ? *population_seed : seed;
}

const MarketSpec& SimConfig::major_market() const {
  for (const auto& m : markets) {
    if (m.major) return m;
  }
  throw ConfigError("no major market in layout");
}

std::vector<MarketSpec> default_layout() {
  return {
      {"major", geo::ConvexPolygon::rectangle(0.0, 0.0, 40.0, 30.0), true},
      {"west", geo::ConvexPolygon::rectangle(-25.5, 0.0, -0.5, 30.0), false},
      {"east", geo::ConvexPolygon::rectangle(40.5, 0.0, 65.5, 30.0), false},
  };
}

std::vector<Hotspot> default_hotspots() {
  return {
      {{12.0, 18.0}, 7.0, 4.0},  {{28.0, 10.0}, 5.0, 5.0},
      {{22.0, 25.0}, 3.0, 3.0},  {{-12.0, 14.0}, 3.0, 5.0},
      {{53.0, 16.0}, 3.0, 5.0},
  };
}

SimConfig default_config() {
  SimConfig c;
  c.markets = default_layout();
  c.hotspots = default_hotspots();
  return c;
}

void validate(const SimConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.n_drivers < 1) fail("n_drivers must be >= 1");
  if (c.n_weeks_pre < 2) fail("n_weeks_pre must be >= 2");
  if (c.n_weeks_post < 1) fail("n_weeks_post must be >= 1");
  if (std::chrono::weekday{std::chrono::floor<std::chrono::days>(c.anchor)} !=
          std::chrono::Monday ||
      hour_of_day(c.anchor) != 0 ||
      (c.anchor - std::chrono::floor<std::chrono::days>(c.anchor)).count() != 0) {
    fail("anchor must be a Monday 00:00");
  }
  if (c.markets.size() < 2) fail("layout needs a major and an adjacent market");
  int majors = 0;
  for (const auto& m : c.markets) majors += m.major ? 1 : 0;
  if (majors != 1) fail("layout needs exactly one major market");
  for (std::size_t i = 0; i < c.markets.size(); ++i) {
    for (std::size_t j = i + 1; j < c.markets.size(); ++j) {
      if (geo::polygons_overlap(c.markets[i].polygon, c.markets[j].polygon)) {
        fail("market polygons overlap: " + c.markets[i].name + ", " +
             c.markets[j].name);
      }
    }
  }
  if (!(c.hex_cell_area_km2 > 0) || !(c.production_hex_area_km2 > 0)) {
    fail("hex resolutions must be positive");
  }
  if (c.base_intent_rate < 0) fail("negative base intent rate");
  for (const auto& h : c.hotspots) {
    if (h.peak_rate < 0 || !(h.sigma_km > 0)) fail("bad hotspot rate");
  }
  for (const auto& [cell, rate] : c.demand_intensity_override) {
    if (rate < 0 || !std::isfinite(rate)) {
      fail("negative demand rate at hex " + geo::hex_label(cell));
    }
  }
  if (!(c.request_share >= 0 && c.request_share <= 1)) fail("request_share outside [0,1]");
  if (!(c.guarantee_share > 0 && c.guarantee_share < 1)) {
    fail("guarantee_share must lie in (0,1)");
  }
  if (c.price_index_volatility < 0) fail("negative price volatility");
  if (c.anticipation_weeks < 0) fail("negative anticipation");
  if (!(c.major_home_share >= 0 && c.major_home_share <= 1)) fail("bad major_home_share");
  if (c.venture_scale < 0) fail("negative venture_scale");
  if (!(c.cancel_base >= 0 && c.cancel_base < 0.5)) fail("bad cancel_base");
  if (!(c.year_drift_share >= 0 && c.year_drift_share <= 1)) fail("bad year_drift_share");
  if (!(c.population_drift >= 0 && c.population_drift <= 1)) fail("bad population_drift");
}

std::string driver_class_name(DriverClass c) {
  switch (c) {
    case DriverClass::kFullTime:
      return "FT";
    case DriverClass::kPartTime:
      return "PT";
    case DriverClass::kLuxury:
      return "LUX";
  }
  return "";
}

void check_profile(const DriverProfile& p) {
  auto sums_to_one = [](const auto& v) {
    double s = 0.0;
    for (double x : v) {
      if (x < 0) return false;
      s += x;
    }
    return std::abs(s - 1.0) <= 1e-9;
  };
  if (!sums_to_one(p.vehicle_mix)) throw std::invalid_argument("vehicle mix must sum to 1");
  if (!sums_to_one(p.time_window_mix)) {
    throw std::invalid_argument("time window mix must sum to 1");
  }
  if (!(p.activity_radius_km > 0)) throw std::invalid_argument("radius must be > 0");
}

std::optional<int> GroundTruth::cohort_of(std::int64_t driver_id) const {
  for (const auto& [id, g] : cohorts) {
    if (id == driver_id) return g;
  }
  return std::nullopt;
}

geo::HexCell Layout::production_cell_of_demand(const geo::HexCell& c) const {
  return production_grid.cell_of(demand_grid.center(c));
}

Layout build_layout(const SimConfig& config) {
  Layout L{geo::HexGrid(config.hex_cell_area_km2),
           geo::HexGrid(config.production_hex_area_km2), {}, {}, {}, {}};
  double xmin = 1e300, ymin = 1e300, xmax = -1e300, ymax = -1e300;
  for (const auto& m : config.markets) {
    const auto [lo, hi] = m.polygon.bounds();
    xmin = std::min(xmin, lo.x_km);
    ymin = std::min(ymin, lo.y_km);
    xmax = std::max(xmax, hi.x_km);
    ymax = std::max(ymax, hi.y_km);
  }
  const double e = L.demand_grid.edge_km();
  const int r0 = static_cast<int>(std::floor(ymin / (1.5 * e))) - 1;
  const int r1 = static_cast<int>(std::ceil(ymax / (1.5 * e))) + 1;
  const double w = e * std::sqrt(3.0);
  for (int r = r0; r <= r1; ++r) {
    const int q0 = static_cast<int>(std::floor(xmin / w - r / 2.0)) - 1;
    const int q1 = static_cast<int>(std::ceil(xmax / w - r / 2.0)) + 1;
    for (int q = q0; q <= q1; ++q) {
      const geo::HexCell c{q, r};
      const geo::Point p = L.demand_grid.center(c);
      for (std::size_t m = 0; m < config.markets.size(); ++m) {
        if (config.markets[m].polygon.contains(p)) {
          L.demand_cells.push_back(c);
          break;
        }
      }
    }
  }
  std::sort(L.demand_cells.begin(), L.demand_cells.end());
  L.demand_cell_market.reserve(L.demand_cells.size());
  std::vector<geo::HexCell> coarse;
  for (const auto& c : L.demand_cells) {
    const geo::Point p = L.demand_grid.center(c);
    for (std::size_t m = 0; m < config.markets.size(); ++m) {
      if (config.markets[m].polygon.contains(p)) {
        L.demand_cell_market.push_back(static_cast<int>(m));
        break;
      }
    }
    coarse.push_back(L.production_cell_of_demand(c));
  }
  std::sort(coarse.begin(), coarse.end());
  coarse.erase(std::unique(coarse.begin(), coarse.end()), coarse.end());
  L.production_cells = coarse;
  L.areas = matchfn::AreaAssignment::partition(coarse, L.production_grid);
  return L;
}

std::map<geo::HexCell, double> demand_intensity_map(const SimConfig& config,
                                                    const Layout& layout) {
  std::map<geo::HexCell, double> out;
  for (const auto& c : layout.demand_cells) {
    const auto it = config.demand_intensity_override.find(c);
    if (it != config.demand_intensity_override.end()) {
      out[c] = it->second;
      continue;
    }
    const geo::Point p = layout.demand_grid.center(c);
    double rate = config.base_intent_rate;
    for (const auto& h : config.hotspots) {
      const double d = geo::distance(p, h.center);
      rate += h.peak_rate * std::exp(-0.5 * d * d / (h.sigma_km * h.sigma_km));
    }
    out[c] = rate;
  }
  if (!config.demand_intensity_override.empty()) {
    for (const auto& [c, rate] : config.demand_intensity_override) out[c] = rate;
  }
  return out;
}

std::vector<DriverProfile> make_population(const SimConfig& config) {
  const std::uint64_t pop_seed = config.effective_population_seed();
  const MarketSpec& major = config.major_market();
  std::vector<int> adjacent;
  int major_index = 0;
  for (std::size_t m = 0; m < config.markets.size(); ++m) {
    if (config.markets[m].major) {
      major_index = static_cast<int>(m);
    } else {
      adjacent.push_back(static_cast<int>(m));
    }
  }
  const geo::HexGrid grid(config.hex_cell_area_km2);
  std::vector<DriverProfile> pop;
  pop.reserve(config.n_drivers);
  for (int i = 0; i < config.n_drivers; ++i) {
    Rng rng(derive_seed(pop_seed, kTagPopulation, static_cast<std::uint64_t>(i)));
    DriverProfile p;
    p.driver_id = i + 1;
    const double u = uniform(rng, 0.0, 1.0);
    const DriverClass cls = u < kClasses[0].share ? DriverClass::kFullTime
                            : u < kClasses[0].share + kClasses[1].share
                                ? DriverClass::kPartTime
                                : DriverClass::kLuxury;
    const auto& cp = kClasses[static_cast<int>(cls)];
    apply_class(p, cls, rng);
    p.activity_radius_km = cp.radius * uniform(rng, 0.8, 1.2);
    p.time_window_mix = perturb_mix(rng, cp.windows, 0.3);
    p.vehicle_mix = perturb_mix(rng, cp.vehicles, 0.3);
    p.weekend_weight = cp.weekend * std::exp(normal(rng, 0.0, 0.2));
    p.take_rate_type = bernoulli(rng, 0.6) ? TakeRateType::kAlwaysAbove70
                                           : TakeRateType::kSometimesBelow70;
    const double v = uniform(rng, 0.0, 1.0);
    p.earnings_variance_type = v < 0.3   ? EarningsVarianceType::kLow
                               : v < 0.7 ? EarningsVarianceType::kMid
                                         : EarningsVarianceType::kHigh;
    p.active_prob = uniform(rng, 0.85, 0.98);
    p.cancel_rate = config.cancel_base * uniform(rng, 0.5, 1.5);
    p.rating_mean = uniform(rng, 4.55, 4.95);
    const bool major_home = bernoulli(rng, config.major_home_share) || adjacent.empty();
    if (major_home) {
      p.home_market = major_index;
    } else {
      const std::size_t k = std::min<std::size_t>(
          adjacent.size() - 1,
          static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * adjacent.size()));
      p.home_market = adjacent[k];
    }
    p.home = round_point(uniform_in(rng, config.markets[p.home_market].polygon));
    p.home_hex = grid.cell_of(p.home);
    if (!major_home) {
      const double d = major.polygon.distance_to_boundary(p.home);
      p.venture_prob = std::min(1.0, config.venture_scale * 0.45 * std::exp(-d / 6.0));
    }
    p.sessions_per_week_mean = std::exp(p.log_hours_mean) / p.session_hours;
    pop.push_back(p);
  }
  if (config.population_drift > 0) {
    for (auto& p : pop) {
      if (p.driver_class == DriverClass::kLuxury) continue;
      Rng rng(derive_seed(pop_seed, kTagDrift, static_cast<std::uint64_t>(p.driver_id)));
      if (!bernoulli(rng, config.population_drift)) continue;
      apply_class(p,
                  p.driver_class == DriverClass::kFullTime ? DriverClass::kPartTime
                                                           : DriverClass::kFullTime,
                  rng);
      p.sessions_per_week_mean = std::exp(p.log_hours_mean) / p.session_hours;
    }
  }
  return pop;
}

namespace {

struct WeekContext {
  const SimConfig& config;
  const std::vector<MarketSpec>& markets;
  int major_index;
  const std::vector<double>& week_shock;
  // price index per (production cell key, week)
  const std::unordered_map<std::uint64_t, std::vector<double>>& price;
  const geo::HexGrid& production_grid;
};

double price_index(const WeekContext& ctx, const geo::Point& p, int week) {
  const auto it = ctx.price.find(geo::hex_key(ctx.production_grid.cell_of(p)));
  if (it == ctx.price.end()) return 1.0;
  return it->second[week - ctx.config.first_week()];
}

geo::Point venture_destination(Rng& rng, const geo::Point& from,
                               const geo::ConvexPolygon& major) {
  // Nearest boundary point, then 0.3-2 km towards the interior.
  const auto& v = major.vertices();
  geo::Point best = v[0];
  double best_d = 1e300;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const geo::Point& a = v[i];
    const geo::Point& b = v[(i + 1) % v.size()];
    const double dx = b.x_km - a.x_km, dy = b.y_km - a.y_km;
    double t = ((from.x_km - a.x_km) * dx + (from.y_km - a.y_km) * dy) /
               (dx * dx + dy * dy);
    t = std::clamp(t, 0.02, 0.98);
    const geo::Point q{a.x_km + t * dx, a.y_km + t * dy};
    const double d = geo::distance(from, q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  const geo::Point c = major.centroid();
  const double len = geo::distance(best, c);
  const double step = uniform(rng, 0.3, 2.0);
  geo::Point p{best.x_km + (c.x_km - best.x_km) / len * step,
               best.y_km + (c.y_km - best.y_km) / len * step};
  p.y_km += uniform(rng, -1.0, 1.0);
  p = round_point(p);
  if (major.signed_distance(p) > -0.2) p = round_point(c);
  return p;
}

geo::Point local_destination(Rng& rng, const geo::Point& origin,
                             const DriverProfile& d,
                             const geo::ConvexPolygon& home_poly) {
  for (int tries = 0; tries < 30; ++tries) {
    const double dist = std::gamma_distribution<double>(2.0, 3.5)(rng);
    const double ang = uniform(rng, 0.0, 2.0 * 3.141592653589793);
    geo::Point p{origin.x_km + dist * std::cos(ang),
                 origin.y_km + dist * std::sin(ang)};
    p.x_km += 0.25 * (d.home.x_km - p.x_km);
    p.y_km += 0.25 * (d.home.y_km - p.y_km);
    if (geo::distance(p, d.home) > d.activity_radius_km) continue;
    p = round_point(p);
    if (home_poly.signed_distance(p) < -0.05) return p;
  }
  return d.home;
}

struct DriverYear {
  std::vector<TripEvent> trips;
  std::optional<int> cohort;
};

DriverYear simulate_driver(const WeekContext& ctx, const DriverProfile& d) {
  const SimConfig& cfg = ctx.config;
  const int W0 = cfg.first_week();
  const int nw = cfg.n_weeks();
  const bool major_home = ctx.markets[d.home_market].major;
  const auto& home_poly = ctx.markets[d.home_market].polygon;
  const auto& major_poly = ctx.markets[ctx.major_index].polygon;

  Rng srng(derive_seed(cfg.seed, kTagSchedule, static_cast<std::uint64_t>(d.driver_id)));
  std::vector<char> active(nw), venture(nw);
  std::vector<double> eps(nw), share_draw(nw);
  for (int k = 0; k < nw; ++k) {
    active[k] = bernoulli(srng, d.active_prob);
    venture[k] = bernoulli(srng, d.venture_prob);
    eps[k] = normal(srng, 0.0, 0.15);
    share_draw[k] = d.take_rate_type == TakeRateType::kAlwaysAbove70
                        ? uniform(srng, 0.725, 0.80)
                        : normal(srng, 0.715, 0.03);
  }
  DriverYear out;
  for (int k = 0; k < nw; ++k) {
    const int w = W0 + k;
    const bool exposed = active[k] && (major_home || venture[k]);
    if (w >= 0 && w <= cfg.last_week() && exposed) {
      out.cohort = w;
      break;
    }
  }
  const double fare_sd =
      d.earnings_variance_type == EarningsVarianceType::kLow   ? 0.05
      : d.earnings_variance_type == EarningsVarianceType::kMid ? 0.15
                                                               : 0.35;

  std::int64_t prev_end = -1'000'000;  // minutes since anchor
  std::int64_t session_counter = 0;
  for (int k = 0; k < nw; ++k) {
    if (!active[k]) continue;
    const int w = W0 + k;
    const bool effect_on =
        out.cohort && w >= *out.cohort - cfg.anticipation_weeks;
    const bool policy_on = out.cohort && w >= *out.cohort;
    Rng rng(derive_seed(cfg.seed, kTagWeekTrips,
                        static_cast<std::uint64_t>(d.driver_id),
                        static_cast<std::uint64_t>(w + 10'000)));
    double hours = std::exp(d.log_hours_mean + ctx.week_shock[k] + eps[k] +
                            (effect_on ? cfg.effect_hours : 0.0));
    hours = std::min(hours, 70.0);
    const int n_days = std::clamp(static_cast<int>(std::lround(hours / d.session_hours)), 1, 7);

    // Weighted sampling of days without replacement.
    std::array<double, 7> wts{};
    for (int day = 0; day < 7; ++day) wts[day] = day >= 5 ? d.weekend_weight : 1.0;
    std::vector<int> days;
    for (int j = 0; j < n_days; ++j) {
      double tot = 0.0;
      for (double x : wts) tot += x;
      double u = uniform(rng, 0.0, tot);
      int pick = 6;
      for (int day = 0; day < 7; ++day) {
        if (wts[day] <= 0) continue;
        if (u < wts[day]) {
          pick = day;
          break;
        }
        u -= wts[day];
      }
      while (wts[pick] <= 0) pick = (pick + 6) % 7;
      days.push_back(pick);
      wts[pick] = 0.0;
    }
    std::sort(days.begin(), days.end());

    const std::int64_t week_start = static_cast<std::int64_t>(w) * 7 * 24 * 60;
    const std::int64_t week_end = week_start + static_cast<std::int64_t>(kMinutesPerWeek);
    const double target_min = hours * 60.0 / n_days;
    const bool venture_week = !major_home && venture[k];
    bool venture_done = false;
    const double share = share_draw[k] *
                         (policy_on ? std::exp(cfg.effect_hourly_earnings) : 1.0);
    const std::size_t week_first_trip = out.trips.size();

    for (int day : days) {
      const int win = draw_index(rng, d.time_window_mix);
      int lo = kWindowBounds[win], hi = kWindowBounds[win + 1];
      if (win >= 6) {
        lo -= 24;
        hi -= 24;
      }
      std::int64_t start = week_start + static_cast<std::int64_t>(day) * 1440 +
                           static_cast<std::int64_t>(uniform(rng, lo * 60.0, hi * 60.0));
      const auto est = static_cast<std::int64_t>(target_min * 1.35) + 30;
      if (start + est > week_end - 1) start = week_end - 1 - est;
      start = std::max(start, prev_end + kIdleCutoffMinutes + 1);
      if (start >= week_end - 60) continue;

      const std::int64_t session_id = d.driver_id * 10'000 + session_counter;
      const auto vehicle = static_cast<VehicleType>(draw_index(rng, d.vehicle_mix));
      std::int64_t t = start;
      double online = 0.0;
      int completed = 0;
      geo::Point pos = d.home;
      {
        geo::Point p{d.home.x_km + normal(rng, 0.0, d.activity_radius_km / 3.0),
                     d.home.y_km + normal(rng, 0.0, d.activity_radius_km / 3.0)};
        p = round_point(p);
        if (home_poly.signed_distance(p) < -0.05) pos = p;
      }
      std::int64_t last_dropoff = -1;
      while (true) {
        if (completed > 0 && target_min - online < 12.5) break;
        if (t >= week_end - 90) break;
        TripEvent trip;
        trip.driver_id = d.driver_id;
        trip.session_id = session_id;
        trip.vehicle = vehicle;
        trip.origin = pos;
        const auto req_lag = std::uniform_int_distribution<int>(0, 2)(rng);
        trip.accept_ts = cfg.anchor + std::chrono::minutes(t);
        trip.request_ts = trip.accept_ts - std::chrono::minutes(req_lag);
        const double p_cancel = d.cancel_rate + (policy_on ? cfg.cancel_lift : 0.0);
        if (bernoulli(rng, p_cancel)) {
          trip.cancelled = true;
          trip.destination = pos;
          out.trips.push_back(trip);
          t += 3 + std::uniform_int_distribution<int>(0, 4)(rng);
          continue;
        }
        const bool is_venture = venture_week && !venture_done;
        const geo::Point dest = is_venture
                                    ? venture_destination(rng, pos, major_poly)
                                    : local_destination(rng, pos, d, home_poly);
        const double km = geo::distance(pos, dest) * kRoadFactor;
        const double speed = uniform(rng, 22.0, 38.0);
        const auto transport =
            std::max<std::int64_t>(2, std::lround(km / speed * 60.0));
        double enroute = 2.0 + std::gamma_distribution<double>(2.0, 3.0)(rng);
        if (policy_on && cfg.effect_utilization != 0.0) {
          const double T = static_cast<double>(transport);
          const double u = T / (T + enroute);
          const double u2 = std::clamp(u + cfg.effect_utilization, 0.05, 0.98);
          enroute = T * (1.0 / u2 - 1.0);
        }
        const double fl = std::floor(enroute);
        const auto enroute_min = static_cast<std::int64_t>(fl) +
                                 (bernoulli(rng, enroute - fl) ? 1 : 0);
        const std::int64_t pickup = t + enroute_min;
        const std::int64_t dropoff = pickup + transport;
        if (dropoff >= week_end) break;
        trip.destination = dest;
        trip.pickup_ts = cfg.anchor + std::chrono::minutes(pickup);
        trip.dropoff_ts = cfg.anchor + std::chrono::minutes(dropoff);
        trip.miles = std::round(km / kKmPerMile * 1000.0) / 1000.0;

        const double base = 2.5 + 1.2 * km + 0.3 * static_cast<double>(transport);
        const double fare = base * kFareMultiplier[static_cast<int>(vehicle)] *
                            price_index(ctx, pos, w) *
                            std::exp(normal(rng, -0.5 * fare_sd * fare_sd, fare_sd));
        trip.rider_payment = std::max<Money>(500, std::llround(fare * 100.0));
        trip.external_fees = std::llround(150.0 + 0.05 * trip.rider_payment);
        const Money net = trip.rider_payment - trip.external_fees;
        const double trip_share =
            std::clamp(share + normal(rng, 0.0, 0.01), 0.3, 0.95);
        trip.driver_earnings = std::llround(net * trip_share);
        trip.platform_take = net - trip.driver_earnings;
        if (bernoulli(rng, 0.2)) {
          trip.tip = std::llround(trip.rider_payment * uniform(rng, 0.10, 0.25));
        }
        if (bernoulli(rng, 0.45)) {
          trip.rating = std::clamp(std::round(normal(rng, d.rating_mean, 0.5)), 1.0, 5.0);
        }
        out.trips.push_back(trip);
        ++completed;
        if (is_venture) venture_done = true;
        online += static_cast<double>(dropoff - t);
        last_dropoff = dropoff;
        pos = dest;
        geo::Point next{pos.x_km + normal(rng, 0.0, 0.6), pos.y_km + normal(rng, 0.0, 0.6)};
        next = round_point(next);
        bool inside = false;
        for (const auto& m : ctx.markets) {
          if (m.polygon.signed_distance(next) < -0.05) inside = true;
        }
        if (inside && (ctx.markets[d.home_market].polygon.contains(next) ||
                       major_poly.contains(next))) {
          pos = next;
        }
        const double idle = std::exponential_distribution<double>(1.0 / 6.0)(rng);
        t = dropoff + std::min<std::int64_t>(100, std::llround(idle));
      }
      if (last_dropoff >= 0) {
        prev_end = last_dropoff;
        ++session_counter;
      } else {
        // Only cancellations; keep the spacing rule intact.
        prev_end = std::max(prev_end, t);
      }
    }

    if (policy_on && cfg.apply_guarantee) {
      Money earn = 0, net = 0, take = 0;
      for (std::size_t i = week_first_trip; i < out.trips.size(); ++i) {
        const auto& tr = out.trips[i];
        if (tr.cancelled) continue;
        earn += tr.driver_earnings;
        net += tr.net_payment();
        take += tr.platform_take;
      }
      const Money floor_amt = std::llround(cfg.guarantee_share * static_cast<double>(net));
      Money topup = std::min(take, floor_amt - earn);
      if (topup > 0 && take > 0) {
        // Largest-remainder split proportional to platform take.
        std::vector<std::pair<double, std::size_t>> rem;
        Money assigned = 0;
        for (std::size_t i = week_first_trip; i < out.trips.size(); ++i) {
          auto& tr = out.trips[i];
          if (tr.cancelled || tr.platform_take == 0) continue;
          const double exact = static_cast<double>(topup) *
                               static_cast<double>(tr.platform_take) /
                               static_cast<double>(take);
          const Money part = static_cast<Money>(std::floor(exact));
          tr.driver_earnings += part;
          tr.platform_take -= part;
          assigned += part;
          rem.emplace_back(exact - static_cast<double>(part), i);
        }
        std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
          return a.first > b.first;
        });
        for (std::size_t j = 0; j < rem.size() && assigned < topup; ++j) {
          auto& tr = out.trips[rem[j].second];
          if (tr.platform_take == 0) continue;
          tr.driver_earnings += 1;
          tr.platform_take -= 1;
          ++assigned;
        }
      }
    }
  }
  return out;
}

}  // namespace

SimOutput generate_market(const SimConfig& config) {
  validate(config);
  const Layout layout = build_layout(config);
  SimOutput out;
  out.drivers = make_population(config);
  for (const auto& p : out.drivers) check_profile(p);

  const int nw = config.n_weeks();
  std::vector<double> week_shock(nw);
  {
    Rng rng(derive_seed(config.effective_population_seed(), kTagWeekShock));
    for (auto& s : week_shock) s = normal(rng, 0.0, 0.05);
  }
  std::unordered_map<std::uint64_t, std::vector<double>> price;
  for (const auto& c : layout.production_cells) {
    Rng rng(derive_seed(config.seed, kTagPrice, geo::hex_key(c)));
    std::vector<double> v(nw);
    for (auto& x : v) {
      x = std::exp(normal(rng, 0.0, config.price_index_volatility));
    }
    price.emplace(geo::hex_key(c), std::move(v));
  }
  int major_index = 0;
  for (std::size_t m = 0; m < config.markets.size(); ++m) {
    if (config.markets[m].major) major_index = static_cast<int>(m);
  }
  const WeekContext ctx{config, config.markets, major_index, week_shock, price,
                        layout.production_grid};

  for (const auto& d : out.drivers) {
    DriverYear dy = simulate_driver(ctx, d);
    out.truth.cohorts.emplace_back(d.driver_id, dy.cohort);
    for (auto& t : dy.trips) {
      check_trip(t);
      out.trips.push_back(std::move(t));
    }
  }
  std::stable_sort(out.trips.begin(), out.trips.end(), trip_less);

  out.truth.seed = config.seed;
  out.truth.anchor = config.anchor;
  out.truth.anticipation_weeks = config.anticipation_weeks;
  out.truth.effects = {
      {"log_num_hour", config.effect_hours},
      {"ave_utilization", config.effect_utilization},
      {"log_hourly_earning_share", config.effect_hourly_earnings},
      {"weekly_cancel_rate", config.cancel_lift},
      {"log1p_intents_spillover", config.demand_spillover},
  };
  for (int i = 0; i < matchfn::kNumMarkets; ++i) {
    Rng rng(derive_seed(config.effective_population_seed(), kTagElasticity,
                        static_cast<std::uint64_t>(i)));
    MarketElasticity e;
    e.market = matchfn::market_from_index(i);
    e.alpha = uniform(rng, 0.70, 0.90);
    e.beta = uniform(rng, 0.25, 0.40);
    e.log_A = std::log(0.30) + uniform(rng, -0.1, 0.1);
    out.truth.elasticities.push_back(e);
  }
  if (!config.generate_demand) return out;

  // Intents and requests on the demand grid.
  const auto intensity = demand_intensity_map(config, layout);
  const std::size_t ncell = layout.demand_cells.size();
  const std::int64_t h0 = static_cast<std::int64_t>(config.first_week()) * 168;
  const std::int64_t nh = static_cast<std::int64_t>(nw) * 168;
  std::vector<std::int64_t> intents(ncell * nh), requests(ncell * nh);
  std::vector<std::size_t> parent(ncell);
  std::map<geo::HexCell, std::size_t> coarse_index;
  for (std::size_t i = 0; i < layout.production_cells.size(); ++i) {
    coarse_index[layout.production_cells[i]] = i;
  }
  for (std::size_t c = 0; c < ncell; ++c) {
    const geo::HexCell cell = layout.demand_cells[c];
    parent[c] = coarse_index.at(layout.production_cell_of_demand(cell));
    const double base = intensity.at(cell);
    const bool in_major = config.markets[layout.demand_cell_market[c]].major;
    const auto& pidx = price.at(geo::hex_key(layout.production_cells[parent[c]]));
    for (int k = 0; k < nw; ++k) {
      const int w = config.first_week() + k;
      Rng rng(derive_seed(config.seed, kTagDemand, geo::hex_key(cell),
                          static_cast<std::uint64_t>(w + 10'000)));
      const double wk = std::pow(pidx[k], -0.5) *
                        (in_major && w >= 0 ? std::exp(config.demand_spillover) : 1.0);
      for (int hw = 0; hw < 168; ++hw) {
        const double lam = base * kHourProfile[hw % 24] * kDayProfile[hw / 24] * wk;
        const std::int64_t n =
            lam > 0 ? std::poisson_distribution<std::int64_t>(lam)(rng) : 0;
        const std::int64_t r =
            n > 0 ? std::binomial_distribution<std::int64_t>(n, config.request_share)(rng)
                  : 0;
        const std::size_t at = c * nh + static_cast<std::size_t>(k) * 168 + hw;
        intents[at] = n;
        requests[at] = r;
      }
    }
  }

  // Completes drawn on the production grid from the true matching function.
  const matchfn::SupplyField supply =
      matchfn::supply_accounting(out.trips, layout.production_grid, config.anchor);
  std::vector<std::vector<std::size_t>> children(layout.production_cells.size());
  for (std::size_t c = 0; c < ncell; ++c) children[parent[c]].push_back(c);
  std::vector<std::int64_t> completes(ncell * nh, 0);
  for (std::size_t pc = 0; pc < layout.production_cells.size(); ++pc) {
    const geo::HexCell cell = layout.production_cells[pc];
    const int area = layout.areas.area_of(cell);
    Rng rng(derive_seed(config.seed, kTagCompletes, geo::hex_key(cell)));
    for (std::int64_t h = 0; h < nh; ++h) {
      std::int64_t D = 0, R = 0;
      for (const auto c : children[pc]) {
        D += intents[c * nh + h];
        R += requests[c * nh + h];
      }
      const double eps = normal(rng, 0.0, 0.1);
      const double S = supply.total(cell, h0 + h);
      if (D == 0 || R == 0 || S <= 0) continue;
      const Timestamp ts = config.anchor + std::chrono::minutes((h0 + h) * 60);
      const auto slot = matchfn::slot_of_hour(hour_of_day(ts)).value_or(
          matchfn::Slot::kLateNight);
      const auto& e = out.truth.elasticities[matchfn::market_index(
          {area, slot, day_of_week(ts)})];
      const double mean = std::exp(e.log_A + eps) *
                          std::pow(static_cast<double>(D), e.alpha) *
                          std::pow(S, e.beta);
      const std::int64_t y = std::min<std::int64_t>(R, std::llround(mean));
      if (y <= 0) continue;
      // Largest remainder by requests.
      std::int64_t given = 0;
      std::vector<std::pair<double, std::size_t>> rem;
      for (const auto c : children[pc]) {
        const std::int64_t r = requests[c * nh + h];
        if (r == 0) continue;
        const double exact = static_cast<double>(y) * static_cast<double>(r) /
                             static_cast<double>(R);
        const auto part = static_cast<std::int64_t>(std::floor(exact));
        completes[c * nh + h] = part;
        given += part;
        rem.emplace_back(exact - static_cast<double>(part), c);
      }
      std::stable_sort(rem.begin(), rem.end(),
                       [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t j = 0; given < y && j < rem.size(); ++j) {
        const auto c = rem[j].second;
        if (completes[c * nh + h] < requests[c * nh + h]) {
          ++completes[c * nh + h];
          ++given;
        }
      }
    }
  }

  for (std::int64_t h = 0; h < nh; ++h) {
    for (std::size_t c = 0; c < ncell; ++c) {
      const std::size_t at = c * nh + h;
      if (intents[at] == 0) continue;
      DemandRow row{layout.demand_cells[c], h0 + h, intents[at], requests[at],
                    completes[at]};
      check_demand(row);
      out.demand.push_back(row);
    }
  }
  return out;
}

SimConfig zero_effects(SimConfig config) {
  config.effect_hours = 0.0;
  config.effect_utilization = 0.0;
  config.effect_hourly_earnings = 0.0;
  config.cancel_lift = 0.0;
  config.demand_spillover = 0.0;
  config.apply_guarantee = false;
  return config;
}

SimConfig prior_year_config(const SimConfig& config) {
  SimConfig prior = zero_effects(config);
  prior.population_seed = config.effective_population_seed();
  prior.seed = config.effective_prior_seed();
  prior.prior_year_seed.reset();
  prior.anchor = config.anchor - std::chrono::days(364);
  prior.population_drift = config.year_drift_share;
  return prior;
}

TwoYearOutput generate_two_year(const SimConfig& config) {
  TwoYearOutput out;
  out.treatment = generate_market(config);
  out.prior = generate_market(prior_year_config(config));
  return out;
}

}  // namespace ridepolicy::sim
