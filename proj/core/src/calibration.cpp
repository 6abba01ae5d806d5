#include "merge/calibration.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "merge/discharge.hpp"
#include "merge/errors.hpp"
#include "merge/units.hpp"

namespace merge {

UnitProfile unit_profile_from_string(const std::string& s) {
  if (s == "si") return UnitProfile::si;
  if (s == "ngsim-imperial") return UnitProfile::ngsim_imperial;
  throw ConfigError("units", "unknown unit profile '" + s + "'");
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <class T>
T parse_field(std::string_view raw, std::size_t line, const char* name) {
  const std::string_view s = trim(raw);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError(line, std::string("bad ") + name + " '" + std::string(s) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ParseError(line, std::string(name) + " is not finite");
    }
  }
  return value;
}

struct NumberedRecord {
  TrajectoryRecord rec;
  std::size_t line;
};

}  // namespace

std::vector<TrajectoryRecord> parse_trajectories(std::istream& in, const std::set<int>& lanes,
                                                 UnitProfile units) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kTrajectoryHeader) {
    throw ParseError(1, std::string("expected header '") + kTrajectoryHeader + "'");
  }
  const double scale = units == UnitProfile::ngsim_imperial ? units::feet_to_m(1.0) : 1.0;

  std::vector<NumberedRecord> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto f = split(line);
    if (f.size() != 6) {
      throw ParseError(line_no, "expected 6 fields, got " + std::to_string(f.size()));
    }
    TrajectoryRecord r;
    r.vehicle_id = parse_field<long long>(f[0], line_no, "vehicle_id");
    r.t = parse_field<double>(f[1], line_no, "t_s");
    r.x = parse_field<double>(f[2], line_no, "x_m") * scale;
    r.lane = parse_field<int>(f[3], line_no, "lane");
    r.v = parse_field<double>(f[4], line_no, "v_mps") * scale;
    r.length = parse_field<double>(f[5], line_no, "length_m") * scale;
    rows.push_back({r, line_no});
  }

  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.rec.vehicle_id, a.rec.t) < std::tie(b.rec.vehicle_id, b.rec.t);
  });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i - 1].rec;
    const auto& b = rows[i].rec;
    if (b.vehicle_id == a.vehicle_id && b.t == a.t) {
      const auto first = std::min(rows[i].line, rows[i - 1].line);
      const auto second = std::max(rows[i].line, rows[i - 1].line);
      throw ParseError(second, "duplicate (vehicle_id, t) also on line " + std::to_string(first));
    }
  }

  std::vector<TrajectoryRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    if (lanes.empty() || lanes.count(r.rec.lane) != 0) {
      out.push_back(r.rec);
    }
  }
  return out;
}

std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path,
                                                const std::set<int>& lanes, UnitProfile units) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("trajectories", "cannot open " + path.string());
  }
  return parse_trajectories(in, lanes, units);
}

void write_trajectories(std::ostream& out, const std::vector<TrajectoryRecord>& records) {
  out << kTrajectoryHeader << '\n';
  char buf[256];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%d,%.17g,%.17g\n", r.vehicle_id, r.t, r.x,
                  r.lane, r.v, r.length);
    out << buf;
  }
}

void save_trajectories(const std::filesystem::path& path,
                       const std::vector<TrajectoryRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("out", "cannot write " + path.string());
  }
  write_trajectories(out, records);
}

// ---------------------------------------------------------------------------

namespace {

struct StopEvent {
  long long vehicle;
  int lane;
  double t;
  double x;
};

std::vector<StopEvent> stop_events(const std::vector<TrajectoryRecord>& records, double thr) {
  std::vector<StopEvent> ev;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (a.vehicle_id != b.vehicle_id || !(a.v >= thr && b.v < thr)) {
      continue;
    }
    const double f = (a.v - thr) / (a.v - b.v);
    ev.push_back({b.vehicle_id, b.lane, a.t + f * (b.t - a.t), a.x + f * (b.x - a.x)});
  }
  return ev;
}

}  // namespace

WaveEstimate estimate_wave_speed(const std::vector<TrajectoryRecord>& records,
                                 double stopped_threshold) {
  constexpr double kMaxLinkTime = 10.0;
  constexpr double kMaxLinkDistance = 60.0;
  constexpr std::size_t kMinEvents = 3;

  auto events = stop_events(records, stopped_threshold);
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.t, a.vehicle) < std::tie(b.t, b.vehicle);
  });

  std::vector<std::vector<StopEvent>> waves;
  for (const auto& e : events) {
    std::vector<StopEvent>* best = nullptr;
    double best_dt = kMaxLinkTime;
    for (auto& w : waves) {
      const auto& last = w.back();
      const double dt = e.t - last.t;
      const double dx = last.x - e.x;
      if (last.lane != e.lane || last.vehicle == e.vehicle || dt <= 0.0 || dt > best_dt ||
          dx <= 0.0 || dx > kMaxLinkDistance) {
        continue;
      }
      best = &w;
      best_dt = dt;
    }
    if (best) {
      best->push_back(e);
    } else {
      waves.push_back({e});
    }
  }

  WaveEstimate out{0.0, {}};
  for (const auto& w : waves) {
    if (w.size() < kMinEvents) {
      continue;
    }
    double mt = 0.0, mx = 0.0;
    for (const auto& e : w) {
      mt += e.t;
      mx += e.x;
    }
    mt /= static_cast<double>(w.size());
    mx /= static_cast<double>(w.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& e : w) {
      sxy += (e.t - mt) * (e.x - mx);
      sxx += (e.t - mt) * (e.t - mt);
    }
    if (sxx > 0.0 && sxy < 0.0) {
      out.per_wave.push_back(-sxy / sxx);
    }
  }
  if (out.per_wave.empty()) {
    throw EstimationError("no backward stop waves found");
  }
  for (double s : out.per_wave) {
    out.speed += s;
  }
  out.speed /= static_cast<double>(out.per_wave.size());
  return out;
}

double estimate_jam_density(const std::vector<TrajectoryRecord>& records,
                            double stopped_threshold) {
  std::map<std::pair<int, long long>, std::vector<const TrajectoryRecord*>> frames;
  for (const auto& r : records) {
    frames[{r.lane, std::llround(r.t * 1000.0)}].push_back(&r);
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (auto& [key, frame] : frames) {
    std::sort(frame.begin(), frame.end(), [](auto* a, auto* b) { return a->x < b->x; });
    for (std::size_t i = 1; i < frame.size(); ++i) {
      const auto* follow = frame[i - 1];
      const auto* lead = frame[i];
      const double spacing = lead->x - follow->x;
      if (lead->v < stopped_threshold && follow->v < stopped_threshold && spacing > 0.0) {
        sum += 1.0 / spacing;
        ++n;
      }
    }
  }
  if (n == 0) {
    throw EstimationError("no adjacent stopped vehicles found");
  }
  return sum / static_cast<double>(n);
}

double estimate_cruise_speed(const std::vector<TrajectoryRecord>& records, double percentile,
                             double stopped_threshold) {
  if (!(percentile >= 0.0 && percentile <= 1.0)) {
    throw DomainError("percentile must lie in [0, 1]");
  }
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.v >= stopped_threshold) {
      v.push_back(r.v);
    }
  }
  if (v.empty()) {
    throw EstimationError("no moving vehicles found");
  }
  std::sort(v.begin(), v.end());
  const double pos = percentile * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// ---------------------------------------------------------------------------

namespace {

double required_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(key, "missing");
  }
  if (!j.at(key).is_number()) {
    throw ConfigError(key, "must be a number");
  }
  return j.at(key).get<double>();
}

}  // namespace

Aggregates Aggregates::from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("", "aggregates must be a JSON object");
  }
  Aggregates a;
  a.mu_vph = required_number(j, "mu_vph");
  a.ramp_flow_vph = required_number(j, "ramp_flow_vph");
  a.v_u_kmh = required_number(j, "v_u_kmh");
  a.v_m_kmh = required_number(j, "v_m_kmh");
  a.a_mps2 = required_number(j, "a_mps2");
  a.ground_truth_vph = required_number(j, "ground_truth_vph");
  if (j.contains("arrival_vph")) {
    a.arrival_vph = required_number(j, "arrival_vph");
    if (!(*a.arrival_vph >= a.ramp_flow_vph)) {
      throw ConfigError("arrival_vph", "must be at least ramp_flow_vph");
    }
  }
  if (j.contains("label")) {
    if (!j.at("label").is_string()) {
      throw ConfigError("label", "must be a string");
    }
    a.label = j.at("label").get<std::string>();
  }
  for (const char* key : {"mu_vph", "v_u_kmh", "a_mps2", "ground_truth_vph"}) {
    if (!(required_number(j, key) > 0.0)) {
      throw ConfigError(key, "must be positive");
    }
  }
  if (a.ramp_flow_vph < 0.0 || a.v_m_kmh < 0.0) {
    throw ConfigError(a.ramp_flow_vph < 0.0 ? "ramp_flow_vph" : "v_m_kmh", "must be non-negative");
  }
  return a;
}

nlohmann::json Aggregates::to_json() const {
  nlohmann::json j{{"mu_vph", mu_vph},   {"ramp_flow_vph", ramp_flow_vph},
                   {"v_u_kmh", v_u_kmh}, {"v_m_kmh", v_m_kmh},
                   {"a_mps2", a_mps2},   {"ground_truth_vph", ground_truth_vph}};
  if (arrival_vph) {
    j["arrival_vph"] = *arrival_vph;
  }
  if (label) {
    j["label"] = *label;
  }
  return j;
}

Aggregates load_aggregates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("aggregates", "cannot open " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("aggregates", e.what());
  }
  return Aggregates::from_json(j);
}

nlohmann::json CalibrationReport::to_json() const {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {
      {"w_est_mps", opt(w_est)},
      {"k_j_est_veh_per_m", opt(k_j_est)},
      {"v_u_est_mps", opt(v_u_est)},
      {"mu_derived_vps", mu_derived},
      {"v_m_est_mps", v_m_est},
      {"a_est_mps2", a_est},
      {"arrival_rate_vps", opt(arrival_rate)},
      {"ramp_flow_vps", ramp_flow},
      {"ground_truth_rate_vps", ground_truth_rate},
      {"theta", theta},
      {"mu_eff_vps", mu_eff},
      {"mu_eff_vph", units::vps_to_vph(mu_eff)},
      {"ape_mu_eff_pct", ape_mu_eff},
      {"ape_mu_max_pct", ape_mu_max},
  };
}

namespace {

CalibrationReport finish_report(CalibrationReport r) {
  r.theta = capacity_discount(r.ramp_flow, r.v_m_est, *r.v_u_est, r.a_est);
  if (r.theta >= 1.0) {
    throw OverSaturatedError("over-saturated episode: capacity discount >= 1");
  }
  r.mu_eff = r.mu_derived * (1.0 - r.theta);
  r.ape_mu_eff = 100.0 * std::abs(r.mu_eff - r.ground_truth_rate) / r.ground_truth_rate;
  r.ape_mu_max = 100.0 * std::abs(r.mu_derived - r.ground_truth_rate) / r.ground_truth_rate;
  return r;
}

}  // namespace

CalibrationReport validate_discharge(const Aggregates& agg) {
  CalibrationReport r{};
  r.v_u_est = units::kmh_to_mps(agg.v_u_kmh);
  r.mu_derived = units::vph_to_vps(agg.mu_vph);
  r.v_m_est = units::kmh_to_mps(agg.v_m_kmh);
  r.a_est = agg.a_mps2;
  r.ramp_flow = units::vph_to_vps(agg.ramp_flow_vph);
  r.ground_truth_rate = units::vph_to_vps(agg.ground_truth_vph);
  if (agg.arrival_vph) {
    r.arrival_rate = units::vph_to_vps(*agg.arrival_vph);
  }
  return finish_report(r);
}

CalibrationReport calibrate_trajectories(const std::vector<TrajectoryRecord>& records,
                                         const TrajectoryCalibrationOptions& opts) {
  if (records.empty()) {
    throw EstimationError("no trajectory records");
  }
  CalibrationReport r{};
  r.w_est = estimate_wave_speed(records, opts.stopped_threshold).speed;
  r.k_j_est = estimate_jam_density(records, opts.stopped_threshold);
  r.v_u_est = estimate_cruise_speed(records, opts.cruise_percentile, opts.stopped_threshold);
  r.mu_derived = FundamentalDiagram::apex_capacity(*r.w_est, *r.k_j_est, *r.v_u_est);

  double t_min = records.front().t, t_max = records.front().t;
  for (const auto& rec : records) {
    t_min = std::min(t_min, rec.t);
    t_max = std::max(t_max, rec.t);
  }
  const double duration = t_max - t_min;
  if (!(duration > 0.0)) {
    throw EstimationError("observation period has zero length");
  }

  std::size_t merges = 0, accel_samples = 0, crossings = 0;
  double v_sum = 0.0, a_sum = 0.0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    if (a.vehicle_id != b.vehicle_id) {
      continue;
    }
    if (a.lane == opts.main_lane && b.lane == opts.main_lane && a.x < opts.x_count &&
        b.x >= opts.x_count) {
      ++crossings;
    }
    if (a.lane != opts.aux_lane || b.lane != opts.main_lane) {
      continue;
    }
    ++merges;
    v_sum += b.v;
    for (std::size_t k = i + 1; k < records.size() && records[k].vehicle_id == b.vehicle_id; ++k) {
      if (records[k].t - b.t >= opts.accel_window) {
        a_sum += (records[k].v - b.v) / (records[k].t - b.t);
        ++accel_samples;
        break;
      }
    }
  }
  if (merges == 0 || accel_samples == 0) {
    throw EstimationError(
        "no lane switches from the auxiliary lane with a full acceleration window");
  }
  r.v_m_est = std::min(v_sum / static_cast<double>(merges), *r.v_u_est);
  r.a_est = a_sum / static_cast<double>(accel_samples);
  if (!(r.a_est > 0.0)) {
    throw EstimationError("estimated merge acceleration is not positive");
  }
  r.ramp_flow = static_cast<double>(merges) / duration;
  r.ground_truth_rate = static_cast<double>(crossings) / duration;
  if (crossings == 0) {
    throw EstimationError("no main-lane crossings of the counting position");
  }
  return finish_report(r);
}

}  // namespace merge
