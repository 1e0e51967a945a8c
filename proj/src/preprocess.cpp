#include "cyclegen/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include <Eigen/Dense>

#include "cyclegen/error.hpp"
#include "cyclegen/log.hpp"

namespace cyclegen {
namespace {

bool is_missing(const std::optional<double>& x) { return !x || std::isnan(*x); }

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Linear fill of every gap; missing values before the first / after the last
// present sample take the nearest present value.
std::vector<double> fill_linear(std::span<const std::optional<double>> x, std::span<const double> t) {
  std::vector<double> out(x.size());
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (is_missing(x[i])) continue;
    out[i] = *x[i];
    if (prev && i - *prev > 1) {
      const double x0 = *x[*prev], x1 = *x[i];
      const double t0 = t[*prev], t1 = t[i];
      for (std::size_t k = *prev + 1; k < i; ++k) out[k] = x0 + (x1 - x0) * (t[k] - t0) / (t1 - t0);
    } else if (!prev) {
      std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(i), *x[i]);
    }
    prev = i;
  }
  if (!prev) throw input_error("series has no valid samples");
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(*prev) + 1, out.end(), *x[*prev]);
  return out;
}

}  // namespace

std::vector<SpeedSegment> clean_speed(std::span<const std::optional<double>> raw, SpeedBounds bounds,
                                      double max_gap_s, double dt) {
  if (raw.empty()) throw input_error("clean_speed: empty series");
  if (bounds.min < 0.0 || bounds.max < bounds.min) throw input_error("clean_speed: invalid speed bounds");
  if (!(dt > 0.0)) throw input_error("clean_speed: dt must be positive");

  auto clip = [&](double v) { return std::clamp(v, bounds.min, bounds.max); };

  std::vector<SpeedSegment> segments;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_missing(raw[i])) continue;
    const double value = clip(*raw[i]);
    if (!prev) {
      segments.push_back({i, {value}});
    } else {
      const std::size_t missing = i - *prev - 1;
      if (static_cast<double>(missing) * dt <= max_gap_s + 1e-9) {
        auto& seg = segments.back().values;
        const double v0 = seg.back();
        for (std::size_t k = 1; k <= missing; ++k)
          seg.push_back(v0 + (value - v0) * static_cast<double>(k) / static_cast<double>(missing + 1));
        seg.push_back(value);
      } else {
        segments.push_back({i, {value}});
      }
    }
    prev = i;
  }
  if (segments.empty()) throw input_error("clean_speed: all speed samples are missing");
  return segments;
}

std::vector<double> central_diff_accel(std::span<const double> v, double dt) {
  if (v.size() < 3) throw input_error("central_diff_accel: need at least 3 samples");
  if (!(dt > 0.0)) throw input_error("central_diff_accel: dt must be positive");
  const std::size_t n = v.size();
  std::vector<double> a(n);
  a.front() = (v[1] - v[0]) / dt;
  a.back() = (v[n - 1] - v[n - 2]) / dt;
  for (std::size_t k = 1; k + 1 < n; ++k) a[k] = (v[k + 1] - v[k - 1]) / (2.0 * dt);
  return a;
}

double haversine_distance(GeoPoint p1, GeoPoint p2, double radius_m) {
  const double phi1 = deg2rad(p1.lat), phi2 = deg2rad(p2.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(p2.lon - p1.lon);
  const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
  const double h = std::clamp(s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2, 0.0, 1.0);
  return radius_m * 2.0 * std::atan2(std::sqrt(h), std::sqrt(1.0 - h));
}

std::optional<double> raw_grade(double delta_alt, double d, double d_min) {
  if (d <= d_min) return std::nullopt;
  return 100.0 * delta_alt / d;
}

const std::vector<double>& savitzky_golay_weights(int window, int order) {
  if (window < 1 || window % 2 == 0) throw input_error("savitzky_golay: window must be a positive odd integer");
  if (order < 0 || order >= window) throw input_error("savitzky_golay: order must satisfy 0 <= order < window");

  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::vector<double>> cache;
  std::lock_guard lock(mutex);
  auto [it, inserted] = cache.try_emplace({window, order});
  if (!inserted) return it->second;

  // Offsets scaled to [-1, 1] keep the normal equations well conditioned.
  const int half = window / 2;
  Eigen::MatrixXd vandermonde(window, order + 1);
  for (int r = 0; r < window; ++r) {
    const double u = half == 0 ? 0.0 : static_cast<double>(r - half) / half;
    double p = 1.0;
    for (int c = 0; c <= order; ++c, p *= u) vandermonde(r, c) = p;
  }
  const Eigen::MatrixXd normal = vandermonde.transpose() * vandermonde;
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(order + 1);
  e0(0) = 1.0;
  const Eigen::VectorXd y = normal.ldlt().solve(e0);
  const Eigen::VectorXd h = vandermonde * y;
  it->second.assign(h.data(), h.data() + h.size());
  return it->second;
}

std::vector<double> savitzky_golay(std::span<const double> x, int window, int order) {
  const auto& h = savitzky_golay_weights(window, order);
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (n < window) throw input_error("savitzky_golay: series shorter than window");
  const std::ptrdiff_t half = window / 2;

  auto mirrored = [&](std::ptrdiff_t i) {
    if (i < 0) return x[static_cast<std::size_t>(-i)];
    if (i >= n) return x[static_cast<std::size_t>(2 * (n - 1) - i)];
    return x[static_cast<std::size_t>(i)];
  };

  std::vector<double> y(x.size());
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    double acc = 0.0;
    if (k >= half && k + half < n) {
      for (std::ptrdiff_t j = -half; j <= half; ++j) acc += h[static_cast<std::size_t>(j + half)] * x[static_cast<std::size_t>(k + j)];
    } else {
      for (std::ptrdiff_t j = -half; j <= half; ++j) acc += h[static_cast<std::size_t>(j + half)] * mirrored(k + j);
    }
    y[static_cast<std::size_t>(k)] = acc;
  }
  return y;
}

std::vector<double> resample_mean(std::span<const double> x, std::size_t factor) {
  if (factor == 0) throw input_error("resample: factor must be positive");
  std::vector<double> out;
  out.reserve(x.size() / factor);
  for (std::size_t b = 0; b + factor <= x.size(); b += factor) {
    double sum = 0.0;
    for (std::size_t k = b; k < b + factor; ++k) sum += x[k];
    out.push_back(sum / static_cast<double>(factor));
  }
  return out;
}

GradeErrorReport grade_error_metrics(std::span<const double> calc, std::span<const double> ref) {
  if (calc.size() != ref.size())
    throw validation_error("grade_error_metrics: series lengths differ (" + std::to_string(calc.size()) + " vs " +
                           std::to_string(ref.size()) + ")");
  if (calc.empty()) throw input_error("grade_error_metrics: empty series");
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < calc.size(); ++i) {
    const double e = calc[i] - ref[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(calc.size());
  GradeErrorReport r;
  r.mae = abs_sum / n;
  r.mse = sq_sum / n;
  r.rmse = std::sqrt(r.mse);
  return r;
}

std::vector<double> grade_profile(std::span<const GeoPoint> track, std::span<const double> altitude,
                                  const PreprocessConfig& config) {
  if (track.size() != altitude.size()) throw validation_error("grade_profile: track and altitude lengths differ");
  const std::size_t n = track.size();
  std::vector<double> grade(n, 0.0);
  if (n == 0) return grade;

  std::vector<std::optional<double>> raw(n);
  for (std::size_t k = 1; k < n; ++k) {
    const double d = haversine_distance(track[k - 1], track[k]);
    raw[k] = raw_grade(altitude[k] - altitude[k - 1], d, config.min_grade_distance);
  }
  // Hold the previous grade through stationary samples; leading undefined
  // samples take the first defined value.
  std::optional<double> held;
  for (std::size_t k = 0; k < n; ++k) {
    if (raw[k]) held = raw[k];
    if (held) grade[k] = *held;
  }
  const auto first = std::find_if(raw.begin(), raw.end(), [](const auto& g) { return g.has_value(); });
  if (first == raw.end()) return grade;
  std::fill(grade.begin(), grade.begin() + (first - raw.begin()), **first);

  int window = config.sg_window;
  if (static_cast<std::size_t>(window) > n) window = static_cast<int>(n % 2 == 1 ? n : n - 1);
  if (window > config.sg_order) grade = savitzky_golay(grade, window, config.sg_order);

  for (auto& g : grade) g = std::clamp(g, -config.grade_bound, config.grade_bound);
  return grade;
}

std::vector<TripRecord> preprocess_trip(const std::string& trip_id, std::span<const RawSample> raw,
                                        const PreprocessConfig& config) {
  const std::size_t n = raw.size();
  if (n < 3) throw input_error("trip " + trip_id + ": fewer than 3 samples");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = raw[i];
    if (i > 0 && !(s.t > raw[i - 1].t)) throw input_error("trip " + trip_id + ": timestamps not strictly increasing");
    if (s.lat < -90.0 || s.lat > 90.0 || s.lon < -180.0 || s.lon > 180.0)
      throw input_error("trip " + trip_id + ": coordinate out of range");
    t[i] = s.t;
  }

  std::vector<double> dts(n - 1);
  for (std::size_t i = 1; i < n; ++i) dts[i - 1] = t[i] - t[i - 1];
  std::nth_element(dts.begin(), dts.begin() + static_cast<std::ptrdiff_t>(dts.size() / 2), dts.end());
  const double dt = dts[dts.size() / 2];
  const auto factor = static_cast<std::size_t>(std::max(1.0, std::round(1.0 / dt)));

  // GPS fixes implying implausible horizontal speed are treated as missing.
  std::vector<std::optional<double>> lat(n), lon(n), alt(n), speed(n);
  std::optional<std::size_t> last_fix;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < n; ++i) {
    speed[i] = raw[i].speed;
    bool ok = true;
    if (last_fix) {
      const double d = haversine_distance({raw[*last_fix].lat, raw[*last_fix].lon}, {raw[i].lat, raw[i].lon});
      ok = d / (t[i] - t[*last_fix]) <= config.max_gps_speed;
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    last_fix = i;
    lat[i] = raw[i].lat;
    lon[i] = raw[i].lon;
    alt[i] = raw[i].alt;
  }
  if (dropped > 0) logger()->debug("trip {}: dropped {} GPS outliers", trip_id, dropped);

  const auto lat_f = fill_linear(lat, t);
  const auto lon_f = fill_linear(lon, t);
  std::vector<double> alt_f;
  try {
    alt_f = fill_linear(alt, t);
  } catch (const Error&) {
    throw input_error("trip " + trip_id + ": no altitude samples");
  }

  const auto segments = clean_speed(speed, config.speed_bounds, config.max_gap_s, dt);

  std::vector<TripRecord> out;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const auto& seg = segments[s];
    const std::size_t len = seg.values.size();
    auto slice = [&](const std::vector<double>& x) {
      return std::span<const double>(x).subspan(seg.begin, len);
    };
    const auto v1 = resample_mean(seg.values, factor);
    const auto lat1 = resample_mean(slice(lat_f), factor);
    const auto lon1 = resample_mean(slice(lon_f), factor);
    const auto alt1 = resample_mean(slice(alt_f), factor);
    if (v1.size() < 3) {
      logger()->debug("trip {}: dropping {}-sample segment", trip_id, v1.size());
      continue;
    }
    std::vector<GeoPoint> track(v1.size());
    for (std::size_t k = 0; k < track.size(); ++k) track[k] = {lat1[k], lon1[k]};

    TripRecord rec;
    rec.trip_id = segments.size() == 1 ? trip_id : trip_id + "_" + std::to_string(s);
    rec.v = v1;
    rec.a = central_diff_accel(v1, 1.0);
    rec.g_f = grade_profile(track, alt1, config);
    const double t0 = std::round(t[seg.begin]);
    rec.t.resize(v1.size());
    for (std::size_t k = 0; k < rec.t.size(); ++k) rec.t[k] = t0 + static_cast<double>(k);
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw input_error("trip " + trip_id + ": no segment long enough after cleaning");
  return out;
}

}  // namespace cyclegen
