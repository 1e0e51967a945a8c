#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cyclegen {

/// One logged sample of a raw trip. Missing speed/altitude are std::nullopt.
struct RawSample {
  double t = 0.0;  // s, strictly increasing within a trip
  std::optional<double> speed;  // m/s
  double lat = 0.0;  // deg
  double lon = 0.0;  // deg
  std::optional<double> alt;  // m
};

/// A cleaned trip on a uniform 1 Hz grid.
struct TripRecord {
  std::string trip_id;
  std::vector<double> t;    // s
  std::vector<double> v;    // m/s
  std::vector<double> a;    // m/s^2
  std::vector<double> g_f;  // filtered grade, percent

  std::size_t size() const { return v.size(); }
};

struct GradeErrorReport {
  double mae = 0.0;   // percent
  double mse = 0.0;   // percent^2
  double rmse = 0.0;  // percent
};

struct GeoPoint {
  double lat = 0.0;  // deg
  double lon = 0.0;  // deg
};

struct SpeedBounds {
  double min = 0.0;
  double max = 28.0;
};

/// A contiguous run of usable speed samples. `begin` indexes the input series.
struct SpeedSegment {
  std::size_t begin = 0;
  std::vector<double> values;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Fills missing runs no longer than `max_gap_s` by linear interpolation,
/// clips present values into `bounds`, and splits the series at longer gaps.
/// Leading and trailing missing samples are dropped. NaN counts as missing.
/// Throws an input error when no sample survives.
std::vector<SpeedSegment> clean_speed(std::span<const std::optional<double>> raw, SpeedBounds bounds,
                                      double max_gap_s, double dt = 1.0);

/// Central differences in the interior, one-sided differences at the ends.
std::vector<double> central_diff_accel(std::span<const double> v, double dt);

/// Great-circle distance in metres.
double haversine_distance(GeoPoint p1, GeoPoint p2, double radius_m = kEarthRadiusM);

inline constexpr double kMinGradeDistanceM = 0.5;

/// 100 * delta_alt / d, or std::nullopt when d <= d_min (vehicle effectively
/// stationary; the caller holds the previous grade).
std::optional<double> raw_grade(double delta_alt, double d, double d_min = kMinGradeDistanceM);

/// Smoothing weights for the centre sample of a length-`window` least-squares
/// polynomial fit of order `order`. Cached per (window, order).
const std::vector<double>& savitzky_golay_weights(int window, int order);

/// Savitzky-Golay smoothing with mirror padding of (window-1)/2 samples at
/// each end, so the output has the input's length.
std::vector<double> savitzky_golay(std::span<const double> x, int window, int order);

/// Block means over `factor` samples; a trailing partial block is dropped.
std::vector<double> resample_mean(std::span<const double> x, std::size_t factor);

inline std::vector<double> resample_1hz(std::span<const double> x) { return resample_mean(x, 30); }

GradeErrorReport grade_error_metrics(std::span<const double> calc, std::span<const double> ref);

struct PreprocessConfig {
  SpeedBounds speed_bounds{};
  double max_gap_s = 2.0;
  double max_gps_speed = 60.0;  // m/s; implied horizontal speed above this drops the fix
  int sg_window = 25;
  int sg_order = 3;
  double grade_bound = 6.0;  // percent
  double min_grade_distance = kMinGradeDistanceM;
};

/// Full cleaning pipeline for one trip: GPS outlier removal, speed cleaning
/// (which may split the trip), block-mean resampling to 1 Hz, acceleration
/// from the 1 Hz speed, per-pair raw grade, Savitzky-Golay smoothing and
/// clipping to the grade bound. Segments shorter than 3 s are discarded.
/// Split segments are named "<id>_<k>".
std::vector<TripRecord> preprocess_trip(const std::string& trip_id, std::span<const RawSample> raw,
                                        const PreprocessConfig& config = {});

/// Grade series (percent) for a 1 Hz position track, raw then filtered.
std::vector<double> grade_profile(std::span<const GeoPoint> track, std::span<const double> altitude,
                                  const PreprocessConfig& config = {});

}  // namespace cyclegen
