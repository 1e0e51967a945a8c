#include "cyclegen/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cyclegen/error.hpp"
#include "cyclegen/rng.hpp"

namespace cyclegen::synthetic {
namespace {

constexpr int kSpeedBins = 12;
constexpr int kAccelBins = 9;
constexpr int kGradeBins = 9;
constexpr int kCruise = 5;  // accel bin holding a = 0

double speed_center(int i) { return (i - 0.5) * 2.5; }
double accel_center(int j) { return -2.0 + 0.4 * j; }
double grade_center(int k) { return static_cast<double>(k - 5); }

struct ChainState {
  int i = 1;
  int j = 8;
  int k = 5;
};

int next_accel(int i, int j, const OracleFleetOptions& o, Rng& rng) {
  const double u = rng.uniform();
  if (j == kCruise) {
    if (u >= o.burst_prob) return kCruise;
    const double p_up = std::clamp(0.5 + o.speed_bias * (o.preferred_speed_bin - i), 0.1, 0.9);
    const double r = rng.uniform();
    const int size = r < 0.15 ? 2 : (r < 0.5 ? 3 : 4);  // bins away from cruise
    return rng.uniform() < p_up ? kCruise + size : kCruise - size;
  }
  const double stay = (j < kCruise && i <= 3) ? o.stop_stay : o.burst_stay;
  if (u < stay) return j;
  const double r = rng.uniform();
  const int dir = j > kCruise ? 1 : -1;
  if (r < 0.6) return kCruise;
  if (r < 0.8) return std::clamp(j + dir, 1, kAccelBins);  // stronger
  return j - dir;                                           // weaker
}

// One second of the moving chain. Returns false when the micro-trip ends.
bool step(ChainState& s, const OracleFleetOptions& o, Rng& rng) {
  const double a = accel_center(s.j);
  if (rng.uniform() < std::abs(a) / 2.5) {
    if (a > 0.0) {
      s.i = std::min(s.i + 1, kSpeedBins);
    } else {
      if (s.i == 1) return false;
      --s.i;
    }
  }
  s.j = next_accel(s.i, s.j, o, rng);
  const double gp = o.grade_step_prob * speed_center(s.i) / 10.0;
  const double ug = rng.uniform();
  if (ug < gp) {
    s.k = std::max(s.k - 1, 1);
  } else if (ug < 2.0 * gp) {
    s.k = std::min(s.k + 1, kGradeBins);
  }
  return true;
}

void push(TripRecord& trip, double v, double a, double g) {
  trip.t.push_back(static_cast<double>(trip.v.size()));
  trip.v.push_back(v);
  trip.a.push_back(a);
  trip.g_f.push_back(g);
}

}  // namespace

BinningScheme oracle_scheme() {
  return BinningScheme(BinningScheme::uniform_edges(0.0, 30.0, 2.5), BinningScheme::uniform_edges(-1.8, 1.8, 0.4),
                       BinningScheme::uniform_edges(-4.5, 4.5, 1.0));
}

std::vector<TripRecord> oracle_fleet(const OracleFleetOptions& options) {
  if (options.idle_min_s == 0 || options.idle_max_s < options.idle_min_s)
    throw input_error("oracle_fleet: idle duration range must satisfy 0 < min <= max");
  if (!(options.grade_step_prob >= 0.0 && options.grade_step_prob * 2.875 <= 0.5))
    throw input_error("oracle_fleet: grade_step_prob too large for the top speed bin");
  for (double p : {options.burst_prob, options.burst_stay, options.stop_stay})
    if (!(p >= 0.0 && p <= 1.0)) throw input_error("oracle_fleet: probabilities must lie in [0, 1]");

  Rng rng(options.seed);
  const std::size_t idle_span = options.idle_max_s - options.idle_min_s + 1;
  std::vector<TripRecord> fleet;
  fleet.reserve(options.trips);
  for (std::size_t n = 0; n < options.trips; ++n) {
    TripRecord trip;
    trip.trip_id = "trip_" + std::to_string(n + 1);
    int k = 3 + static_cast<int>(rng.below(5));
    auto idle = [&] {
      const std::size_t len = options.idle_min_s + rng.below(idle_span);
      for (std::size_t q = 0; q < len; ++q) push(trip, 0.0, 0.0, grade_center(k));
    };
    idle();
    while (static_cast<double>(trip.size()) < options.min_trip_s) {
      ChainState s{1, 8, k};
      do {
        push(trip, speed_center(s.i), accel_center(s.j), grade_center(s.k));
      } while (step(s, options, rng));
      k = s.k;
      idle();
    }
    fleet.push_back(std::move(trip));
  }
  return fleet;
}

double terrain_grade(double x) {
  const double wave = 2.5 * std::sin(2.0 * std::numbers::pi * x / 6000.0);
  // trapezoid: up 2000-2500, hold to 3500, down to 4000, period 8000
  const double r = std::fmod(x, 8000.0);
  double ramp = 0.0;
  if (r >= 2000.0 && r < 2500.0) {
    ramp = 1.5 * (r - 2000.0) / 500.0;
  } else if (r >= 2500.0 && r < 3500.0) {
    ramp = 1.5;
  } else if (r >= 3500.0 && r < 4000.0) {
    ramp = 1.5 * (4000.0 - r) / 500.0;
  }
  return wave + ramp;
}

SyntheticRawTrip raw_trip(const RawTripOptions& o) {
  if (!(o.rate_hz > 0.0) || !(o.duration_s > 0.0)) throw input_error("raw_trip: rate and duration must be positive");
  Rng rng(o.seed);
  const double dt = 1.0 / o.rate_hz;
  const auto n = static_cast<std::size_t>(std::floor(o.duration_s * o.rate_hz));

  SyntheticRawTrip out;
  out.samples.reserve(n);
  double v = o.stop_and_go ? 0.0 : o.cruise_speed;
  double x = 0.0, alt = 200.0;
  double lat = 45.0, lon = -75.0, heading = 0.3;
  // phases: 0 idle, 1 accelerate, 2 cruise, 3 decelerate
  int phase = o.stop_and_go ? 0 : 2;
  double phase_left = o.stop_and_go ? 10.0 + 20.0 * rng.uniform() : o.duration_s + 1.0;
  double cruise = o.cruise_speed;

  for (std::size_t q = 0; q < n; ++q) {
    RawSample s;
    s.t = static_cast<double>(q) * dt;
    s.lat = lat;
    s.lon = lon;
    s.alt = alt + o.altitude_noise_m * rng.normal();
    if (!(o.speed_dropout_prob > 0.0 && rng.uniform() < o.speed_dropout_prob)) s.speed = v;
    out.samples.push_back(s);
    out.true_speed.push_back(v);
    out.true_grade.push_back(terrain_grade(x));

    if (o.stop_and_go) {
      phase_left -= dt;
      switch (phase) {
        case 0:
          if (phase_left <= 0.0) {
            phase = 1;
            cruise = 8.0 + 12.0 * rng.uniform();
          }
          break;
        case 1:
          v += 1.2 * dt;
          if (v >= cruise) {
            v = cruise;
            phase = 2;
            phase_left = 30.0 + 60.0 * rng.uniform();
          }
          break;
        case 2:
          if (phase_left <= 0.0) phase = 3;
          break;
        default:
          v -= 1.5 * dt;
          if (v <= 0.0) {
            v = 0.0;
            phase = 0;
            phase_left = 10.0 + 30.0 * rng.uniform();
          }
      }
    }

    // advance along the route with the speed of the interval just taken
    const double d = v * dt;
    const double g_mid = terrain_grade(x + 0.5 * d);
    alt += g_mid / 100.0 * d;
    x += d;
    heading += 0.002 * dt * std::sin(x / 1500.0);
    const double lat_rad = lat * std::numbers::pi / 180.0;
    lat += d * std::cos(heading) / kEarthRadiusM * 180.0 / std::numbers::pi;
    lon += d * std::sin(heading) / (kEarthRadiusM * std::cos(lat_rad)) * 180.0 / std::numbers::pi;
  }
  return out;
}

}  // namespace cyclegen::synthetic
