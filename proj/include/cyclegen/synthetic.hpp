#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cyclegen/preprocess.hpp"
#include "cyclegen/statespace.hpp"

namespace cyclegen::synthetic {

/// 12 speed bins of 2.5 m/s over [0, 30], 9 acceleration bins of 0.4 m/s^2
/// over [-1.8, 1.8], 9 grade bins of 1 % over [-4.5, 4.5].
BinningScheme oracle_scheme();

struct OracleFleetOptions {
  std::size_t trips = 100;
  double min_trip_s = 1200.0;   // a trip ends at the first stop after this
  std::size_t idle_min_s = 8;   // planted idle durations are uniform on [min, max]
  std::size_t idle_max_s = 28;
  double burst_prob = 0.35;     // per-second probability of leaving cruise
  double burst_stay = 0.55;     // per-second probability of holding a burst bin
  double stop_stay = 0.8;       // same, for braking below 7.5 m/s
  double preferred_speed_bin = 5.0;
  double speed_bias = 0.12;     // how strongly bursts push speed toward the preferred bin
  double grade_step_prob = 0.01;  // each way, per second at 10 m/s; scales with speed
  std::uint64_t seed = 1;
};

/// Trips whose moving samples follow a fixed Markov chain over
/// oracle_scheme() states (values are bin centres), separated by planted idle
/// runs (v = a = 0, grade held). Every trip starts and ends idle.
///
/// Chain: from cruise (a = 0) the vehicle starts an acceleration or braking
/// burst of 0.8-1.6 m/s^2, accelerating more often below the preferred speed;
/// bursts hold, strengthen, weaken or return to cruise. Speed moves one bin
/// in the direction of a with probability |a| / 2.5 per second, and braking
/// out of the lowest speed bin is a stop. Grade takes one-bin steps at a rate
/// proportional to speed (per distance travelled). The defaults give fleet
/// kinematics close to a measured urban fleet: V_EI about 12 m/s, 20 % idle,
/// mean positive/negative acceleration about +-1.3 m/s^2.
std::vector<TripRecord> oracle_fleet(const OracleFleetOptions& options);

struct RawTripOptions {
  double duration_s = 900.0;
  double rate_hz = 1.0;
  bool stop_and_go = true;    // otherwise constant cruise_speed
  double cruise_speed = 20.0; // m/s
  double altitude_noise_m = 1.0;
  double speed_dropout_prob = 0.0;  // per-sample probability of a missing speed
  std::uint64_t seed = 1;
};

struct SyntheticRawTrip {
  std::vector<RawSample> samples;
  std::vector<double> true_grade;  // percent, per sample
  std::vector<double> true_speed;  // m/s, per sample
};

/// GPS-like raw log over terrain with a known grade profile (a slow sinusoid
/// plus trapezoidal ramps in distance), with additive N(0, sigma) altitude noise.
SyntheticRawTrip raw_trip(const RawTripOptions& options);

/// Known terrain grade (percent) at a distance along the route.
double terrain_grade(double distance_m);

}  // namespace cyclegen::synthetic
