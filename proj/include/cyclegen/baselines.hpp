#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cyclegen/analysis.hpp"
#include "cyclegen/cycle.hpp"
#include "cyclegen/piesmc.hpp"
#include "cyclegen/rng.hpp"
#include "cyclegen/statespace.hpp"

namespace cyclegen {

/// A trip segment between stops, copied verbatim from its source trip.
struct MicroTrip {
  std::string trip_id;
  std::size_t begin = 0;  // first sample in the source trip
  std::size_t end = 0;    // one past the last sample
  std::vector<double> v;
  std::vector<double> a;
  std::vector<double> g;
  double mean_speed = 0.0;

  std::size_t duration() const { return v.size(); }
};

/// Splits every trip at its maximal idle runs (v <= idle_threshold); the
/// idle samples themselves belong to no micro-trip.
std::vector<MicroTrip> segment_microtrips(std::span<const TripRecord> trips, double idle_threshold = 0.025);

struct MtbOptions {
  double t_target = 2160.0;
  std::size_t clusters = 4;
};

/// Micro-trip-based construction. Micro-trips are grouped into speed-quantile
/// clusters; starting with an idle period, the generator repeatedly picks the
/// cluster whose typical micro-trip moves the running moving-average speed
/// closest to the fleet's V_EI, appends a random member verbatim and then an
/// idle period of the fleet mean duration, until the target duration is
/// reached. Joins are not smoothed.
DriveCycle mtb_generate(std::span<const MicroTrip> microtrips, const KinematicFragments& fleet_ref,
                        const IdleModel& idle, const MtbOptions& options, Rng& rng);

/// Normalised (speed, acceleration, grade) bin occupancy, stored sparsely as
/// ascending (state, mass) pairs.
struct Sagfd {
  std::size_t n_states = 0;
  std::vector<std::pair<StateIndex, double>> mass;

  double at(StateIndex s) const;
  double total() const;
};

Sagfd sagfd(const DriveCycle& cycle, const BinningScheme& scheme);
Sagfd sagfd(std::span<const TripRecord> trips, const BinningScheme& scheme);

/// Sum over all bins of the squared mass difference. Throws a validation
/// error when the two distributions use different state spaces.
double sagfd_error(const Sagfd& gen, const Sagfd& ref);

/// Successor of s for a uniform draw u in [0, 1): the first target whose
/// cumulative probability exceeds u. The dense form walks the full row of
/// N states the way a conventional transition-matrix sampler does; both forms
/// accumulate in the same order and return the same state. std::nullopt for
/// a dead end.
std::optional<StateIndex> sample_successor(const Sagstm& m, StateIndex s, double u, bool dense);

struct McbOptions {
  double t_target = 2160.0;
  std::size_t n_candidates = 50;
  std::size_t max_restarts = 1000;  // per candidate
  bool dense_rows = true;
};

struct McbResult {
  DriveCycle best;
  std::vector<double> candidate_errors;  // SAGFD error per candidate
  std::size_t best_candidate = 0;
  std::size_t restarts = 0;
};

/// Markov-chain-based construction: each candidate starts at the zero
/// speed/acceleration/grade state, samples successors by row probability for
/// t_target minus two mean idle periods, and is framed by constant-grade idle
/// periods at both ends. A candidate that hits a dead end is restarted. The
/// candidate with the smallest SAGFD error against the fleet is returned,
/// with its fragment cost against fleet_ref in cost_e.
McbResult mcb_generate(const Sagstm& m, const IdleModel& idle, const Sagfd& fleet, const KinematicFragments& fleet_ref,
                       const McbOptions& options, Rng& rng);

}  // namespace cyclegen
