#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/preprocess.hpp"

namespace cyclegen {

/// 1-based index into the joint speed x acceleration x grade state space.
struct StateIndex {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const StateIndex&) const = default;
};

/// 1-based (speed, acceleration, grade) bin triple.
struct BinTriple {
  int speed = 1;
  int accel = 1;
  int grade = 1;

  constexpr auto operator<=>(const BinTriple&) const = default;
};

struct Kinematics {
  double v = 0.0;  // m/s
  double a = 0.0;  // m/s^2
  double g = 0.0;  // percent
};

/// Bin edges per dimension; k+1 strictly increasing edges define k bins.
/// Bins are half-open [e_m, e_{m+1}); values outside the edge range clamp to
/// the first or last bin.
class BinningScheme {
 public:
  BinningScheme(std::vector<double> speed_edges, std::vector<double> accel_edges, std::vector<double> grade_edges);

  /// Equal-width edges from lo to hi. (hi - lo) must be a whole multiple of width
  /// up to rounding.
  static std::vector<double> uniform_edges(double lo, double hi, double width);

  /// 0.5 m/s over [0, 30], 0.2 m/s^2 over [-4, 4], 0.3 % over [-6, 6].
  static BinningScheme standard();

  /// Same ranges as standard() with custom widths.
  static BinningScheme with_widths(double speed_width, double accel_width, double grade_width);

  const std::vector<double>& speed_edges() const { return speed_edges_; }
  const std::vector<double>& accel_edges() const { return accel_edges_; }
  const std::vector<double>& grade_edges() const { return grade_edges_; }

  int n_speed() const { return static_cast<int>(speed_edges_.size()) - 1; }
  int n_accel() const { return static_cast<int>(accel_edges_.size()) - 1; }
  int n_grade() const { return static_cast<int>(grade_edges_.size()) - 1; }
  std::size_t n_states() const {
    return static_cast<std::size_t>(n_speed()) * static_cast<std::size_t>(n_accel()) *
           static_cast<std::size_t>(n_grade());
  }

  bool operator==(const BinningScheme&) const = default;

 private:
  std::vector<double> speed_edges_;
  std::vector<double> accel_edges_;
  std::vector<double> grade_edges_;
};

StateIndex encode_state(BinTriple bins, const BinningScheme& scheme);
BinTriple decode_state(StateIndex n, const BinningScheme& scheme);

/// Half-open bin lookup for a single value, clamped to [1, edges.size()-1].
int bin_of(double x, std::span<const double> edges);

BinTriple bin_sample(double v, double a, double g, const BinningScheme& scheme);

inline StateIndex state_of(double v, double a, double g, const BinningScheme& scheme) {
  return encode_state(bin_sample(v, a, g, scheme), scheme);
}

/// Bin centres of the state's (speed, acceleration, grade) bins.
Kinematics state_kinematics(StateIndex n, const BinningScheme& scheme);

/// Per-sample states of a trip.
std::vector<StateIndex> quantize(const TripRecord& trip, const BinningScheme& scheme);

/// Sparse row-stochastic speed-acceleration-grade transition matrix in
/// compressed-row form. Each row's targets are sorted ascending and every
/// stored probability is positive.
class Sagstm {
 public:
  Sagstm(BinningScheme scheme, std::vector<std::size_t> row_ptr, std::vector<StateIndex> targets,
         std::vector<double> probs);

  const BinningScheme& scheme() const { return scheme_; }
  std::size_t n_states() const { return row_ptr_.size() - 1; }
  std::size_t nnz() const { return targets_.size(); }

  /// Feasible successors of s, ascending.
  std::span<const StateIndex> targets(StateIndex s) const;
  std::span<const double> probs(StateIndex s) const;

  /// Offset of row s within the edge arrays; edges of s are
  /// [row_begin(s), row_begin(s) + row_support(s)).
  std::size_t row_begin(StateIndex s) const { return row_ptr_[check(s) - 1]; }
  std::size_t row_support(StateIndex s) const { return row_ptr_[check(s)] - row_ptr_[check(s) - 1]; }

  /// Edge id of the (s, a) entry, if nonzero.
  std::optional<std::size_t> edge(StateIndex s, StateIndex a) const;

  /// SAGSTM(s, a); zero when the transition was never observed.
  double prob(StateIndex s, StateIndex a) const;

  StateIndex edge_target(std::size_t e) const { return targets_[e]; }
  double edge_prob(std::size_t e) const { return probs_[e]; }

  /// Source state of every edge, parallel to the edge arrays.
  std::vector<StateIndex> edge_sources() const;

 private:
  std::uint32_t check(StateIndex s) const;

  BinningScheme scheme_;
  std::vector<std::size_t> row_ptr_;
  std::vector<StateIndex> targets_;
  std::vector<double> probs_;
};

/// Pools consecutive-sample transition counts over all trips (never across
/// trip boundaries) and normalises each row by its outgoing total. Throws an
/// input error when the fleet contains no transition.
Sagstm build_sagstm(std::span<const TripRecord> trips, const BinningScheme& scheme);

/// Same construction from already-quantised state sequences.
Sagstm build_sagstm(std::span<const std::vector<StateIndex>> sequences, const BinningScheme& scheme);

/// A'(s): states reachable from s with nonzero probability. Empty for dead ends.
inline std::span<const StateIndex> feasible_actions(const Sagstm& m, StateIndex s) { return m.targets(s); }

}  // namespace cyclegen
