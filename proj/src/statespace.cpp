#include "cyclegen/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "cyclegen/error.hpp"

namespace cyclegen {
namespace {

void check_edges(const std::vector<double>& edges, const char* name) {
  if (edges.size() < 2) throw input_error(std::string("binning: ") + name + " needs at least 2 edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw input_error(std::string("binning: ") + name + " edges not strictly increasing");
}

double centre(std::span<const double> edges, int bin) {
  return 0.5 * (edges[static_cast<std::size_t>(bin) - 1] + edges[static_cast<std::size_t>(bin)]);
}

}  // namespace

BinningScheme::BinningScheme(std::vector<double> speed_edges, std::vector<double> accel_edges,
                             std::vector<double> grade_edges)
    : speed_edges_(std::move(speed_edges)), accel_edges_(std::move(accel_edges)), grade_edges_(std::move(grade_edges)) {
  check_edges(speed_edges_, "speed");
  check_edges(accel_edges_, "acceleration");
  check_edges(grade_edges_, "grade");
  if (n_states() > UINT32_MAX) throw input_error("binning: state space too large");
}

std::vector<double> BinningScheme::uniform_edges(double lo, double hi, double width) {
  if (!(width > 0.0) || !(hi > lo)) throw input_error("binning: invalid uniform edge range");
  const auto count = static_cast<std::size_t>(std::llround((hi - lo) / width));
  if (count == 0) throw input_error("binning: bin width larger than range");
  std::vector<double> edges(count + 1);
  for (std::size_t k = 0; k <= count; ++k) edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count);
  return edges;
}

BinningScheme BinningScheme::standard() { return with_widths(0.5, 0.2, 0.3); }

BinningScheme BinningScheme::with_widths(double speed_width, double accel_width, double grade_width) {
  return {uniform_edges(0.0, 30.0, speed_width), uniform_edges(-4.0, 4.0, accel_width),
          uniform_edges(-6.0, 6.0, grade_width)};
}

StateIndex encode_state(BinTriple b, const BinningScheme& scheme) {
  if (b.speed < 1 || b.speed > scheme.n_speed() || b.accel < 1 || b.accel > scheme.n_accel() || b.grade < 1 ||
      b.grade > scheme.n_grade())
    throw input_error("encode_state: bin index out of range");
  const auto na = static_cast<std::uint32_t>(scheme.n_accel());
  const auto ng = static_cast<std::uint32_t>(scheme.n_grade());
  return StateIndex{static_cast<std::uint32_t>(b.speed - 1) * na * ng + static_cast<std::uint32_t>(b.accel - 1) * ng +
                    static_cast<std::uint32_t>(b.grade)};
}

BinTriple decode_state(StateIndex n, const BinningScheme& scheme) {
  if (n.value < 1 || n.value > scheme.n_states()) throw input_error("decode_state: state index out of range");
  const auto na = static_cast<std::uint32_t>(scheme.n_accel());
  const auto ng = static_cast<std::uint32_t>(scheme.n_grade());
  const std::uint32_t z = n.value - 1;
  return {static_cast<int>(z / (na * ng)) + 1, static_cast<int>((z / ng) % na) + 1, static_cast<int>(z % ng) + 1};
}

int bin_of(double x, std::span<const double> edges) {
  const auto above = std::upper_bound(edges.begin(), edges.end(), x) - edges.begin();
  const auto bins = static_cast<std::ptrdiff_t>(edges.size()) - 1;
  return static_cast<int>(std::clamp<std::ptrdiff_t>(above, 1, bins));
}

BinTriple bin_sample(double v, double a, double g, const BinningScheme& scheme) {
  return {bin_of(v, scheme.speed_edges()), bin_of(a, scheme.accel_edges()), bin_of(g, scheme.grade_edges())};
}

Kinematics state_kinematics(StateIndex n, const BinningScheme& scheme) {
  const auto b = decode_state(n, scheme);
  return {centre(scheme.speed_edges(), b.speed), centre(scheme.accel_edges(), b.accel),
          centre(scheme.grade_edges(), b.grade)};
}

std::vector<StateIndex> quantize(const TripRecord& trip, const BinningScheme& scheme) {
  if (trip.a.size() != trip.v.size() || trip.g_f.size() != trip.v.size())
    throw validation_error("trip " + trip.trip_id + ": series lengths differ");
  std::vector<StateIndex> states(trip.v.size());
  for (std::size_t k = 0; k < states.size(); ++k) states[k] = state_of(trip.v[k], trip.a[k], trip.g_f[k], scheme);
  return states;
}

Sagstm::Sagstm(BinningScheme scheme, std::vector<std::size_t> row_ptr, std::vector<StateIndex> targets,
               std::vector<double> probs)
    : scheme_(std::move(scheme)), row_ptr_(std::move(row_ptr)), targets_(std::move(targets)), probs_(std::move(probs)) {
  if (row_ptr_.size() != scheme_.n_states() + 1 || row_ptr_.front() != 0 || row_ptr_.back() != targets_.size() ||
      probs_.size() != targets_.size())
    throw input_error("Sagstm: inconsistent compressed-row layout");
  for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r) {
    if (row_ptr_[r + 1] < row_ptr_[r]) throw input_error("Sagstm: row pointers not monotone");
    for (std::size_t e = row_ptr_[r]; e < row_ptr_[r + 1]; ++e) {
      if (targets_[e].value < 1 || targets_[e].value > scheme_.n_states())
        throw input_error("Sagstm: target state out of range");
      if (e > row_ptr_[r] && !(targets_[e - 1] < targets_[e])) throw input_error("Sagstm: row targets not ascending");
      if (!(probs_[e] > 0.0)) throw input_error("Sagstm: stored probability must be positive");
    }
  }
}

std::uint32_t Sagstm::check(StateIndex s) const {
  if (s.value < 1 || s.value > n_states()) throw input_error("Sagstm: state index out of range");
  return s.value;
}

std::span<const StateIndex> Sagstm::targets(StateIndex s) const {
  return std::span<const StateIndex>(targets_).subspan(row_begin(s), row_support(s));
}

std::span<const double> Sagstm::probs(StateIndex s) const {
  return std::span<const double>(probs_).subspan(row_begin(s), row_support(s));
}

std::optional<std::size_t> Sagstm::edge(StateIndex s, StateIndex a) const {
  const auto row = targets(s);
  const auto it = std::lower_bound(row.begin(), row.end(), a);
  if (it == row.end() || *it != a) return std::nullopt;
  return row_begin(s) + static_cast<std::size_t>(it - row.begin());
}

double Sagstm::prob(StateIndex s, StateIndex a) const {
  const auto e = edge(s, a);
  return e ? probs_[*e] : 0.0;
}

std::vector<StateIndex> Sagstm::edge_sources() const {
  std::vector<StateIndex> sources(nnz());
  for (std::size_t r = 0; r + 1 < row_ptr_.size(); ++r)
    std::fill(sources.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]),
              sources.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]),
              StateIndex{static_cast<std::uint32_t>(r + 1)});
  return sources;
}

Sagstm build_sagstm(std::span<const std::vector<StateIndex>> sequences, const BinningScheme& scheme) {
  const std::size_t n = scheme.n_states();
  std::vector<std::uint64_t> keys;
  for (const auto& seq : sequences) {
    for (std::size_t k = 0; k + 1 < seq.size(); ++k) {
      if (seq[k].value < 1 || seq[k].value > n || seq[k + 1].value < 1 || seq[k + 1].value > n)
        throw input_error("build_sagstm: state index out of range");
      keys.push_back((static_cast<std::uint64_t>(seq[k].value) << 32) | seq[k + 1].value);
    }
  }
  if (keys.empty()) throw input_error("build_sagstm: fleet contains no transitions");
  std::sort(keys.begin(), keys.end());

  std::vector<std::size_t> row_ptr(n + 1, 0);
  std::vector<StateIndex> targets;
  std::vector<std::uint64_t> counts;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    const auto from = static_cast<std::uint32_t>(keys[i] >> 32);
    ++row_ptr[from];
    targets.push_back(StateIndex{static_cast<std::uint32_t>(keys[i] & 0xFFFFFFFFu)});
    counts.push_back(j - i);
    i = j;
  }
  for (std::size_t r = 1; r <= n; ++r) row_ptr[r] += row_ptr[r - 1];

  std::vector<double> probs(counts.size());
  for (std::size_t r = 0; r < n; ++r) {
    std::uint64_t total = 0;
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) total += counts[e];
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e)
      probs[e] = static_cast<double>(counts[e]) / static_cast<double>(total);
  }
  return {scheme, std::move(row_ptr), std::move(targets), std::move(probs)};
}

Sagstm build_sagstm(std::span<const TripRecord> trips, const BinningScheme& scheme) {
  if (trips.empty()) throw input_error("build_sagstm: no trips");
  std::vector<std::vector<StateIndex>> sequences;
  sequences.reserve(trips.size());
  for (const auto& trip : trips) sequences.push_back(quantize(trip, scheme));
  return build_sagstm(sequences, scheme);
}

}  // namespace cyclegen
