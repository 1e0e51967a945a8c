#include "cyclegen/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cyclegen/error.hpp"
#include "cyclegen/log.hpp"

namespace cyclegen {
namespace {

std::size_t idle_samples(double seconds) {
  return seconds > 0.0 ? static_cast<std::size_t>(std::llround(seconds)) : 0;
}

Sagfd normalise(std::vector<StateIndex> states, std::size_t n_states) {
  Sagfd out;
  out.n_states = n_states;
  if (states.empty()) return out;
  std::sort(states.begin(), states.end());
  const auto total = static_cast<double>(states.size());
  for (std::size_t i = 0; i < states.size();) {
    std::size_t j = i;
    while (j < states.size() && states[j] == states[i]) ++j;
    out.mass.emplace_back(states[i], static_cast<double>(j - i) / total);
    i = j;
  }
  return out;
}

struct Cluster {
  std::vector<std::size_t> members;
  double mean_speed = 0.0;     // duration-weighted
  double mean_duration = 0.0;  // s
};

std::vector<Cluster> speed_clusters(std::span<const MicroTrip> trips, std::size_t count) {
  std::vector<std::size_t> order(trips.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return trips[x].mean_speed < trips[y].mean_speed; });
  const std::size_t k = std::min(count, trips.size());
  std::vector<Cluster> clusters(k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t lo = c * order.size() / k;
    const std::size_t hi = (c + 1) * order.size() / k;
    auto& cl = clusters[c];
    double dist = 0.0, dur = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& mt = trips[order[i]];
      cl.members.push_back(order[i]);
      dist += mt.mean_speed * static_cast<double>(mt.duration());
      dur += static_cast<double>(mt.duration());
    }
    cl.mean_speed = dist / dur;
    cl.mean_duration = dur / static_cast<double>(cl.members.size());
  }
  return clusters;
}

}  // namespace

std::vector<MicroTrip> segment_microtrips(std::span<const TripRecord> trips, double idle_threshold) {
  std::vector<MicroTrip> out;
  for (const auto& trip : trips) {
    const std::size_t n = trip.v.size();
    for (std::size_t k = 0; k < n;) {
      if (trip.v[k] <= idle_threshold) {
        ++k;
        continue;
      }
      MicroTrip mt;
      mt.trip_id = trip.trip_id;
      mt.begin = k;
      while (k < n && trip.v[k] > idle_threshold) ++k;
      mt.end = k;
      const auto b = static_cast<std::ptrdiff_t>(mt.begin), e = static_cast<std::ptrdiff_t>(mt.end);
      mt.v.assign(trip.v.begin() + b, trip.v.begin() + e);
      mt.a.assign(trip.a.begin() + b, trip.a.begin() + e);
      mt.g.assign(trip.g_f.begin() + b, trip.g_f.begin() + e);
      mt.mean_speed = std::accumulate(mt.v.begin(), mt.v.end(), 0.0) / static_cast<double>(mt.v.size());
      out.push_back(std::move(mt));
    }
  }
  return out;
}

DriveCycle mtb_generate(std::span<const MicroTrip> microtrips, const KinematicFragments& fleet_ref,
                        const IdleModel& idle, const MtbOptions& options, Rng& rng) {
  if (microtrips.empty()) throw input_error("mtb_generate: no micro-trips");
  if (options.clusters == 0) throw input_error("mtb_generate: need at least one cluster");
  const auto clusters = speed_clusters(microtrips, options.clusters);
  const std::size_t idle_len = idle_samples(idle.mean_idle_duration);
  const auto target = static_cast<std::size_t>(std::ceil(std::max(0.0, options.t_target)));

  DriveCycle cycle;
  cycle.method = Method::mtb;
  double moving_sum = 0.0;
  double moving_count = 0.0;
  while (cycle.size() < target) {
    std::size_t pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const auto& cl = clusters[c];
      const double predicted =
          (moving_sum + cl.mean_speed * cl.mean_duration) / (moving_count + cl.mean_duration);
      const double miss = std::abs(predicted - fleet_ref.v_bar_ei);
      if (miss < best) {
        best = miss;
        pick = c;
      }
    }
    const auto& members = clusters[pick].members;
    const auto& mt = microtrips[members[rng.below(members.size())]];

    cycle.push_idle(idle_len, cycle.empty() ? mt.g.front() : cycle.g.back());
    for (std::size_t k = 0; k < mt.duration(); ++k) cycle.push(mt.v[k], mt.a[k], mt.g[k]);
    moving_sum += std::accumulate(mt.v.begin(), mt.v.end(), 0.0);
    moving_count += static_cast<double>(mt.duration());
  }
  if (!cycle.empty()) cycle.cost_e = fragment_cost(kinematic_fragments(cycle.v, cycle.a), fleet_ref).e_total;
  return cycle;
}

double Sagfd::at(StateIndex s) const {
  const auto it = std::lower_bound(mass.begin(), mass.end(), s,
                                   [](const auto& entry, StateIndex key) { return entry.first < key; });
  return it != mass.end() && it->first == s ? it->second : 0.0;
}

double Sagfd::total() const {
  double sum = 0.0;
  for (const auto& [s, p] : mass) sum += p;
  return sum;
}

Sagfd sagfd(const DriveCycle& cycle, const BinningScheme& scheme) {
  if (cycle.empty()) throw input_error("sagfd: empty cycle");
  std::vector<StateIndex> states(cycle.size());
  for (std::size_t k = 0; k < cycle.size(); ++k) states[k] = state_of(cycle.v[k], cycle.a[k], cycle.g[k], scheme);
  return normalise(std::move(states), scheme.n_states());
}

Sagfd sagfd(std::span<const TripRecord> trips, const BinningScheme& scheme) {
  std::vector<StateIndex> states;
  for (const auto& trip : trips) {
    const auto q = quantize(trip, scheme);
    states.insert(states.end(), q.begin(), q.end());
  }
  if (states.empty()) throw input_error("sagfd: fleet has no samples");
  return normalise(std::move(states), scheme.n_states());
}

double sagfd_error(const Sagfd& gen, const Sagfd& ref) {
  if (gen.n_states != ref.n_states) throw validation_error("sagfd_error: distributions use different binning schemes");
  double err = 0.0;
  std::size_t i = 0, j = 0;
  while (i < gen.mass.size() || j < ref.mass.size()) {
    double d;
    if (j == ref.mass.size() || (i < gen.mass.size() && gen.mass[i].first < ref.mass[j].first)) {
      d = gen.mass[i++].second;
    } else if (i == gen.mass.size() || ref.mass[j].first < gen.mass[i].first) {
      d = ref.mass[j++].second;
    } else {
      d = gen.mass[i++].second - ref.mass[j++].second;
    }
    err += d * d;
  }
  return err;
}

std::optional<StateIndex> sample_successor(const Sagstm& m, StateIndex s, double u, bool dense) {
  const auto targets = m.targets(s);
  const auto probs = m.probs(s);
  if (targets.empty()) return std::nullopt;
  double cum = 0.0;
  if (dense) {
    std::size_t j = 0;
    const auto n = static_cast<std::uint32_t>(m.n_states());
    for (std::uint32_t col = 1; col <= n; ++col) {
      const double p = (j < targets.size() && targets[j].value == col) ? probs[j++] : 0.0;
      cum += p;
      if (p > 0.0 && u < cum) return StateIndex{col};
    }
  } else {
    for (std::size_t j = 0; j < targets.size(); ++j) {
      cum += probs[j];
      if (u < cum) return targets[j];
    }
  }
  return targets.back();
}

McbResult mcb_generate(const Sagstm& m, const IdleModel& idle, const Sagfd& fleet, const KinematicFragments& fleet_ref,
                       const McbOptions& options, Rng& rng) {
  if (options.n_candidates == 0) throw input_error("mcb_generate: need at least one candidate");
  const auto& scheme = m.scheme();
  McbResult result;
  result.best.method = Method::mcb;
  const auto target = static_cast<std::size_t>(std::ceil(std::max(0.0, options.t_target)));
  if (target == 0) return result;

  const std::size_t idle_len = idle_samples(idle.mean_idle_duration);
  const std::size_t moving_len = target > 2 * idle_len + 1 ? target - 2 * idle_len : 1;
  const int zero_speed = bin_of(0.0, scheme.speed_edges());

  StateIndex start = state_of(0.0, 0.0, 0.0, scheme);
  if (m.row_support(start) == 0) {
    const auto live = nearest_live_state(m, start, zero_speed);
    if (!live) throw invariant_error("mcb_generate: transition matrix has no live state");
    start = *live;
  }

  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < options.n_candidates; ++c) {
    std::vector<StateIndex> seq;
    std::vector<std::size_t> jumps;
    std::size_t restarts = 0;
    seq.reserve(moving_len);
    seq.push_back(start);
    while (seq.size() < moving_len) {
      const auto next = sample_successor(m, seq.back(), rng.uniform(), options.dense_rows);
      if (next) {
        seq.push_back(*next);
        continue;
      }
      if (restarts < options.max_restarts) {
        ++restarts;
        seq.assign(1, start);
        jumps.clear();
        continue;
      }
      const auto live = nearest_live_state(m, seq.back(), zero_speed);
      if (!live) throw invariant_error("mcb_generate: transition matrix has no live state");
      logger()->info("MCB: restart budget exhausted, recovering from state {} to {}", seq.back().value, live->value);
      jumps.push_back(seq.size());
      seq.push_back(*live);
    }
    result.restarts += restarts;

    DriveCycle cycle;
    cycle.method = Method::mcb;
    cycle.push_idle(idle_len, state_kinematics(seq.front(), scheme).g);
    const std::size_t offset = cycle.size();
    for (auto s : seq) cycle.push(state_kinematics(s, scheme), s);
    for (auto j : jumps) cycle.recoveries.push_back(offset + j);
    cycle.push_idle(idle_len, state_kinematics(seq.back(), scheme).g);

    const double err = sagfd_error(sagfd(cycle, scheme), fleet);
    result.candidate_errors.push_back(err);
    if (err < best_err) {
      best_err = err;
      result.best = std::move(cycle);
      result.best_candidate = c;
    }
  }
  result.best.cost_e = fragment_cost(kinematic_fragments(result.best.v, result.best.a), fleet_ref).e_total;
  return result;
}

}  // namespace cyclegen
