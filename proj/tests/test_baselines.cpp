#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cyclegen/baselines.hpp"
#include "cyclegen/error.hpp"
#include "cyclegen/synthetic.hpp"
#include "oracles.hpp"

using namespace cyclegen;
using doctest::Approx;

namespace {

StateIndex s(std::uint32_t v) { return StateIndex{v}; }

TripRecord trip(const std::string& id, std::vector<double> v, double grade = 0.0) {
  TripRecord t;
  t.trip_id = id;
  t.v = std::move(v);
  t.a.assign(t.v.size(), 0.0);
  for (std::size_t k = 1; k + 1 < t.v.size(); ++k) t.a[k] = (t.v[k + 1] - t.v[k - 1]) / 2.0;
  t.g_f.assign(t.v.size(), grade);
  for (std::size_t k = 0; k < t.v.size(); ++k) t.t.push_back(static_cast<double>(k));
  return t;
}

const BinningScheme& line_scheme() {
  static const BinningScheme sc(BinningScheme::uniform_edges(0, 6, 1), {-1, 1}, {-1, 1});
  return sc;
}

Sagstm chain_matrix(const std::vector<std::uint32_t>& cycle) {
  std::vector<std::vector<StateIndex>> seq(1);
  for (int rep = 0; rep < 3; ++rep)
    for (auto x : cycle) seq[0].push_back(s(x));
  return build_sagstm(std::span<const std::vector<StateIndex>>(seq), line_scheme());
}

struct OracleSet {
  std::vector<TripRecord> trips = synthetic::oracle_fleet({.trips = 20, .seed = 9});
  BinningScheme scheme = synthetic::oracle_scheme();
};

const OracleSet& oracle_set() {
  static const OracleSet o;
  return o;
}

}  // namespace

TEST_CASE("micro-trip segmentation") {
  {
    const std::vector<TripRecord> t{trip("a", {0, 0, 3, 4, 0, 0, 5, 6, 0})};
    const auto mt = segment_microtrips(t);
    REQUIRE(mt.size() == 2);
    CHECK(mt[0].begin == 2);
    CHECK(mt[0].end == 4);
    CHECK(mt[1].v == std::vector<double>{5, 6});
    CHECK(mt[1].mean_speed == Approx(5.5));
  }
  {
    const std::vector<TripRecord> t{trip("b", {1, 2, 3})};
    const auto mt = segment_microtrips(t);
    REQUIRE(mt.size() == 1);
    CHECK(mt[0].duration() == 3);
  }
  {
    // idle runs at 2, 5-6 and 9: motion 0-1, 3-4, 7-8, 10
    const std::vector<TripRecord> t{trip("c", {1, 1, 0, 2, 2, 0, 0, 3, 3, 0, 4})};
    const auto mt = segment_microtrips(t);
    REQUIRE(mt.size() == 4);
    CHECK(mt[3].begin == 10);
    CHECK(mt[3].duration() == 1);
  }
  {
    const std::vector<TripRecord> t{trip("d", {0, 0, 0})};
    CHECK(segment_microtrips(t).empty());
  }
}

TEST_CASE("micro-trips plus idle runs reassemble every source trip") {
  const auto& o = oracle_set();
  const auto mt = segment_microtrips(o.trips);
  for (const auto& tr : o.trips) {
    std::size_t moving = 0, covered = 0;
    for (double v : tr.v) moving += v > 0.025;
    for (const auto& m : mt) {
      if (m.trip_id != tr.trip_id) continue;
      covered += m.duration();
      for (std::size_t k = 0; k < m.duration(); ++k) CHECK(m.v[k] == tr.v[m.begin + k]);
      if (m.begin > 0) CHECK(tr.v[m.begin - 1] <= 0.025);
      if (m.end < tr.size()) CHECK(tr.v[m.end] <= 0.025);
    }
    CHECK(covered == moving);
  }
}

TEST_CASE("MTB with one micro-trip repeats it between idle periods") {
  const std::vector<TripRecord> t{trip("a", {0, 0, 0, 2, 4, 2, 0, 0, 0})};
  const auto mt = segment_microtrips(t);
  REQUIRE(mt.size() == 1);
  IdleModel idle{3.0, 3.0, {s(1)}};
  Rng rng(1);
  const auto c = mtb_generate(mt, fleet_reference(t).mean, idle, {.t_target = 20, .clusters = 4}, rng);
  const std::vector<double> block{0, 0, 0, 2, 4, 2};
  REQUIRE(c.size() == 24);
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(c.v[k] == block[k % 6]);
}

TEST_CASE("MTB duration and verbatim accelerations") {
  const auto& o = oracle_set();
  const auto mt = segment_microtrips(o.trips);
  const auto idle = build_idle_model(o.trips, o.scheme);
  const auto ref = fleet_reference(o.trips);
  double a_lo = 1e300, a_hi = -1e300;
  std::size_t longest = 0;
  for (const auto& m : mt) {
    longest = std::max(longest, m.duration());
    for (double a : m.a) {
      a_lo = std::min(a_lo, a);
      a_hi = std::max(a_hi, a);
    }
  }
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto c = mtb_generate(mt, ref.mean, idle, {}, rng);
    CHECK(c.size() >= 2160);
    CHECK(c.size() <= 2160 + longest + std::llround(idle.mean_idle_duration));
    for (double a : c.a) {
      CHECK(a >= std::min(a_lo, 0.0));
      CHECK(a <= std::max(a_hi, 0.0));
    }
    const auto f = kinematic_fragments(c.v, c.a);
    CHECK(c.cost_e == Approx(fragment_cost(f, ref.mean).e_total));
  }
}

TEST_CASE("MTB idle share tracks the fleet on the default oracle fleet") {
  const auto trips = synthetic::oracle_fleet({});
  const auto mt = segment_microtrips(trips);
  const auto idle = build_idle_model(trips, synthetic::oracle_scheme());
  const auto ref = fleet_reference(trips);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto c = mtb_generate(mt, ref.mean, idle, {}, rng);
    CHECK(std::abs(kinematic_fragments(c.v, c.a).t_i - ref.mean.t_i) <= 5.0);
  }
}

TEST_CASE("SAGFD examples") {
  const auto& sc = line_scheme();
  DriveCycle one;
  for (int k = 0; k < 5; ++k) one.push(2.5, 0.0, 0.0);
  const auto f1 = sagfd(one, sc);
  REQUIRE(f1.mass.size() == 1);
  CHECK(f1.mass[0].second == 1.0);

  DriveCycle alt;
  for (int k = 0; k < 6; ++k) alt.push(k % 2 ? 1.5 : 3.5, 0.0, 0.0);
  const auto f2 = sagfd(alt, sc);
  CHECK(f2.at(s(2)) == 0.5);
  CHECK(f2.at(s(4)) == 0.5);
  CHECK(f2.total() == Approx(1.0).epsilon(1e-12));

  CHECK(sagfd_error(f2, f2) == 0.0);
  DriveCycle other;
  other.push(5.5, 0.0, 0.0);
  CHECK(sagfd_error(f1, sagfd(other, sc)) == Approx(2.0));
  DriveCycle first;
  first.push(1.5, 0.0, 0.0);
  CHECK(sagfd_error(f2, sagfd(first, sc)) == Approx(0.5));

  CHECK_THROWS_AS(sagfd_error(f1, sagfd(one, synthetic::oracle_scheme())), Error);
}

TEST_CASE("fleet SAGFD is the occupancy-weighted mean of per-trip SAGFDs") {
  const auto& o = oracle_set();
  const auto fleet = sagfd(o.trips, o.scheme);
  CHECK(fleet.total() == Approx(1.0).epsilon(1e-9));
  std::vector<double> mix(o.scheme.n_states() + 1, 0.0);
  double total = 0.0;
  for (const auto& t : o.trips) total += static_cast<double>(t.size());
  for (const auto& t : o.trips) {
    const auto f = sagfd(std::span<const TripRecord>(&t, 1), o.scheme);
    for (auto [st, p] : f.mass) mix[st.value] += p * static_cast<double>(t.size()) / total;
  }
  for (std::uint32_t x = 1; x <= o.scheme.n_states(); ++x) CHECK(fleet.at(s(x)) == Approx(mix[x]).epsilon(1e-12));
}

TEST_CASE("dense and sparse successor sampling agree") {
  const auto& o = oracle_set();
  const auto m = build_sagstm(o.trips, o.scheme);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 3000; ++i) {
    const StateIndex x{static_cast<std::uint32_t>(1 + gen() % m.n_states())};
    const double draw = u(gen);
    const auto a = sample_successor(m, x, draw, true);
    const auto b = sample_successor(m, x, draw, false);
    CHECK(a == b);
    if (a) CHECK(m.prob(x, *a) > 0.0);
  }
}

TEST_CASE("MCB on a deterministic chain reproduces it") {
  const auto m = chain_matrix({1, 2, 3});
  const IdleModel idle{0.0, 0.0, {s(1)}};
  DriveCycle ref;
  ref.push(1.0, 0.0, 0.0);
  Rng rng(2);
  const auto r = mcb_generate(m, idle, sagfd(ref, line_scheme()), {}, {.t_target = 30, .n_candidates = 3}, rng);
  REQUIRE(r.best.size() == 30);
  for (std::size_t k = 0; k < 30; ++k) CHECK(r.best.states[k].value == 1 + k % 3);
}

TEST_CASE("MCB returns the minimum-error candidate and never leaves the matrix") {
  const auto& o = oracle_set();
  const auto m = build_sagstm(o.trips, o.scheme);
  const auto idle = build_idle_model(o.trips, o.scheme);
  const auto fleet = sagfd(o.trips, o.scheme);
  Rng rng(6);
  const auto r = mcb_generate(m, idle, fleet, fleet_reference(o.trips).mean, {.t_target = 900, .n_candidates = 7}, rng);
  REQUIRE(r.candidate_errors.size() == 7);
  const auto lo = std::min_element(r.candidate_errors.begin(), r.candidate_errors.end());
  CHECK(r.best_candidate == static_cast<std::size_t>(lo - r.candidate_errors.begin()));
  CHECK(sagfd_error(sagfd(r.best, o.scheme), fleet) == *lo);
  CHECK(std::abs(static_cast<double>(r.best.size()) - 900.0) <= 1.0);
  CHECK(r.best.v.front() == 0.0);
  CHECK(r.best.v.back() == 0.0);
  CHECK(audit_transitions(r.best, m).violations.empty());
  for (std::size_t k = 1; k < r.best.size(); ++k) {
    const auto a = r.best.states[k - 1], b = r.best.states[k];
    if (a.value && b.value) CHECK(m.prob(a, b) > 0.0);
  }
}

TEST_CASE("long MCB walks match the stationary distribution") {
  const std::uint32_t n = 6;
  std::mt19937_64 gen(31);
  std::vector<std::vector<StateIndex>> seqs(1);
  std::uint32_t x = 1;
  for (int t = 0; t < 5000; ++t) {
    seqs[0].push_back(s(x));
    const std::uint32_t step = static_cast<std::uint32_t>(gen() % 3);  // stay, up, or jump
    x = step == 0 ? x : (step == 1 ? x % n + 1 : 1 + static_cast<std::uint32_t>(gen() % n));
  }
  const auto m = build_sagstm(std::span<const std::vector<StateIndex>>(seqs), line_scheme());
  std::vector<std::vector<double>> p(n, std::vector<double>(n));
  for (std::uint32_t r = 1; r <= n; ++r)
    for (std::uint32_t c = 1; c <= n; ++c) p[r - 1][c - 1] = m.prob(s(r), s(c));
  const auto pi = oracle::stationary(p);

  DriveCycle ref;
  ref.push(0.5, 0.0, 0.0);
  Rng rng(77);
  const auto r =
      mcb_generate(m, IdleModel{0.0, 0.0, {s(1)}}, sagfd(ref, line_scheme()), {}, {.t_target = 1e5, .n_candidates = 1}, rng);
  std::vector<double> freq(n, 0.0);
  for (auto st : r.best.states) freq[st.value - 1] += 1.0 / static_cast<double>(r.best.size());
  double tv = 0.0;
  for (std::uint32_t k = 0; k < n; ++k) tv += 0.5 * std::abs(freq[k] - pi[k]);
  CHECK(tv < 0.02);
}

TEST_CASE("MCB restarts candidates that reach a dead end") {
  // 1 -> 2 -> 3, and 3 has no successors
  std::vector<std::vector<StateIndex>> seq{{s(1), s(2), s(3)}};
  const auto dead = build_sagstm(std::span<const std::vector<StateIndex>>(seq), line_scheme());
  DriveCycle ref;
  ref.push(0.5, 0.0, 0.0);
  Rng rng(3);
  const auto r = mcb_generate(dead, IdleModel{0.0, 0.0, {s(1)}}, sagfd(ref, line_scheme()), {},
                              {.t_target = 10, .n_candidates = 1, .max_restarts = 4}, rng);
  CHECK(r.restarts == 4);
  CHECK(r.best.size() == 10);
  CHECK_FALSE(r.best.recoveries.empty());
  CHECK(audit_transitions(r.best, dead).violations.empty());
}
