#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cyclegen/analysis.hpp"
#include "cyclegen/error.hpp"
#include "oracles.hpp"

using namespace cyclegen;
using doctest::Approx;

namespace {

std::vector<double> sinusoid(std::size_t n, double f, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t));
  return x;
}

}  // namespace

TEST_CASE("fragments of constant cruise") {
  const std::vector<double> v(50, 10.0), a(50, 0.0);
  const auto f = kinematic_fragments(v, a);
  CHECK(f.v_bar == 10.0);
  CHECK(f.v_bar_ei == 10.0);
  CHECK(f.t_c == 100.0);
  CHECK(f.t_i == 0.0);
  CHECK(f.t_ap == 0.0);
  CHECK(f.t_an == 0.0);
  CHECK_FALSE(f.a_bar_p_defined);
}

TEST_CASE("fragments of a stationary cycle") {
  const std::vector<double> v(20, 0.0);
  const auto f = kinematic_fragments(v, v);
  CHECK(f.t_i == 100.0);
  CHECK(f.v_bar == 0.0);
  CHECK_FALSE(f.v_bar_ei_defined);
  CHECK(f.v_bar_ei == 0.0);
}

TEST_CASE("fragments of a triangle profile") {
  const std::vector<double> v{0, 1, 2, 3, 2, 1, 0};
  const auto f = kinematic_fragments(v);
  CHECK(f.t_ap == Approx(300.0 / 7.0));
  CHECK(f.a_bar_p == Approx(1.0));
  CHECK(f.a_bar_n == Approx(-1.0));
  CHECK(f.t_i == Approx(200.0 / 7.0));
}

TEST_CASE("fragment invariants on random traces") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> v(0, 25), a(-3, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> vs(100), as(100);
    for (std::size_t k = 0; k < 100; ++k) {
      vs[k] = k % 7 == 0 ? 0.0 : v(gen);
      as[k] = a(gen);
    }
    const auto f = kinematic_fragments(vs, as);
    for (double p : {f.t_i, f.t_c, f.t_ap, f.t_an}) {
      CHECK(p >= 0.0);
      CHECK(p <= 100.0);
    }
    if (f.a_bar_p_defined) CHECK(f.a_bar_p >= 0.15);
    if (f.a_bar_n_defined) CHECK(f.a_bar_n <= -0.15);
    const auto c = fragment_cost(f, f);
    CHECK(c.e_total == 0.0);
    const auto g = kinematic_fragments(std::vector<double>(vs.begin(), vs.begin() + 50), std::vector<double>(as.begin(), as.begin() + 50));
    const auto d = fragment_cost(g, f);
    double sum = 0.0;
    for (double e : d.eps) {
      CHECK(e >= 0.0);
      sum += e;
    }
    CHECK(d.e_total == Approx(sum).epsilon(1e-12));
  }
}

TEST_CASE("fragment cost examples") {
  KinematicFragments ref = KinematicFragments::from_values({11.7, 9.43, 1.26, -1.28, 19.5, 32.3, 26.9, 26.6});
  CHECK(fragment_cost(ref, ref).e_total == 0.0);

  auto off = ref;
  off.t_c *= 1.1;
  CHECK(fragment_cost(off, ref).e_total == Approx(0.01));

  auto g = ref;
  auto r = ref;
  g.v_bar = 9.39;
  r.v_bar = 9.42;
  CHECK(fragment_cost(g, r).eps[1] == Approx(1.01e-5).epsilon(0.01));

  // zero reference falls back to the absolute error
  auto z = ref;
  z.t_i = 0.0;
  auto zg = z;
  zg.t_i = 3.0;
  CHECK(fragment_cost(zg, z).eps[4] == 9.0);
}

TEST_CASE("undefined fragments are scored against the reference") {
  const KinematicFragments ref = KinematicFragments::from_values({11.7, 9.43, 1.26, -1.28, 19.5, 32.3, 26.9, 26.6});
  const std::vector<double> v(30, 0.0);
  const auto f = kinematic_fragments(v, v);
  const auto c = fragment_cost(f, ref);
  CHECK(c.eps[0] == Approx(1.0));
  CHECK(c.eps[2] == Approx(1.0));
}

TEST_CASE("error improvement") {
  CHECK(*error_improvement(180, 117) == Approx(35.0));
  CHECK(*error_improvement(213, 90.9) == Approx(57.3).epsilon(1e-3));
  CHECK(*error_improvement(180, 135) == Approx(25.0));
  CHECK_FALSE(error_improvement(0.0, 0.0).has_value());
  CHECK_FALSE(error_improvement(1.0, std::nan("")).has_value());
}

TEST_CASE("fleet reference averages per-trip fragments") {
  TripRecord a{"a", {0, 1, 2, 3}, {0, 2, 4, 6}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  TripRecord b{"b", {0, 1}, {0, 0}, {0, 0}, {0, 0}};
  const std::vector<TripRecord> trips{a, b};
  const auto r = fleet_reference(trips);
  CHECK(r.trips == 2);
  CHECK(r.mean.v_bar == Approx(1.5));  // (3 + 0) / 2
  CHECK(r.std[1] == Approx(1.5));
  CHECK(r.mean.t_i == Approx((25.0 + 100.0) / 2));
  // V_EI is undefined for the idle trip and left out
  CHECK(r.mean.v_bar_ei == Approx(4.0));
  CHECK(r.std[0] == 0.0);
}

TEST_CASE("vsp") {
  CHECK(vsp(0.0, 2.0, 5.0) == 0.0);
  CHECK(vsp(10.0, 0.0, 0.0) == Approx(1.622));
  CHECK(vsp(10.0, 1.0, 0.0) == Approx(12.622));
  double prev = -1e300;
  for (double a = -3.0; a <= 3.0; a += 0.25) {
    const double p = vsp(12.0, a, 2.0);
    CHECK(p > prev);
    prev = p;
  }
}

TEST_CASE("distribution stats") {
  const auto a = distribution_stats(std::vector<double>{5, 5, 5});
  CHECK(a.min == 5);
  CHECK(a.max == 5);
  CHECK(a.mean == 5);
  CHECK(a.std == 0);
  const auto b = distribution_stats(std::vector<double>{0, 10});
  CHECK(b.mean == 5);
  CHECK(b.std == 5);
  const auto c = distribution_stats(std::vector<double>{3});
  CHECK(c.min == 3);
  CHECK(c.std == 0);
  CHECK_THROWS_AS(distribution_stats(std::vector<double>{}), Error);
}

TEST_CASE("distribution stats agree with a two-pass computation") {
  std::mt19937_64 gen(13);
  std::lognormal_distribution<double> d(2.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1000 + 37 * trial);
    for (auto& v : x) v = 1e3 + d(gen);
    const auto s = distribution_stats(x);
    const auto o = oracle::two_pass(x);
    CHECK(s.min == o.min);
    CHECK(s.max == o.max);
    CHECK(s.mean == Approx(o.mean).epsilon(1e-12));
    CHECK(s.std == Approx(o.std).epsilon(1e-12));
  }
}

TEST_CASE("accuracy levels") {
  CHECK(accuracy_level(4.0, 4.0, 1.0) == 1);
  CHECK(accuracy_level(5.0, 4.0, 1.0) == 1);
  CHECK(accuracy_level(5.5, 4.0, 1.0) == 2);
  CHECK(accuracy_level(6.5, 4.0, 1.0) == 3);
  CHECK(accuracy_level(7.5, 4.0, 1.0) == 4);
  CHECK(accuracy_level(9.39, 9.43, 0.337) == 1);
  CHECK(accuracy_level(4.0, 4.0, 0.0) == 1);
  CHECK(accuracy_level(4.1, 4.0, 0.0) == 4);
}

TEST_CASE("cwt of a zero signal") {
  const std::vector<double> x(64, 0.0);
  const auto s = cwt(x, log_scales(8));
  CHECK(s.n_scales() == 8);
  CHECK(s.n_times() == 64);
  for (const auto& c : s.coefficients) CHECK(std::abs(c) == 0.0);
  CHECK(wavelet_hf_fraction(s, 0.05) == 0.0);
}

TEST_CASE("cwt matches direct convolution") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(300);
  for (auto& v : x) v = n(gen);
  const auto scales = log_scales(24, 0.005, 0.5);
  const auto fft = cwt(x, scales, kMorletOmega0, CwtMethod::fft);
  const auto direct = cwt(x, scales, kMorletOmega0, CwtMethod::direct);
  double peak = 0.0;
  for (const auto& c : direct.coefficients) peak = std::max(peak, std::abs(c));
  double worst = 0.0;
  for (std::size_t i = 0; i < fft.coefficients.size(); ++i)
    worst = std::max(worst, std::abs(fft.coefficients[i] - direct.coefficients[i]));
  CHECK(worst <= 1e-6 * peak);
  // and both agree with an independent evaluation of the defining sum
  for (std::size_t i : {0ul, 11ul, 23ul})
    for (std::size_t t : {0ul, 150ul, 299ul}) {
      const auto o = oracle::morlet_coefficient(x, scales[i], t, kMorletOmega0);
      CHECK(std::abs(direct.at(i, t) - o) <= 1e-9 * std::max(1.0, std::abs(o)));
    }
}

TEST_CASE("cwt is linear") {
  const auto x = sinusoid(200, 0.03);
  std::vector<double> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = -2.5 * x[k];
  const auto scales = log_scales(16);
  const auto sx = cwt(x, scales), sy = cwt(y, scales);
  for (std::size_t i = 0; i < sx.coefficients.size(); ++i) {
    CHECK(std::abs(sy.coefficients[i] + 2.5 * sx.coefficients[i]) <= 1e-9 * (1.0 + std::abs(sx.coefficients[i])));
    CHECK(std::abs(sy.coefficients[i]) >= 0.0);
  }
}

TEST_CASE("sinusoid response peaks at the analytic Morlet scale") {
  const auto scales = log_scales();
  for (double f : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    const auto x = sinusoid(3000, f);
    const auto s = cwt(x, scales);
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t i = 0; i < s.n_scales(); ++i) {
      double mag = 0.0;
      for (std::size_t t = 1000; t < 2000; ++t) mag += s.magnitude(i, t);
      if (mag > best_mag) {
        best_mag = mag;
        best = i;
      }
    }
    const double analytic = kMorletOmega0 / (2.0 * std::numbers::pi * f);
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < scales.size(); ++i)
      if (std::abs(std::log(scales[i] / analytic)) < std::abs(std::log(scales[nearest] / analytic))) nearest = i;
    CHECK(std::max(best, nearest) - std::min(best, nearest) <= 1);
  }
}

TEST_CASE("a step produces broadband small-scale energy at the step") {
  std::vector<double> x(1000, 0.0);
  std::fill(x.begin() + 500, x.end(), 1.0);
  const auto s = cwt(x, log_scales());
  std::size_t checked = 0;
  for (std::size_t i = 0; i < s.n_scales(); ++i) {
    if (s.frequencies[i] <= kDefaultHfSplit) continue;
    std::vector<double> row(s.n_times());
    for (std::size_t t = 0; t < s.n_times(); ++t) row[t] = s.magnitude(i, t);
    std::nth_element(row.begin(), row.begin() + row.size() / 2, row.end());
    const double median = row[row.size() / 2];
    double at_step = 0.0;
    for (std::size_t t = 498; t <= 502; ++t) at_step = std::max(at_step, s.magnitude(i, t));
    CHECK(at_step > 5.0 * median);
    ++checked;
  }
  CHECK(checked > 10);
}

TEST_CASE("HF fraction of a slow sinusoid is small") {
  const auto s = cwt(sinusoid(4000, 0.005), log_scales());
  CHECK(wavelet_hf_fraction(s, kDefaultHfSplit) < 0.1);
}

TEST_CASE("HF fraction of white noise follows the scale count") {
  // with 1/sqrt(s) normalisation every scale carries the same expected
  // white-noise energy, so the split is the share of scales above f_split
  std::mt19937_64 gen(2);
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(20000);
  for (auto& v : x) v = n(gen);
  const auto scales = log_scales();
  const auto s = cwt(x, scales);
  std::size_t above = 0;
  for (double f : s.frequencies) above += f > kDefaultHfSplit;
  const double expect = static_cast<double>(above) / static_cast<double>(scales.size());
  CHECK(wavelet_hf_fraction(s, kDefaultHfSplit) == Approx(expect).epsilon(0.05));
}

TEST_CASE("log scale grid and cwt argument checks") {
  const auto sc = log_scales();
  CHECK(sc.size() == 64);
  CHECK(sc.front() == Approx(morlet_scale(0.5)));
  CHECK(sc.back() == Approx(morlet_scale(0.002)));
  for (std::size_t i = 1; i < sc.size(); ++i) CHECK(sc[i] > sc[i - 1]);
  CHECK_THROWS_AS(cwt(std::vector<double>{1, 2, 3}, sc), Error);
  CHECK_THROWS_AS(cwt(std::vector<double>(10, 1.0), std::vector<double>{-1.0}), Error);
}
