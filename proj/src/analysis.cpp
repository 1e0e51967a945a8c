#include "cyclegen/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "cyclegen/error.hpp"

namespace cyclegen {
namespace {

double pct(std::size_t count, std::size_t total) {
  return 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

// Owning FFTW buffers and plans. Planning is not thread-safe in FFTW.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Fft {
 public:
  explicit Fft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_complex(n)),
        out_(fftw_alloc_complex(n)) {
    std::lock_guard lock(fftw_planner_mutex());
    const int size = static_cast<int>(n);
    forward_ = fftw_plan_dft_1d(size, in_, out_, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_1d(size, in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
    fftw_free(in_);
    fftw_free(out_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::complex<double>* in() { return reinterpret_cast<std::complex<double>*>(in_); }
  const std::complex<double>* out() const { return reinterpret_cast<const std::complex<double>*>(out_); }
  void forward() { fftw_execute(forward_); }
  void backward() { fftw_execute(backward_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_complex* in_;
  fftw_complex* out_;
  fftw_plan forward_;
  fftw_plan backward_;
};

// conj(psi(u)) / sqrt(s) for u = m / s.
std::complex<double> morlet_conj(double m, double s, double omega0) {
  const double u = m / s;
  return std::polar(std::exp(-0.5 * u * u) / std::sqrt(s), -omega0 * u);
}

void cwt_direct(std::span<const double> x, double s, double omega0, std::complex<double>* row) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  std::vector<std::complex<double>> kernel(static_cast<std::size_t>(2 * n - 1));
  for (std::ptrdiff_t m = -(n - 1); m <= n - 1; ++m)
    kernel[static_cast<std::size_t>(m + n - 1)] = morlet_conj(static_cast<double>(m), s, omega0);
  for (std::ptrdiff_t tau = 0; tau < n; ++tau) {
    std::complex<double> acc = 0.0;
    for (std::ptrdiff_t t = 0; t < n; ++t) acc += x[static_cast<std::size_t>(t)] * kernel[static_cast<std::size_t>(t - tau + n - 1)];
    row[tau] = acc;
  }
}

}  // namespace

KinematicFragments KinematicFragments::from_values(const std::array<double, kNumFragments>& x) {
  KinematicFragments f;
  f.v_bar_ei = x[0];
  f.v_bar = x[1];
  f.a_bar_p = x[2];
  f.a_bar_n = x[3];
  f.t_i = x[4];
  f.t_c = x[5];
  f.t_ap = x[6];
  f.t_an = x[7];
  return f;
}

KinematicFragments kinematic_fragments(std::span<const double> v, std::span<const double> a,
                                       const FragmentThresholds& th) {
  if (v.empty()) throw input_error("kinematic_fragments: empty cycle");
  if (v.size() != a.size()) throw validation_error("kinematic_fragments: speed and acceleration lengths differ");
  const std::size_t n = v.size();

  double v_sum = 0.0, v_moving_sum = 0.0, ap_sum = 0.0, an_sum = 0.0;
  std::size_t moving = 0, ap_count = 0, an_count = 0, idle = 0, cruise = 0, pos = 0, neg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    v_sum += v[k];
    if (v[k] > th.idle_speed) {
      v_moving_sum += v[k];
      ++moving;
    } else {
      ++idle;
    }
    if (a[k] >= th.accel) {
      ap_sum += a[k];
      ++ap_count;
    }
    if (a[k] <= -th.accel) {
      an_sum += a[k];
      ++an_count;
    }
    if (v[k] > th.cruise_speed && a[k] >= -th.accel && a[k] <= th.accel) ++cruise;
    if (a[k] > 0.0) ++pos;
    if (a[k] < 0.0) ++neg;
  }

  KinematicFragments f;
  f.v_bar = v_sum / static_cast<double>(n);
  f.v_bar_ei_defined = moving > 0;
  f.v_bar_ei = moving > 0 ? v_moving_sum / static_cast<double>(moving) : 0.0;
  f.a_bar_p_defined = ap_count > 0;
  f.a_bar_p = ap_count > 0 ? ap_sum / static_cast<double>(ap_count) : 0.0;
  f.a_bar_n_defined = an_count > 0;
  f.a_bar_n = an_count > 0 ? an_sum / static_cast<double>(an_count) : 0.0;
  f.t_i = pct(idle, n);
  f.t_c = pct(cruise, n);
  f.t_ap = pct(pos, n);
  f.t_an = pct(neg, n);
  return f;
}

KinematicFragments kinematic_fragments(std::span<const double> v, const FragmentThresholds& th) {
  if (v.size() < 3) {
    const std::vector<double> zeros(v.size(), 0.0);
    return kinematic_fragments(v, zeros, th);
  }
  const auto a = central_diff_accel(v, 1.0);
  return kinematic_fragments(v, a, th);
}

FragmentCost fragment_cost(const KinematicFragments& gen, const KinematicFragments& ref) {
  const auto g = gen.values();
  const auto r = ref.values();
  FragmentCost c;
  for (std::size_t i = 0; i < kNumFragments; ++i) {
    const double diff = g[i] - r[i];
    c.eps[i] = std::abs(r[i]) > 1e-6 ? (diff / r[i]) * (diff / r[i]) : diff * diff;
    c.e_total += c.eps[i];
  }
  return c;
}

FleetReference fleet_reference(std::span<const TripRecord> trips, const FragmentThresholds& th) {
  if (trips.empty()) throw input_error("fleet_reference: no trips");
  std::array<std::vector<double>, kNumFragments> per_fragment;
  for (const auto& trip : trips) {
    const auto f = kinematic_fragments(trip.v, trip.a, th);
    const auto x = f.values();
    const std::array<bool, kNumFragments> defined = {f.v_bar_ei_defined, true, f.a_bar_p_defined,
                                                     f.a_bar_n_defined, true, true, true, true};
    for (std::size_t i = 0; i < kNumFragments; ++i)
      if (defined[i]) per_fragment[i].push_back(x[i]);
  }
  FleetReference ref;
  ref.trips = trips.size();
  std::array<double, kNumFragments> means{};
  for (std::size_t i = 0; i < kNumFragments; ++i) {
    if (per_fragment[i].empty()) continue;
    const auto stats = distribution_stats(per_fragment[i]);
    means[i] = stats.mean;
    ref.std[i] = stats.std;
  }
  ref.mean = KinematicFragments::from_values(means);
  ref.mean.v_bar_ei_defined = !per_fragment[0].empty();
  ref.mean.a_bar_p_defined = !per_fragment[2].empty();
  ref.mean.a_bar_n_defined = !per_fragment[3].empty();
  return ref;
}

std::optional<double> error_improvement(double e_mtb, double e_x) {
  if (!std::isfinite(e_mtb) || !std::isfinite(e_x) || e_mtb == 0.0) return std::nullopt;
  return (e_mtb - e_x) / e_mtb * 100.0;
}

double vsp(double v, double a, double grade_percent, const VspCoefficients& c) {
  return v * (c.rolling_mass_factor * a + c.gravity * std::sin(std::atan(grade_percent / 100.0)) +
              c.rolling_resistance) +
         c.aero * v * v * v;
}

std::vector<double> vsp_series(std::span<const double> v, std::span<const double> a, std::span<const double> grade,
                               const VspCoefficients& c) {
  if (v.size() != a.size() || v.size() != grade.size()) throw validation_error("vsp_series: series lengths differ");
  std::vector<double> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = vsp(v[k], a[k], grade[k], c);
  return out;
}

DistributionStats distribution_stats(std::span<const double> x) {
  if (x.empty()) throw input_error("distribution_stats: empty series");
  DistributionStats s;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  s.min = *lo;
  s.max = *hi;
  // Welford keeps the single pass accurate for long series.
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double xi : x) {
    ++k;
    const double d = xi - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (xi - mean);
  }
  s.mean = mean;
  s.std = std::sqrt(std::max(0.0, m2 / static_cast<double>(x.size())));
  return s;
}

int accuracy_level(double gen_value, double ref_mean, double ref_std) {
  if (ref_std < 0.0) throw input_error("accuracy_level: negative standard deviation");
  const double dev = std::abs(gen_value - ref_mean);
  if (ref_std == 0.0) return dev == 0.0 ? 1 : 4;
  if (dev <= ref_std) return 1;
  if (dev <= 2.0 * ref_std) return 2;
  if (dev <= 3.0 * ref_std) return 3;
  return 4;
}

double morlet_scale(double frequency_hz, double omega0) {
  if (!(frequency_hz > 0.0)) throw input_error("morlet_scale: frequency must be positive");
  return omega0 / (2.0 * std::numbers::pi * frequency_hz);
}

std::vector<double> log_scales(std::size_t count, double f_min, double f_max, double omega0) {
  if (count < 2 || !(f_min > 0.0) || !(f_max > f_min)) throw input_error("log_scales: invalid scale grid");
  const double s_lo = morlet_scale(f_max, omega0);
  const double s_hi = morlet_scale(f_min, omega0);
  std::vector<double> scales(count);
  const double step = std::log(s_hi / s_lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) scales[i] = s_lo * std::exp(step * static_cast<double>(i));
  scales.back() = s_hi;
  return scales;
}

Scalogram cwt(std::span<const double> signal, std::span<const double> scales, double omega0, CwtMethod method) {
  if (signal.size() < 4) throw input_error("cwt: signal needs at least 4 samples");
  if (scales.empty()) throw input_error("cwt: no scales");
  for (double s : scales)
    if (!(s > 0.0) || !std::isfinite(s)) throw input_error("cwt: scales must be positive and finite");

  const std::size_t n = signal.size();
  Scalogram out;
  out.scales.assign(scales.begin(), scales.end());
  for (double s : scales) out.frequencies.push_back(omega0 / (2.0 * std::numbers::pi * s));
  out.times.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.times[t] = static_cast<double>(t);
  out.coefficients.assign(scales.size() * n, {});

  if (method == CwtMethod::direct) {
    for (std::size_t i = 0; i < scales.size(); ++i) cwt_direct(signal, scales[i], omega0, &out.coefficients[i * n]);
    return out;
  }

  // Linear convolution of x with the reversed kernel h[i] = k(n-1-i),
  // i in [0, 2n-2]; W(tau) = (x * h)[tau + n - 1].
  const std::size_t len = 3 * n - 2;
  Fft x_fft(len), work(len);
  std::fill(x_fft.in(), x_fft.in() + len, std::complex<double>{});
  std::copy(signal.begin(), signal.end(), x_fft.in());
  x_fft.forward();
  const std::vector<std::complex<double>> x_hat(x_fft.out(), x_fft.out() + len);

  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t i = 0; i < scales.size(); ++i) {
    std::complex<double>* h = work.in();
    std::fill(h, h + len, std::complex<double>{});
    for (std::ptrdiff_t j = 0; j <= 2 * nn - 2; ++j)
      h[j] = morlet_conj(static_cast<double>(nn - 1 - j), scales[i], omega0);
    work.forward();
    for (std::size_t f = 0; f < len; ++f) work.in()[f] = work.out()[f] * x_hat[f];
    work.backward();
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t tau = 0; tau < n; ++tau) out.coefficients[i * n + tau] = work.out()[tau + n - 1] * inv;
  }
  return out;
}

double wavelet_hf_fraction(const Scalogram& s, double f_split) {
  double hf = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.n_scales(); ++i) {
    double row = 0.0;
    for (std::size_t t = 0; t < s.n_times(); ++t) row += std::norm(s.at(i, t));
    total += row;
    if (s.frequencies[i] > f_split) hf += row;
  }
  return total > 0.0 ? hf / total : 0.0;
}

}  // namespace cyclegen
