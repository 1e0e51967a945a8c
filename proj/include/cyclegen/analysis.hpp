#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cyclegen/preprocess.hpp"

namespace cyclegen {

inline constexpr std::size_t kNumFragments = 8;

/// Fragment names in canonical order, used as JSON keys.
inline constexpr std::array<std::string_view, kNumFragments> kFragmentNames = {
    "v_bar_ei", "v_bar", "a_bar_p", "a_bar_n", "t_i", "t_c", "t_ap", "t_an"};

struct FragmentThresholds {
  double idle_speed = 0.025;   // m/s, V <= idle_speed is idling
  double accel = 0.15;         // m/s^2
  double cruise_speed = 5.0;   // m/s
};

/// The eight kinematic summary statistics of a 1 Hz speed/acceleration trace.
/// Means over an empty selector are reported as 0 with the defined flag cleared.
struct KinematicFragments {
  double v_bar_ei = 0.0;  // mean speed over V > idle_speed
  double v_bar = 0.0;     // mean speed
  double a_bar_p = 0.0;   // mean acceleration over A >= accel
  double a_bar_n = 0.0;   // mean acceleration over A <= -accel
  double t_i = 0.0;       // % idling
  double t_c = 0.0;       // % cruising (V > cruise_speed and |A| <= accel)
  double t_ap = 0.0;      // % with A > 0
  double t_an = 0.0;      // % with A < 0
  bool v_bar_ei_defined = true;
  bool a_bar_p_defined = true;
  bool a_bar_n_defined = true;

  std::array<double, kNumFragments> values() const {
    return {v_bar_ei, v_bar, a_bar_p, a_bar_n, t_i, t_c, t_ap, t_an};
  }
  static KinematicFragments from_values(const std::array<double, kNumFragments>& x);
};

KinematicFragments kinematic_fragments(std::span<const double> v, std::span<const double> a,
                                       const FragmentThresholds& th = {});

/// Acceleration taken from central differences of v at 1 Hz.
KinematicFragments kinematic_fragments(std::span<const double> v, const FragmentThresholds& th = {});

struct FragmentCost {
  std::array<double, kNumFragments> eps{};
  double e_total = 0.0;
};

/// Squared relative error per fragment, falling back to the squared absolute
/// error when the reference value is (near) zero; E is the sum.
FragmentCost fragment_cost(const KinematicFragments& gen, const KinematicFragments& ref);

/// Fleet reference: per-trip fragments averaged over trips, with the
/// population standard deviation across trips. Undefined per-trip fragments
/// are left out of that fragment's statistics.
struct FleetReference {
  KinematicFragments mean;
  std::array<double, kNumFragments> std{};
  std::size_t trips = 0;
};

FleetReference fleet_reference(std::span<const TripRecord> trips, const FragmentThresholds& th = {});

/// (E_mtb - E_x) / E_mtb * 100 at full precision; std::nullopt when E_mtb is
/// zero or either cost is not finite.
std::optional<double> error_improvement(double e_mtb, double e_x);

struct VspCoefficients {
  double rolling_mass_factor = 1.1;  // m/s^2 per m/s^2 acceleration
  double gravity = 9.81;
  double rolling_resistance = 0.132;
  double aero = 0.000302;
};

/// Vehicle specific power in kW/ton.
double vsp(double v, double a, double grade_percent, const VspCoefficients& c = {});

std::vector<double> vsp_series(std::span<const double> v, std::span<const double> a, std::span<const double> grade,
                               const VspCoefficients& c = {});

struct DistributionStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population
};

DistributionStats distribution_stats(std::span<const double> x);

/// 1 within one standard deviation of the mean, 2 within two, 3 within
/// three, 4 otherwise. A zero deviation scores 1 only on an exact match.
int accuracy_level(double gen_value, double ref_mean, double ref_std);

/// Magnitude-and-phase continuous wavelet transform; row-major scales x times.
struct Scalogram {
  std::vector<double> scales;
  std::vector<double> frequencies;  // Hz, omega0 / (2 pi s)
  std::vector<double> times;        // s
  std::vector<std::complex<double>> coefficients;

  std::size_t n_scales() const { return scales.size(); }
  std::size_t n_times() const { return times.size(); }
  std::complex<double> at(std::size_t scale, std::size_t time) const { return coefficients[scale * times.size() + time]; }
  double magnitude(std::size_t scale, std::size_t time) const { return std::abs(at(scale, time)); }
};

enum class CwtMethod { fft, direct };

inline constexpr double kMorletOmega0 = 6.0;

/// Scale whose Morlet centre frequency is f (1 Hz sampling).
double morlet_scale(double frequency_hz, double omega0 = kMorletOmega0);

/// Log-spaced scales between the given frequency limits (defaults: 64 scales
/// spanning 0.002-0.5 Hz). Ascending in scale, i.e. descending in frequency.
std::vector<double> log_scales(std::size_t count = 64, double f_min = 0.002, double f_max = 0.5,
                               double omega0 = kMorletOmega0);

/// W(s, tau) = s^-1/2 sum_t x(t) conj(psi((t - tau)/s)) with the complex Morlet
/// psi(u) = exp(i omega0 u) exp(-u^2/2), zero padded outside the signal.
Scalogram cwt(std::span<const double> signal, std::span<const double> scales, double omega0 = kMorletOmega0,
              CwtMethod method = CwtMethod::fft);

/// Share of scalogram energy sum |W|^2 in rows whose frequency exceeds
/// f_split. Zero for an all-zero scalogram.
double wavelet_hf_fraction(const Scalogram& s, double f_split);

inline constexpr double kDefaultHfSplit = 0.05;  // Hz

}  // namespace cyclegen
