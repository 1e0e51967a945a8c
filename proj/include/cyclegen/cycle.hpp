#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cyclegen/statespace.hpp"

namespace cyclegen {

enum class Method { piesmc, mtb, mcb };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// A generated 1 Hz driving cycle.
struct DriveCycle {
  std::vector<double> t;  // s
  std::vector<double> v;  // m/s
  std::vector<double> a;  // m/s^2
  std::vector<double> g;  // percent
  // Generating state per sample; StateIndex{0} marks samples that were not
  // produced by a state transition (inserted idle, verbatim micro-trip data).
  std::vector<StateIndex> states;
  // Sample indices reached by a dead-end recovery jump instead of a transition.
  std::vector<std::size_t> recoveries;
  Method method = Method::piesmc;
  double cost_e = 0.0;

  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  void push(double v_, double a_, double g_, StateIndex s = {}) {
    t.push_back(static_cast<double>(v.size()));
    v.push_back(v_);
    a.push_back(a_);
    g.push_back(g_);
    states.push_back(s);
  }
  void push(const Kinematics& k, StateIndex s) { push(k.v, k.a, k.g, s); }

  /// Appends `seconds` idle samples (v = a = 0) at constant grade.
  void push_idle(std::size_t seconds, double grade) {
    for (std::size_t i = 0; i < seconds; ++i) push(0.0, 0.0, grade);
  }
};

}  // namespace cyclegen
