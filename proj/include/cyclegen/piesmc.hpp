#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cyclegen/analysis.hpp"
#include "cyclegen/cycle.hpp"
#include "cyclegen/rng.hpp"
#include "cyclegen/statespace.hpp"

namespace cyclegen {

/// Hyperparameters of the physics-informed Expected-SARSA + Monte-Carlo agent.
struct AgentConfig {
  double gamma_es = 0.9;   // Expected-SARSA discount
  double gamma_mc = 0.99;  // Monte-Carlo discount
  double alpha_es = 0.1;
  double alpha_mc = 0.05;
  double tau = 10.0;       // softmax temperature of the extrinsic reward
  double beta = 0.1;       // intrinsic reward scale
  double lambda_ext = 1.0;
  double lambda_int = 1.0;
  double varsigma = 100.0;  // Monte-Carlo reward scale
  double eps0 = 1.0;
  double eps_min = 0.05;
  double decay = 0.995;
  double w_es0 = 0.9;
  double w_es_min = 0.3;
  double t_target = 2160.0;  // s
  std::size_t n_candidates = 50;
  std::uint64_t seed = 0;

  /// Throws an input error naming the first out-of-range field.
  void validate() const;
};

/// Action-value tables stored edge-parallel to a Sagstm: entry e belongs to the
/// pair (source of e, target of e). Only feasible pairs can therefore hold a
/// value.
struct AgentTables {
  std::vector<double> q_es;
  std::vector<double> q_mc;
  std::vector<double> q_combined;
  std::vector<std::uint64_t> visits;

  /// Q_ES seeded with the transition probabilities, Q_MC zero, and Q_Combined
  /// their w_es-weighted sum.
  static AgentTables seeded(const Sagstm& m, double w_es);
  static AgentTables zeros(const Sagstm& m);

  std::size_t size() const { return q_es.size(); }
};

struct TrajectoryStep {
  StateIndex s;
  StateIndex a;
  std::size_t q = 0;
};

using Trajectory = std::vector<TrajectoryStep>;

struct IdleModel {
  double mean_idle_duration = 0.0;  // s
  double mean_idle_gap = 0.0;       // s between the end of one idle run and the start of the next
  std::vector<StateIndex> initial_states;
};

/// Idle runs are maximal runs with v <= idle_threshold. The gap is measured
/// from the end of one run to the start of the next run in the same trip; when
/// no trip has two runs the mean trip length is used instead.
IdleModel build_idle_model(std::span<const TripRecord> trips, const BinningScheme& scheme,
                           double idle_threshold = 0.025);

/// Softmax of tau * SAGSTM(s, .) over A'(s), evaluated at a. Throws when a is
/// not a feasible successor of s.
double extrinsic_reward(const Sagstm& m, StateIndex s, StateIndex a, double tau);

/// extrinsic_reward for every edge, edge-parallel to m.
std::vector<double> extrinsic_rewards(const Sagstm& m, double tau);

/// beta / sqrt(visits). visits must already include the current visit.
double intrinsic_reward(std::uint64_t visits, double beta);

inline double total_reward(double r_ext, double r_int, double lambda_ext, double lambda_int) {
  return lambda_ext * r_ext + lambda_int * r_int;
}

/// argmax of Q_Combined over A'(s), ties to the lowest state index.
/// std::nullopt for a dead end.
std::optional<StateIndex> greedy_action(const Sagstm& m, const AgentTables& tables, StateIndex s);

/// Epsilon-greedy selection: with probability eps a uniform member of A'(s),
/// otherwise greedy_action. std::nullopt for a dead end.
std::optional<StateIndex> select_action(const Sagstm& m, const AgentTables& tables, StateIndex s, double eps, Rng& rng);

/// sum over a' in A'(s') of pi(a'|s') Q_ES[s', a'] with pi epsilon-greedy on
/// Q_Combined. Zero when A'(s') is empty.
double expected_state_value(const Sagstm& m, const AgentTables& tables, StateIndex s_prime, double eps);

/// Q_ES[s,a] += alpha_es (r + gamma_es E_pi Q_ES[s',.] - Q_ES[s,a]); returns the new value.
double expected_sarsa_update(const Sagstm& m, AgentTables& tables, StateIndex s, StateIndex a, double r,
                             StateIndex s_prime, const AgentConfig& config, double eps);

inline double mc_reward(double cost_e, double varsigma) { return varsigma / (1.0 + cost_e); }

/// gamma_mc^(T - q) * r_mc
double mc_return(std::size_t final_step, std::size_t q, double gamma_mc, double r_mc);

/// Every-visit Monte-Carlo update over the trajectory in visiting order.
void mc_update(const Sagstm& m, AgentTables& tables, const Trajectory& trajectory, double r_mc,
               const AgentConfig& config);

/// Q_Combined = w_es Q_ES + (1 - w_es) Q_MC for every stored pair.
void combine_q(AgentTables& tables, double w_es);

/// Nearest state (by |speed bin|, then |accel bin|, then |grade bin|
/// distance, then index) in the given speed bin whose row is non-empty;
/// falls back to any non-empty row when that speed bin has none.
std::optional<StateIndex> nearest_live_state(const Sagstm& m, StateIndex from, int speed_bin);

struct TransitionAudit {
  std::size_t checked = 0;
  std::vector<std::size_t> violations;  // sample index k where (k-1, k) is not a stored transition
};

/// Checks every consecutive pair of generated states. Pairs touching a sample
/// without a state (inserted idle) and pairs ending at a logged recovery are
/// skipped.
TransitionAudit audit_transitions(const DriveCycle& cycle, const Sagstm& m);

struct EpisodeResult {
  DriveCycle cycle;
  Trajectory trajectory;
  double mean_reward = 0.0;  // mean Expected-SARSA reward per step
};

struct EpisodeReport {
  std::size_t index = 0;
  double cost_e = 0.0;
  double reward_mc = 0.0;
  double mean_reward_es = 0.0;
  double epsilon = 0.0;
  double w_es = 0.0;
  std::size_t duration_s = 0;
  std::size_t steps = 0;
  std::size_t recoveries = 0;
  double runtime_s = 0.0;
};

struct TrainingReport {
  std::vector<EpisodeReport> episodes;
  std::size_t best_episode = 0;
  std::size_t total_recoveries = 0;
  double runtime_s = 0.0;
};

struct TrainingResult {
  DriveCycle best;
  TrainingReport report;
};

/// Stateful agent carrying learning across episodes.
class PiesmcAgent {
 public:
  PiesmcAgent(const Sagstm& m, IdleModel idle, AgentConfig config);

  /// One episode with online Expected-SARSA updates at the current epsilon.
  EpisodeResult run_episode(Rng& rng);

  /// End-of-episode learning: Monte-Carlo update from the cycle's cost, Q
  /// combination at the current w_ES, then epsilon/w_ES decay. Returns R_MC.
  double finish_episode(const Trajectory& trajectory, double cost_e);

  double epsilon() const { return eps_; }
  double w_es() const { return w_es_; }
  const AgentTables& tables() const { return tables_; }
  AgentTables& tables() { return tables_; }
  const IdleModel& idle_model() const { return idle_; }
  const AgentConfig& config() const { return config_; }

 private:
  StateIndex recover(StateIndex from) const;
  void maybe_idle(DriveCycle& cycle, StateIndex s, std::size_t& since_idle) const;

  const Sagstm& m_;
  IdleModel idle_;
  AgentConfig config_;
  AgentTables tables_;
  std::vector<double> ext_;
  int zero_speed_bin_;
  double eps_;
  double w_es_;
};

/// Algorithm driver: n_candidates episodes with learning carried across them;
/// returns the minimum-cost cycle (earliest on ties) and the per-episode report.
TrainingResult train_and_generate(const Sagstm& m, const IdleModel& idle, const KinematicFragments& fleet_ref,
                                  const AgentConfig& config);

TrainingResult train_and_generate(const Sagstm& m, std::span<const TripRecord> trips, const AgentConfig& config);

}  // namespace cyclegen
