#include "cyclegen/piesmc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <tuple>

#include "cyclegen/error.hpp"
#include "cyclegen/log.hpp"

namespace cyclegen {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw input_error(std::string("agent config: ") + what);
}

// Greedy edge within [begin, end): first maximum of Q_Combined. Targets are
// ascending, so the first maximum has the lowest state index.
std::size_t greedy_edge(const AgentTables& t, std::size_t begin, std::size_t end) {
  std::size_t best = begin;
  for (std::size_t e = begin + 1; e < end; ++e)
    if (t.q_combined[e] > t.q_combined[best]) best = e;
  return best;
}

std::optional<std::size_t> select_edge(const Sagstm& m, const AgentTables& t, StateIndex s, double eps, Rng& rng) {
  const std::size_t k = m.row_support(s);
  if (k == 0) return std::nullopt;
  const std::size_t begin = m.row_begin(s);
  if (rng.uniform() < eps) return begin + static_cast<std::size_t>(rng.below(k));
  return greedy_edge(t, begin, begin + k);
}

std::size_t idle_samples(double seconds) {
  return seconds > 0.0 ? static_cast<std::size_t>(std::llround(seconds)) : 0;
}

}  // namespace

void AgentConfig::validate() const {
  require(gamma_es > 0.0 && gamma_es <= 1.0, "gamma_es must be in (0, 1]");
  require(gamma_mc > 0.0 && gamma_mc <= 1.0, "gamma_mc must be in (0, 1]");
  require(alpha_es >= 0.0 && alpha_es <= 1.0, "alpha_es must be in [0, 1]");
  require(alpha_mc >= 0.0 && alpha_mc <= 1.0, "alpha_mc must be in [0, 1]");
  require(tau > 0.0, "tau must be positive");
  require(beta >= 0.0, "beta must be non-negative");
  require(lambda_ext >= 0.0 && lambda_int >= 0.0, "reward weights must be non-negative");
  require(varsigma > 0.0, "varsigma must be positive");
  require(eps_min >= 0.0 && eps_min <= eps0 && eps0 <= 1.0, "need 0 <= eps_min <= eps0 <= 1");
  require(decay > 0.0 && decay < 1.0, "decay must be in (0, 1)");
  require(w_es_min >= 0.0 && w_es_min <= w_es0 && w_es0 <= 1.0, "need 0 <= w_es_min <= w_es0 <= 1");
  require(t_target >= 0.0, "t_target must be non-negative");
  require(n_candidates >= 1, "n_candidates must be at least 1");
}

AgentTables AgentTables::seeded(const Sagstm& m, double w_es) {
  AgentTables t = zeros(m);
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    t.q_es[e] = m.edge_prob(e);
    t.q_combined[e] = w_es * t.q_es[e];
  }
  return t;
}

AgentTables AgentTables::zeros(const Sagstm& m) {
  AgentTables t;
  t.q_es.assign(m.nnz(), 0.0);
  t.q_mc.assign(m.nnz(), 0.0);
  t.q_combined.assign(m.nnz(), 0.0);
  t.visits.assign(m.nnz(), 0);
  return t;
}

IdleModel build_idle_model(std::span<const TripRecord> trips, const BinningScheme& scheme, double idle_threshold) {
  if (trips.empty()) throw input_error("build_idle_model: no trips");
  IdleModel model;
  double duration_sum = 0.0, gap_sum = 0.0, length_sum = 0.0;
  std::size_t runs = 0, gaps = 0;
  for (const auto& trip : trips) {
    if (trip.v.empty()) continue;
    model.initial_states.push_back(state_of(trip.v[0], trip.a[0], trip.g_f[0], scheme));
    length_sum += static_cast<double>(trip.v.size());
    std::optional<std::size_t> prev_end;
    for (std::size_t k = 0; k < trip.v.size();) {
      if (trip.v[k] > idle_threshold) {
        ++k;
        continue;
      }
      const std::size_t start = k;
      while (k < trip.v.size() && trip.v[k] <= idle_threshold) ++k;
      duration_sum += static_cast<double>(k - start);
      ++runs;
      if (prev_end) {
        gap_sum += static_cast<double>(start - *prev_end);
        ++gaps;
      }
      prev_end = k;
    }
  }
  if (model.initial_states.empty()) throw input_error("build_idle_model: all trips are empty");
  if (runs > 0) model.mean_idle_duration = duration_sum / static_cast<double>(runs);
  model.mean_idle_gap = gaps > 0 ? gap_sum / static_cast<double>(gaps)
                                 : length_sum / static_cast<double>(model.initial_states.size());
  return model;
}

double extrinsic_reward(const Sagstm& m, StateIndex s, StateIndex a, double tau) {
  const auto e = m.edge(s, a);
  if (!e) throw input_error("extrinsic_reward: action is not a feasible successor");
  const auto p = m.probs(s);
  const double top = *std::max_element(p.begin(), p.end());
  double den = 0.0;
  for (double pi : p) den += std::exp(tau * (pi - top));
  return std::exp(tau * (m.edge_prob(*e) - top)) / den;
}

std::vector<double> extrinsic_rewards(const Sagstm& m, double tau) {
  std::vector<double> out(m.nnz());
  for (std::uint32_t s = 1; s <= m.n_states(); ++s) {
    const StateIndex si{s};
    const auto p = m.probs(si);
    if (p.empty()) continue;
    const double top = *std::max_element(p.begin(), p.end());
    double den = 0.0;
    for (double pi : p) den += std::exp(tau * (pi - top));
    const std::size_t begin = m.row_begin(si);
    for (std::size_t i = 0; i < p.size(); ++i) out[begin + i] = std::exp(tau * (p[i] - top)) / den;
  }
  return out;
}

double intrinsic_reward(std::uint64_t visits, double beta) {
  if (visits == 0) throw invariant_error("intrinsic_reward: visit count must be incremented before the reward");
  return beta / std::sqrt(static_cast<double>(visits));
}

std::optional<StateIndex> greedy_action(const Sagstm& m, const AgentTables& tables, StateIndex s) {
  const std::size_t k = m.row_support(s);
  if (k == 0) return std::nullopt;
  const std::size_t begin = m.row_begin(s);
  return m.edge_target(greedy_edge(tables, begin, begin + k));
}

std::optional<StateIndex> select_action(const Sagstm& m, const AgentTables& tables, StateIndex s, double eps, Rng& rng) {
  const auto e = select_edge(m, tables, s, eps, rng);
  if (!e) return std::nullopt;
  return m.edge_target(*e);
}

double expected_state_value(const Sagstm& m, const AgentTables& tables, StateIndex s_prime, double eps) {
  const std::size_t k = m.row_support(s_prime);
  if (k == 0) return 0.0;
  const std::size_t begin = m.row_begin(s_prime);
  const std::size_t g = greedy_edge(tables, begin, begin + k);
  double sum = 0.0;
  for (std::size_t e = begin; e < begin + k; ++e) sum += tables.q_es[e];
  return eps * sum / static_cast<double>(k) + (1.0 - eps) * tables.q_es[g];
}

double expected_sarsa_update(const Sagstm& m, AgentTables& tables, StateIndex s, StateIndex a, double r,
                             StateIndex s_prime, const AgentConfig& config, double eps) {
  const auto e = m.edge(s, a);
  if (!e) throw invariant_error("expected_sarsa_update: infeasible state-action pair");
  const double target = r + config.gamma_es * expected_state_value(m, tables, s_prime, eps);
  double& q = tables.q_es[*e];
  q += config.alpha_es * (target - q);
  return q;
}

double mc_return(std::size_t final_step, std::size_t q, double gamma_mc, double r_mc) {
  if (q > final_step) throw input_error("mc_return: step beyond the episode end");
  return std::pow(gamma_mc, static_cast<double>(final_step - q)) * r_mc;
}

void mc_update(const Sagstm& m, AgentTables& tables, const Trajectory& trajectory, double r_mc,
               const AgentConfig& config) {
  if (trajectory.empty()) return;
  const std::size_t final_step = trajectory.back().q;
  for (const auto& step : trajectory) {
    const auto e = m.edge(step.s, step.a);
    if (!e) throw invariant_error("mc_update: trajectory contains an infeasible pair");
    const double g = mc_return(final_step, step.q, config.gamma_mc, r_mc);
    tables.q_mc[*e] += config.alpha_mc * (g - tables.q_mc[*e]);
  }
}

void combine_q(AgentTables& tables, double w_es) {
  for (std::size_t e = 0; e < tables.size(); ++e)
    tables.q_combined[e] = w_es * tables.q_es[e] + (1.0 - w_es) * tables.q_mc[e];
}

std::optional<StateIndex> nearest_live_state(const Sagstm& m, StateIndex from, int speed_bin) {
  const auto& scheme = m.scheme();
  const auto origin = decode_state(from, scheme);
  using Key = std::tuple<int, int, int, int, std::uint32_t>;
  std::optional<Key> best;
  for (std::uint32_t s = 1; s <= m.n_states(); ++s) {
    if (m.row_support(StateIndex{s}) == 0) continue;
    const auto b = decode_state(StateIndex{s}, scheme);
    const Key key{b.speed == speed_bin ? 0 : 1, std::abs(b.speed - origin.speed), std::abs(b.accel - origin.accel),
                  std::abs(b.grade - origin.grade), s};
    if (!best || key < *best) best = key;
  }
  if (!best) return std::nullopt;
  return StateIndex{std::get<4>(*best)};
}

TransitionAudit audit_transitions(const DriveCycle& cycle, const Sagstm& m) {
  TransitionAudit audit;
  for (std::size_t k = 1; k < cycle.states.size(); ++k) {
    const auto prev = cycle.states[k - 1], cur = cycle.states[k];
    if (prev.value == 0 || cur.value == 0) continue;
    if (std::find(cycle.recoveries.begin(), cycle.recoveries.end(), k) != cycle.recoveries.end()) continue;
    ++audit.checked;
    if (!m.edge(prev, cur)) audit.violations.push_back(k);
  }
  return audit;
}

PiesmcAgent::PiesmcAgent(const Sagstm& m, IdleModel idle, AgentConfig config)
    : m_(m),
      idle_(std::move(idle)),
      config_(config),
      tables_(AgentTables::seeded(m, config.w_es0)),
      ext_(extrinsic_rewards(m, config.tau)),
      zero_speed_bin_(bin_of(0.0, m.scheme().speed_edges())),
      eps_(config.eps0),
      w_es_(config.w_es0) {
  config_.validate();
  if (idle_.initial_states.empty()) throw input_error("PIESMC: idle model has no initial states");
  for (auto s : idle_.initial_states)
    if (s.value < 1 || s.value > m.n_states()) throw input_error("PIESMC: initial state outside the state space");
}

StateIndex PiesmcAgent::recover(StateIndex from) const {
  const auto target = nearest_live_state(m_, from, zero_speed_bin_);
  if (!target) throw invariant_error("PIESMC: transition matrix has no live state to recover to");
  logger()->info("PIESMC: dead end at state {}, recovering to state {}", from.value, target->value);
  return *target;
}

void PiesmcAgent::maybe_idle(DriveCycle& cycle, StateIndex s, std::size_t& since_idle) const {
  const std::size_t duration = idle_samples(idle_.mean_idle_duration);
  if (duration == 0) return;
  if (decode_state(s, m_.scheme()).speed != zero_speed_bin_) return;
  if (static_cast<double>(since_idle) < idle_.mean_idle_gap) return;
  cycle.push_idle(duration, state_kinematics(s, m_.scheme()).g);
  since_idle = 0;
}

EpisodeResult PiesmcAgent::run_episode(Rng& rng) {
  EpisodeResult result;
  auto& cycle = result.cycle;
  cycle.method = Method::piesmc;
  const auto target = static_cast<std::size_t>(std::ceil(config_.t_target));
  if (target == 0) return result;

  const auto& scheme = m_.scheme();
  StateIndex s = idle_.initial_states[rng.below(idle_.initial_states.size())];
  cycle.push(state_kinematics(s, scheme), s);
  // A cycle may open with an idle period, as recorded trips do.
  auto since_idle = static_cast<std::size_t>(std::ceil(idle_.mean_idle_gap));
  maybe_idle(cycle, s, since_idle);

  double reward_sum = 0.0;
  std::size_t q = 0;
  while (cycle.size() < target) {
    const auto e = select_edge(m_, tables_, s, eps_, rng);
    if (!e) {
      s = recover(s);
      cycle.recoveries.push_back(cycle.size());
      cycle.push(state_kinematics(s, scheme), s);
      ++since_idle;
      maybe_idle(cycle, s, since_idle);
      continue;
    }
    const StateIndex a = m_.edge_target(*e);
    const std::uint64_t visits = ++tables_.visits[*e];
    const double r = total_reward(ext_[*e], intrinsic_reward(visits, config_.beta), config_.lambda_ext,
                                  config_.lambda_int);
    result.trajectory.push_back({s, a, q});
    reward_sum += r;

    // Deterministic dynamics: the chosen action is the next state.
    const double v_next = expected_state_value(m_, tables_, a, eps_);
    tables_.q_es[*e] += config_.alpha_es * (r + config_.gamma_es * v_next - tables_.q_es[*e]);

    cycle.push(state_kinematics(a, scheme), a);
    ++since_idle;
    maybe_idle(cycle, a, since_idle);
    s = a;
    ++q;
  }
  if (!result.trajectory.empty()) result.mean_reward = reward_sum / static_cast<double>(result.trajectory.size());
  return result;
}

double PiesmcAgent::finish_episode(const Trajectory& trajectory, double cost_e) {
  const double r_mc = mc_reward(cost_e, config_.varsigma);
  mc_update(m_, tables_, trajectory, r_mc, config_);
  combine_q(tables_, w_es_);
  w_es_ = std::max(config_.w_es_min, w_es_ * config_.decay);
  eps_ = std::max(config_.eps_min, eps_ * config_.decay);
  return r_mc;
}

TrainingResult train_and_generate(const Sagstm& m, const IdleModel& idle, const KinematicFragments& fleet_ref,
                                  const AgentConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  Rng rng(config.seed);
  PiesmcAgent agent(m, idle, config);
  TrainingResult out;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t ep = 0; ep < config.n_candidates; ++ep) {
    const auto ep_start = clock::now();
    const double eps = agent.epsilon();
    const double w = agent.w_es();
    auto episode = agent.run_episode(rng);

    KinematicFragments frag;
    if (episode.cycle.empty()) {
      frag.v_bar_ei_defined = frag.a_bar_p_defined = frag.a_bar_n_defined = false;
    } else {
      frag = kinematic_fragments(episode.cycle.v, episode.cycle.a);
    }
    const double cost = fragment_cost(frag, fleet_ref).e_total;
    const double r_mc = agent.finish_episode(episode.trajectory, cost);
    episode.cycle.cost_e = cost;

    EpisodeReport rep;
    rep.index = ep;
    rep.cost_e = cost;
    rep.reward_mc = r_mc;
    rep.mean_reward_es = episode.mean_reward;
    rep.epsilon = eps;
    rep.w_es = w;
    rep.duration_s = episode.cycle.size();
    rep.steps = episode.trajectory.size();
    rep.recoveries = episode.cycle.recoveries.size();
    rep.runtime_s = std::chrono::duration<double>(clock::now() - ep_start).count();
    out.report.total_recoveries += rep.recoveries;
    out.report.episodes.push_back(rep);

    if (cost < best_cost) {
      best_cost = cost;
      out.best = std::move(episode.cycle);
      out.report.best_episode = ep;
    }
  }
  out.report.runtime_s = std::chrono::duration<double>(clock::now() - start).count();
  return out;
}

TrainingResult train_and_generate(const Sagstm& m, std::span<const TripRecord> trips, const AgentConfig& config) {
  const auto idle = build_idle_model(trips, m.scheme());
  const auto ref = fleet_reference(trips);
  return train_and_generate(m, idle, ref.mean, config);
}

}  // namespace cyclegen
