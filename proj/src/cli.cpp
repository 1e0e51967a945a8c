#include "cyclegen/cli.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cyclegen/baselines.hpp"
#include "cyclegen/log.hpp"
#include "cyclegen/rng.hpp"
#include "cyclegen/synthetic.hpp"

namespace cyclegen::cli {
namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

json fragments_std_json(const std::array<double, kNumFragments>& std_) {
  json j = json::object();
  for (std::size_t i = 0; i < kNumFragments; ++i) j[std::string(kFragmentNames[i])] = std_[i];
  return j;
}

KinematicFragments fragments_from_json(const json& j) {
  std::array<double, kNumFragments> x{};
  std::array<bool, kNumFragments> defined{};
  for (std::size_t i = 0; i < kNumFragments; ++i) {
    const auto& v = j.at(std::string(kFragmentNames[i]));
    defined[i] = !v.is_null();
    x[i] = defined[i] ? v.get<double>() : 0.0;
  }
  auto f = KinematicFragments::from_values(x);
  f.v_bar_ei_defined = defined[0];
  f.a_bar_p_defined = defined[2];
  f.a_bar_n_defined = defined[3];
  return f;
}

std::array<double, kNumFragments> std_from_json(const json& j) {
  std::array<double, kNumFragments> x{};
  for (std::size_t i = 0; i < kNumFragments; ++i) x[i] = j.at(std::string(kFragmentNames[i])).get<double>();
  return x;
}

// Reference fragments from fleet_summary.json when present, else recomputed.
FleetReference load_reference(const FleetPaths& fleet, const std::vector<TripRecord>& trips) {
  if (!fs::exists(fleet.summary())) return fleet_reference(trips);
  const auto summary = io::read_json(fleet.summary());
  try {
    FleetReference ref;
    ref.mean = fragments_from_json(summary.at("fragments").at("mean"));
    ref.std = std_from_json(summary.at("fragments").at("std"));
    ref.trips = summary.at("trip_count").get<std::size_t>();
    return ref;
  } catch (const json::exception& e) {
    throw input_error(fleet.summary().string() + ": " + e.what());
  }
}

std::vector<TripRecord> load_fleet(const FleetPaths& fleet) {
  std::error_code ec;
  if (!fs::is_directory(fleet.trips(), ec))
    throw input_error("no trips found: " + fleet.trips().string() +
                      " does not exist (run `cyclegen preprocess` or `cyclegen synth fleet` first)");
  return io::read_trip_dir(fleet.trips());
}

json scheme_summary(const BinningScheme& s) {
  auto j = io::to_json(s);
  j["n_states"] = s.n_states();
  return j;
}

json agent_json(const AgentConfig& c) {
  return json{{"gamma_es", c.gamma_es}, {"gamma_mc", c.gamma_mc},     {"alpha_es", c.alpha_es},
              {"alpha_mc", c.alpha_mc}, {"tau", c.tau},               {"beta", c.beta},
              {"lambda_ext", c.lambda_ext}, {"lambda_int", c.lambda_int}, {"varsigma", c.varsigma},
              {"eps0", c.eps0},         {"eps_min", c.eps_min},       {"decay", c.decay},
              {"w_es0", c.w_es0},       {"w_es_min", c.w_es_min}};
}

json idle_json(const IdleModel& idle) {
  return json{{"mean_idle_duration_s", idle.mean_idle_duration}, {"mean_idle_gap_s", idle.mean_idle_gap}};
}

std::string plot_number(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.6g", x);
  return buf.data();
}

void write_histogram(const fs::path& path, std::span<const double> x, const std::vector<double>& edges) {
  std::vector<double> counts(edges.size() - 1, 0.0);
  for (double xi : x) counts[static_cast<std::size_t>(bin_of(xi, edges) - 1)] += 1.0;
  std::ostringstream os;
  os << "lo,hi,fraction\n";
  for (std::size_t b = 0; b < counts.size(); ++b)
    os << io::format_double(edges[b]) << ',' << io::format_double(edges[b + 1]) << ','
       << plot_number(x.empty() ? 0.0 : counts[b] / static_cast<double>(x.size())) << '\n';
  io::write_text(path, os.str());
}

void write_scalogram(const fs::path& dir, const std::string& stem, const Scalogram& s) {
  std::ostringstream os;
  for (std::size_t r = 0; r < s.n_scales(); ++r) {
    for (std::size_t c = 0; c < s.n_times(); ++c) {
      if (c) os << ',';
      os << plot_number(s.magnitude(r, c));
    }
    os << '\n';
  }
  io::write_text(dir / (stem + "_scalogram.csv"), os.str());
  io::write_json(dir / (stem + "_scalogram_axes.json"),
                 json{{"schema_version", io::kSchemaVersion},
                      {"rows", "scales"},
                      {"columns", "times"},
                      {"scales", s.scales},
                      {"frequencies_hz", s.frequencies},
                      {"times_s", s.times}});
}

double hf_fraction(std::span<const double> x, double split) {
  if (x.empty()) return 0.0;
  const auto scales = log_scales();
  return wavelet_hf_fraction(cwt(x, scales), split);
}

std::vector<double> vsp_edges() { return BinningScheme::uniform_edges(-30.0, 30.0, 2.0); }

double median(std::vector<double> x) {
  if (x.empty()) return 0.0;
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

struct Pooled {
  std::vector<double> v, a, g, vsp;
};

Pooled pool(const std::vector<TripRecord>& trips) {
  Pooled p;
  for (const auto& t : trips) {
    p.v.insert(p.v.end(), t.v.begin(), t.v.end());
    p.a.insert(p.a.end(), t.a.begin(), t.a.end());
    p.g.insert(p.g.end(), t.g_f.begin(), t.g_f.end());
    const auto s = vsp_series(t.v, t.a, t.g_f);
    p.vsp.insert(p.vsp.end(), s.begin(), s.end());
  }
  return p;
}

json distributions_json(std::span<const double> v, std::span<const double> a, std::span<const double> g) {
  return json{{"speed", io::to_json(distribution_stats(v))},
              {"accel", io::to_json(distribution_stats(a))},
              {"grade", io::to_json(distribution_stats(g))}};
}

json accuracy_json(const KinematicFragments& gen, const FleetReference& ref) {
  json j = json::object();
  const auto x = gen.values();
  const auto m = ref.mean.values();
  for (std::size_t i = 0; i < kNumFragments; ++i)
    j[std::string(kFragmentNames[i])] = accuracy_level(x[i], m[i], ref.std[i]);
  return j;
}

// Scheme recorded in a generate report next to a cycle CSV, if any.
std::optional<BinningScheme> sibling_scheme(const fs::path& cycle_csv) {
  std::string stem = cycle_csv.stem().string();
  const std::string suffix = "_cycle";
  if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0)
    stem.resize(stem.size() - suffix.size());
  const auto report = cycle_csv.parent_path() / (stem + "_report.json");
  if (!fs::exists(report)) return std::nullopt;
  const auto j = io::read_json(report);
  if (!j.contains("scheme")) return std::nullopt;
  return io::scheme_from_json(j.at("scheme"));
}

template <class T>
T setting(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw input_error("config key '" + key + "' has the wrong type");
  }
}

json parse_scalar(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  std::istringstream is(text);
  double x;
  if (is >> x && (is >> std::ws).eof()) {
    if (std::floor(x) == x && std::abs(x) < 9e15 && text.find_first_of(".eE") == std::string::npos)
      return static_cast<std::int64_t>(x);
    return x;
  }
  return text;
}

std::string trim_copy(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return 2;
    case ErrorKind::validation: return 3;
    case ErrorKind::invariant: return 4;
  }
  return 4;
}

BinningScheme parse_bins(std::string_view text) {
  double w[3] = {0.5, 0.2, 0.3};
  const char* names[3] = {"speed", "accel", "grade"};
  std::string s(text);
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim_copy(item);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw input_error("--bins: expected name=width, got '" + item + "'");
    const auto name = trim_copy(item.substr(0, eq));
    const auto value = parse_scalar(trim_copy(item.substr(eq + 1)));
    if (!value.is_number()) throw input_error("--bins: width for " + name + " is not a number");
    int slot = -1;
    for (int k = 0; k < 3; ++k)
      if (name == names[k]) slot = k;
    if (slot < 0) throw input_error("--bins: unknown dimension '" + name + "' (speed, accel, grade)");
    w[slot] = value.get<double>();
    if (!(w[slot] > 0.0)) throw input_error("--bins: widths must be positive");
  }
  return BinningScheme::with_widths(w[0], w[1], w[2]);
}

json read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw input_error(path.string() + ": " + e.what());
    }
  }
  json out = json::object();
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim_copy(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw input_error(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    out[trim_copy(line.substr(0, eq))] = parse_scalar(trim_copy(line.substr(eq + 1)));
  }
  return out;
}

void apply_config(RunConfig& cfg, const json& settings) {
  if (!settings.is_object()) throw input_error("config must be an object of settings");
  auto& a = cfg.agent;
  auto& p = cfg.preprocess;
  for (const auto& [key, v] : settings.items()) {
    auto num = [&] { return setting<double>(v, key); };
    if (key == "seed") {
      a.seed = setting<std::uint64_t>(v, key);
      cfg.seed_set = true;
    } else if (key == "method") {
      cfg.method = parse_method(setting<std::string>(v, key));
    } else if (key == "t_target") {
      a.t_target = num();
    } else if (key == "candidates" || key == "n_candidates") {
      a.n_candidates = setting<std::size_t>(v, key);
    } else if (key == "bins") {
      cfg.scheme = parse_bins(setting<std::string>(v, key));
    } else if (key == "scheme") {
      cfg.scheme = io::scheme_from_json(v);
    } else if (key == "gamma_es") {
      a.gamma_es = num();
    } else if (key == "gamma_mc") {
      a.gamma_mc = num();
    } else if (key == "alpha_es") {
      a.alpha_es = num();
    } else if (key == "alpha_mc") {
      a.alpha_mc = num();
    } else if (key == "tau") {
      a.tau = num();
    } else if (key == "beta") {
      a.beta = num();
    } else if (key == "lambda_ext") {
      a.lambda_ext = num();
    } else if (key == "lambda_int") {
      a.lambda_int = num();
    } else if (key == "varsigma") {
      a.varsigma = num();
    } else if (key == "eps0") {
      a.eps0 = num();
    } else if (key == "eps_min") {
      a.eps_min = num();
    } else if (key == "decay") {
      a.decay = num();
    } else if (key == "w_es0") {
      a.w_es0 = num();
    } else if (key == "w_es_min") {
      a.w_es_min = num();
    } else if (key == "mtb_clusters") {
      cfg.mtb_clusters = setting<std::size_t>(v, key);
    } else if (key == "mcb_sampler") {
      const auto s = setting<std::string>(v, key);
      if (s != "dense" && s != "sparse") throw input_error("mcb_sampler must be dense or sparse");
      cfg.mcb_dense_rows = s == "dense";
    } else if (key == "hf_split_hz") {
      cfg.hf_split = num();
    } else if (key == "cache_dir") {
      cfg.cache_dir = setting<std::string>(v, key);
    } else if (key == "speed_min") {
      p.speed_bounds.min = num();
    } else if (key == "speed_max") {
      p.speed_bounds.max = num();
    } else if (key == "max_gap_s") {
      p.max_gap_s = num();
    } else if (key == "max_gps_speed") {
      p.max_gps_speed = num();
    } else if (key == "sg_window") {
      p.sg_window = setting<int>(v, key);
    } else if (key == "sg_order") {
      p.sg_order = setting<int>(v, key);
    } else if (key == "grade_bound") {
      p.grade_bound = num();
    } else if (key == "min_grade_distance") {
      p.min_grade_distance = num();
    } else if (key == "schema_version") {
      // tolerated in saved configs
    } else {
      throw input_error("unknown config key '" + key + "'");
    }
  }
}

json fleet_summary(const std::vector<TripRecord>& trips, const std::vector<std::string>& errors) {
  if (trips.empty()) throw input_error("no trips found");
  const auto ref = fleet_reference(trips);
  json list = json::array();
  std::vector<double> durations;
  for (const auto& t : trips) {
    durations.push_back(static_cast<double>(t.size()));
    list.push_back(json{{"id", t.trip_id}, {"file", t.trip_id + ".csv"}, {"duration_s", t.size()}});
  }
  const auto d = distribution_stats(durations);
  const auto idle = build_idle_model(trips, BinningScheme::standard());
  double total = 0.0;
  for (double x : durations) total += x;
  return json{{"schema_version", io::kSchemaVersion},
              {"trip_count", trips.size()},
              {"duration_s", json{{"total", total}, {"mean", d.mean}, {"min", d.min}, {"max", d.max}}},
              {"fragments", json{{"mean", io::to_json(ref.mean)}, {"std", fragments_std_json(ref.std)}}},
              {"idle", idle_json(idle)},
              {"trips", std::move(list)},
              {"errors", errors}};
}

PreprocessResult cmd_preprocess(const fs::path& input_dir, const fs::path& out_dir, const PreprocessConfig& config) {
  const auto files = io::list_csv(input_dir);
  if (files.empty()) throw input_error("no trips found in " + input_dir.string());

  PreprocessResult result;
  std::vector<TripRecord> cleaned;
  for (const auto& f : files) {
    try {
      const auto raw = io::read_raw_trip(f);
      auto parts = preprocess_trip(f.stem().string(), raw, config);
      if (parts.empty()) throw input_error("no segment of at least 3 s survived cleaning");
      for (auto& p : parts) cleaned.push_back(std::move(p));
    } catch (const Error& e) {
      result.errors.push_back(f.filename().string() + ": " + e.what());
      logger()->warn("skipping {}: {}", f.filename().string(), e.what());
    }
  }
  if (cleaned.empty())
    throw input_error("all " + std::to_string(files.size()) + " trip files failed to preprocess; first error: " +
                      result.errors.front());

  const FleetPaths fleet{out_dir};
  fs::create_directories(fleet.trips());
  for (const auto& old : io::list_csv(fleet.trips())) fs::remove(old);
  for (const auto& t : cleaned) io::write_trip(fleet.trips() / (t.trip_id + ".csv"), t);
  result.trips_written = cleaned.size();

  // summarise what a reader of the directory will see, i.e. the CSV round trip
  result.summary = fleet_summary(io::read_trip_dir(fleet.trips()), result.errors);
  io::write_json(fleet.summary(), result.summary);
  return result;
}

std::string fleet_key(const fs::path& fleet_dir, const BinningScheme& scheme) {
  io::Fnv1a h;
  for (const auto& f : io::list_csv(FleetPaths{fleet_dir}.trips())) {
    h.update(f.filename().string());
    h.update(std::string_view("\0", 1));
    h.update_file(f);
  }
  h.update(io::to_json(scheme).dump());
  return h.hex();
}

fs::path matrix_cache_path(const fs::path& fleet_dir, const BinningScheme& scheme, const fs::path& cache_dir) {
  const fs::path dir = cache_dir.empty() ? FleetPaths{fleet_dir}.cache() : cache_dir;
  return dir / ("sagstm-" + fleet_key(fleet_dir, scheme) + ".json");
}

fs::path cmd_build_matrix(const fs::path& fleet_dir, const BinningScheme& scheme, const fs::path& cache_dir) {
  const auto trips = load_fleet(FleetPaths{fleet_dir});
  const auto m = build_sagstm(trips, scheme);
  const auto path = matrix_cache_path(fleet_dir, scheme, cache_dir);
  io::write_json(path, io::to_json(m));
  return path;
}

std::size_t cmd_synth_fleet(const fs::path& out_dir, const synthetic::OracleFleetOptions& options) {
  const auto trips = synthetic::oracle_fleet(options);
  const FleetPaths fleet{out_dir};
  fs::create_directories(fleet.trips());
  for (const auto& old : io::list_csv(fleet.trips())) fs::remove(old);
  for (const auto& t : trips) io::write_trip(fleet.trips() / (t.trip_id + ".csv"), t);
  io::write_json(fleet.summary(), fleet_summary(io::read_trip_dir(fleet.trips())));
  io::write_json(fleet.root / "oracle_config.json",
                 json{{"schema_version", io::kSchemaVersion}, {"scheme", io::to_json(synthetic::oracle_scheme())}});
  return trips.size();
}

GenerateResult cmd_generate(const fs::path& fleet_dir, const fs::path& out_dir, const RunConfig& config) {
  if (!config.seed_set) throw input_error("generate needs a seed: pass --seed or set seed in --config");
  config.agent.validate();
  const auto total_start = clock_type::now();
  const FleetPaths fleet{fleet_dir};
  const auto trips = load_fleet(fleet);
  const auto ref = load_reference(fleet, trips);
  const auto& scheme = config.scheme;
  const auto idle = build_idle_model(trips, scheme);
  const auto method = config.method;
  const auto& agent = config.agent;

  std::optional<Sagstm> matrix;
  if (method != Method::mtb) {
    const auto path = matrix_cache_path(fleet_dir, scheme, config.cache_dir);
    if (!fs::exists(path))
      throw input_error("no cached transition matrix for this fleet and binning (" + path.string() +
                        "); run `cyclegen build-matrix " + fleet_dir.string() +
                        "` with the same --bins/--config first");
    matrix.emplace(io::sagstm_from_json(io::read_json(path)));
    if (!(matrix->scheme() == scheme))
      throw validation_error("cached transition matrix " + path.string() + " uses a different binning scheme");
  }

  json report = {{"schema_version", io::kSchemaVersion},
                 {"method", std::string(to_string(method))},
                 {"seed", agent.seed},
                 {"t_target_s", agent.t_target},
                 {"n_candidates", agent.n_candidates},
                 {"scheme", scheme_summary(scheme)},
                 {"fleet", json{{"trips", trips.size()}, {"key", fleet_key(fleet_dir, scheme)}}},
                 {"idle_model", idle_json(idle)}};
  json timing = json::object();

  GenerateResult out;
  const auto gen_start = clock_type::now();
  switch (method) {
    case Method::piesmc: {
      auto result = train_and_generate(*matrix, idle, ref.mean, agent);
      timing["generation_s"] = seconds_since(gen_start);
      report["agent"] = agent_json(agent);
      json episodes = json::array();
      json episode_runtime = json::array();
      double running = std::numeric_limits<double>::infinity();
      for (const auto& e : result.report.episodes) {
        running = std::min(running, e.cost_e);
        episodes.push_back(json{{"index", e.index},
                                {"cost_e", e.cost_e},
                                {"best_cost_e", running},
                                {"reward_mc", e.reward_mc},
                                {"mean_reward_es", e.mean_reward_es},
                                {"epsilon", e.epsilon},
                                {"w_es", e.w_es},
                                {"duration_s", e.duration_s},
                                {"steps", e.steps},
                                {"recoveries", e.recoveries}});
        episode_runtime.push_back(e.runtime_s);
      }
      report["episodes"] = std::move(episodes);
      report["best_episode"] = result.report.best_episode;
      timing["episode_runtime_s"] = std::move(episode_runtime);
      out.cycle = std::move(result.best);
      break;
    }
    case Method::mtb: {
      Rng rng(agent.seed);
      const auto micro = segment_microtrips(trips);
      MtbOptions opts;
      opts.t_target = agent.t_target;
      opts.clusters = config.mtb_clusters;
      out.cycle = mtb_generate(micro, ref.mean, idle, opts, rng);
      timing["generation_s"] = seconds_since(gen_start);
      report["microtrips"] = micro.size();
      report["clusters"] = config.mtb_clusters;
      break;
    }
    case Method::mcb: {
      Rng rng(agent.seed);
      const auto fleet_sagfd = sagfd(trips, scheme);
      McbOptions opts;
      opts.t_target = agent.t_target;
      opts.n_candidates = agent.n_candidates;
      opts.dense_rows = config.mcb_dense_rows;
      auto result = mcb_generate(*matrix, idle, fleet_sagfd, ref.mean, opts, rng);
      timing["generation_s"] = seconds_since(gen_start);
      report["sampler"] = config.mcb_dense_rows ? "dense" : "sparse";
      report["candidate_sagfd_errors"] = result.candidate_errors;
      report["best_candidate"] = result.best_candidate;
      report["restarts"] = result.restarts;
      out.cycle = std::move(result.best);
      break;
    }
  }

  const auto& cycle = out.cycle;
  const auto frag = kinematic_fragments(cycle.v, cycle.a);
  const auto cost = fragment_cost(frag, ref.mean);
  fs::create_directories(out_dir);
  const std::string name(to_string(method));
  out.cycle_csv = out_dir / (name + "_cycle.csv");
  out.report_json = out_dir / (name + "_report.json");

  report["cycle"] = json{{"file", out.cycle_csv.filename().string()},
                         {"samples", cycle.size()},
                         {"duration_s", cycle.size()},
                         {"fragments", io::to_json(frag)},
                         {"cost", io::to_json(cost)}};
  report["recoveries"] = cycle.recoveries;
  if (matrix) {
    const auto audit = audit_transitions(cycle, *matrix);
    report["feasibility"] = json{{"checked", audit.checked}, {"violations", audit.violations}};
    if (!audit.violations.empty())
      throw invariant_error("generated cycle contains " + std::to_string(audit.violations.size()) +
                            " transitions absent from the transition matrix");
  }

  io::write_cycle(out.cycle_csv, cycle);
  timing["total_s"] = seconds_since(total_start);
  report["timing"] = std::move(timing);
  io::write_json(out.report_json, report);
  out.report = std::move(report);
  return out;
}

json cmd_analyze(const fs::path& cycle_csv, const std::optional<fs::path>& fleet_dir, const fs::path& out_dir,
                 const RunConfig& config) {
  const auto cycle = io::read_cycle(cycle_csv);
  const std::string stem = cycle_csv.stem().string();
  const auto frag = kinematic_fragments(cycle.v, cycle.a);
  const auto power = vsp_series(cycle.v, cycle.a, cycle.g);
  const auto scal = cwt(cycle.g, log_scales());

  json j = {{"schema_version", io::kSchemaVersion},
            {"cycle", cycle_csv.filename().string()},
            {"samples", cycle.size()},
            {"fragments", io::to_json(frag)},
            {"distributions", distributions_json(cycle.v, cycle.a, cycle.g)},
            {"vsp", io::to_json(distribution_stats(power))},
            {"hf_split_hz", config.hf_split},
            {"hf_fraction", json{{"grade", wavelet_hf_fraction(scal, config.hf_split)},
                                 {"speed", hf_fraction(cycle.v, config.hf_split)}}}};
  if (fleet_dir) {
    const FleetPaths fleet{*fleet_dir};
    const auto trips = load_fleet(fleet);
    const auto ref = load_reference(fleet, trips);
    j["cost"] = io::to_json(fragment_cost(frag, ref.mean));
    j["accuracy_levels"] = accuracy_json(frag, ref);
  }

  fs::create_directories(out_dir);
  std::ostringstream os;
  os << "t,vsp\n";
  for (std::size_t k = 0; k < power.size(); ++k) os << io::format_double(cycle.t[k]) << ',' << plot_number(power[k]) << '\n';
  io::write_text(out_dir / (stem + "_vsp.csv"), os.str());
  write_scalogram(out_dir, stem + "_grade", scal);
  io::write_json(out_dir / (stem + "_analysis.json"), j);
  return j;
}

CycleInput parse_cycle_arg(std::string_view arg) {
  const auto eq = arg.find('=');
  const auto sep = arg.find_first_of("/\\");
  if (eq != std::string_view::npos && eq > 0 && (sep == std::string_view::npos || eq < sep))
    return {std::string(arg.substr(0, eq)), fs::path(std::string(arg.substr(eq + 1)))};
  fs::path path{std::string(arg)};
  std::string label = path.stem().string();
  const std::string suffix = "_cycle";
  if (label.size() > suffix.size() && label.compare(label.size() - suffix.size(), suffix.size(), suffix) == 0)
    label.resize(label.size() - suffix.size());
  return {label, path};
}

json cmd_compare(const fs::path& fleet_dir, const std::vector<CycleInput>& cycles, const fs::path& out_dir,
                 const RunConfig& config) {
  if (cycles.empty()) throw input_error("compare needs at least one cycle");
  const FleetPaths fleet{fleet_dir};
  const auto trips = load_fleet(fleet);
  const auto ref = load_reference(fleet, trips);
  const auto& scheme = config.scheme;
  const auto fleet_sagfd = sagfd(trips, scheme);
  const auto pooled = pool(trips);

  std::vector<double> trip_hf;
  for (const auto& t : trips) trip_hf.push_back(hf_fraction(t.g_f, config.hf_split));

  fs::create_directories(out_dir);
  auto histograms = [&](const std::string& label, std::span<const double> v, std::span<const double> a,
                        std::span<const double> g, std::span<const double> p) {
    write_histogram(out_dir / (label + "_hist_speed.csv"), v, scheme.speed_edges());
    write_histogram(out_dir / (label + "_hist_accel.csv"), a, scheme.accel_edges());
    write_histogram(out_dir / (label + "_hist_grade.csv"), g, scheme.grade_edges());
    write_histogram(out_dir / (label + "_hist_vsp.csv"), p, vsp_edges());
  };
  histograms("fleet", pooled.v, pooled.a, pooled.g, pooled.vsp);

  struct Row {
    CycleInput in;
    DriveCycle cycle;
    KinematicFragments frag;
    FragmentCost cost;
  };
  std::vector<Row> rows;
  for (const auto& c : cycles) {
    if (auto s = sibling_scheme(c.path); s && !(*s == scheme))
      throw validation_error("cycle " + c.path.string() +
                             " was generated with a different binning scheme than the one being compared");
    Row r{c, io::read_cycle(c.path), {}, {}};
    r.frag = kinematic_fragments(r.cycle.v, r.cycle.a);
    r.cost = fragment_cost(r.frag, ref.mean);
    rows.push_back(std::move(r));
  }
  std::optional<double> e_mtb;
  for (const auto& r : rows)
    if (r.in.label == "mtb") e_mtb = r.cost.e_total;

  json methods = json::array();
  for (const auto& r : rows) {
    const auto power = vsp_series(r.cycle.v, r.cycle.a, r.cycle.g);
    const auto scal = cwt(r.cycle.g, log_scales());
    std::optional<double> imp;
    if (e_mtb) imp = error_improvement(*e_mtb, r.cost.e_total);
    methods.push_back(json{{"label", r.in.label},
                           {"file", r.in.path.filename().string()},
                           {"samples", r.cycle.size()},
                           {"fragments", io::to_json(r.frag)},
                           {"cost", io::to_json(r.cost)},
                           {"improvement_vs_mtb_pct", imp ? json(*imp) : json(nullptr)},
                           {"accuracy_levels", accuracy_json(r.frag, ref)},
                           {"distributions", distributions_json(r.cycle.v, r.cycle.a, r.cycle.g)},
                           {"vsp", io::to_json(distribution_stats(power))},
                           {"sagfd_error", sagfd_error(sagfd(r.cycle, scheme), fleet_sagfd)},
                           {"hf_fraction", json{{"grade", wavelet_hf_fraction(scal, config.hf_split)},
                                                {"speed", hf_fraction(r.cycle.v, config.hf_split)}}}});
    histograms(r.in.label, r.cycle.v, r.cycle.a, r.cycle.g, power);
    write_scalogram(out_dir, r.in.label + "_grade", scal);
  }

  json j = {{"schema_version", io::kSchemaVersion},
            {"scheme", scheme_summary(scheme)},
            {"hf_split_hz", config.hf_split},
            {"reference", json{{"trips", trips.size()},
                               {"fragments", json{{"mean", io::to_json(ref.mean)}, {"std", fragments_std_json(ref.std)}}},
                               {"distributions", distributions_json(pooled.v, pooled.a, pooled.g)},
                               {"vsp", io::to_json(distribution_stats(pooled.vsp))},
                               {"hf_fraction_grade_median", median(trip_hf)}}},
            {"baseline", e_mtb ? json("mtb") : json(nullptr)},
            {"methods", std::move(methods)}};
  io::write_json(out_dir / "comparison.json", j);
  return j;
}

GradeErrorReport cmd_validate_grade(const fs::path& calc_csv, const fs::path& ref_csv,
                                    const std::optional<fs::path>& out_json) {
  const auto calc = io::read_series(calc_csv);
  const auto ref = io::read_series(ref_csv);
  if (calc.size() != ref.size())
    throw validation_error("grade series are misaligned: " + std::to_string(calc.size()) + " vs " +
                           std::to_string(ref.size()) + " samples");
  const auto report = grade_error_metrics(calc, ref);
  if (out_json) io::write_json(*out_json, io::to_json(report));
  return report;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Representative drive-cycle construction from fleet trip logs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cyclegen 0.1.0");

  std::string config_path, bins, method_name, out_dir = ".", cache_dir;
  std::uint64_t seed = 0;
  double t_target = 0.0;
  std::size_t candidates = 0;

  struct Common {
    CLI::Option* config = nullptr;
    CLI::Option* seed = nullptr;
    CLI::Option* method = nullptr;
    CLI::Option* bins = nullptr;
    CLI::Option* t_target = nullptr;
    CLI::Option* candidates = nullptr;
    CLI::Option* cache = nullptr;
  };
  auto add_common = [&](CLI::App* sub, bool generation) {
    Common c;
    c.config = sub->add_option("--config", config_path, "JSON or key=value settings file");
    c.bins = sub->add_option("--bins", bins, "bin widths, e.g. speed=0.5,accel=0.2,grade=0.3");
    c.cache = sub->add_option("--cache-dir", cache_dir, "transition matrix cache (default <fleet>/cache)");
    if (generation) {
      c.seed = sub->add_option("--seed", seed, "random seed");
      c.method = sub->add_option("--method", method_name, "piesmc, mtb or mcb");
      c.t_target = sub->add_option("--t-target", t_target, "target cycle duration in seconds");
      c.candidates = sub->add_option("--candidates", candidates, "episodes (PIESMC) or candidates (MCB)");
    }
    return c;
  };
  auto make_config = [&](const Common& c) {
    RunConfig cfg;
    if (c.config && c.config->count()) apply_config(cfg, read_config_file(config_path));
    if (c.bins && c.bins->count()) cfg.scheme = parse_bins(bins);
    if (c.cache && c.cache->count()) cfg.cache_dir = cache_dir;
    if (c.seed && c.seed->count()) {
      cfg.agent.seed = seed;
      cfg.seed_set = true;
    }
    if (c.method && c.method->count()) cfg.method = parse_method(method_name);
    if (c.t_target && c.t_target->count()) cfg.agent.t_target = t_target;
    if (c.candidates && c.candidates->count()) cfg.agent.n_candidates = candidates;
    return cfg;
  };

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "clean raw trip CSVs into a fleet directory");
  std::string pre_in;
  pre->add_option("input_dir", pre_in, "directory of raw trip CSVs (t,speed,lat,lon,alt)")->required();
  pre->add_option("--out", out_dir, "fleet directory to write")->required();
  const auto pre_common = add_common(pre, false);

  // build-matrix
  auto* bm = app.add_subcommand("build-matrix", "build and cache the transition matrix of a fleet");
  std::string fleet_dir;
  bm->add_option("fleet_dir", fleet_dir, "preprocessed fleet directory")->required();
  const auto bm_common = add_common(bm, false);

  // generate
  auto* gen = app.add_subcommand("generate", "construct a drive cycle");
  gen->add_option("fleet_dir", fleet_dir, "preprocessed fleet directory")->required();
  gen->add_option("--out", out_dir, "output directory");
  const auto gen_common = add_common(gen, true);

  // analyze
  auto* an = app.add_subcommand("analyze", "fragments, VSP and wavelet statistics of a cycle");
  std::string cycle_path, an_fleet;
  an->add_option("cycle", cycle_path, "cycle CSV (t,v,a,g)")->required();
  an->add_option("--fleet", an_fleet, "fleet directory for cost and accuracy levels");
  an->add_option("--out", out_dir, "output directory");
  const auto an_common = add_common(an, false);

  // compare
  auto* cmp = app.add_subcommand("compare", "compare cycles against a fleet");
  std::vector<std::string> cycle_args;
  cmp->add_option("fleet_dir", fleet_dir, "preprocessed fleet directory")->required();
  cmp->add_option("cycles", cycle_args, "cycle CSVs, optionally label=path")->required();
  cmp->add_option("--out", out_dir, "output directory");
  const auto cmp_common = add_common(cmp, false);

  // validate-grade
  auto* vg = app.add_subcommand("validate-grade", "grade error between a computed and a reference series");
  std::string calc_path, ref_path, vg_out;
  vg->add_option("calc", calc_path, "computed grade CSV (last column)")->required();
  vg->add_option("ref", ref_path, "reference grade CSV (last column)")->required();
  vg->add_option("--out", vg_out, "write the report JSON here");

  // synth
  auto* syn = app.add_subcommand("synth", "write synthetic data sets");
  syn->require_subcommand(1);
  auto* syn_fleet = syn->add_subcommand("fleet", "oracle fleet of cleaned trips from a known Markov chain");
  auto* syn_raw = syn->add_subcommand("raw", "raw GPS-style trip logs with known grade");
  std::size_t syn_trips = 0;
  std::uint64_t syn_seed = 1;
  double syn_rate = 1.0, syn_duration = 900.0, syn_noise = 1.0;
  syn_fleet->add_option("--out", out_dir, "fleet directory to write")->required();
  syn_fleet->add_option("--trips", syn_trips, "number of trips (default 100)");
  syn_fleet->add_option("--seed", syn_seed, "random seed");
  syn_raw->add_option("--out", out_dir, "directory to write")->required();
  syn_raw->add_option("--trips", syn_trips, "number of trips (default 3)");
  syn_raw->add_option("--seed", syn_seed, "random seed");
  syn_raw->add_option("--rate", syn_rate, "sampling rate in Hz");
  syn_raw->add_option("--duration", syn_duration, "trip duration in seconds");
  syn_raw->add_option("--alt-noise", syn_noise, "altitude noise standard deviation in metres");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (pre->parsed()) {
      auto cfg = make_config(pre_common);
      const auto r = cmd_preprocess(pre_in, out_dir, cfg.preprocess);
      for (const auto& e : r.errors) std::cerr << "warning: " << e << '\n';
      std::cout << "wrote " << r.trips_written << " trips to " << FleetPaths{out_dir}.trips().string() << '\n';
    } else if (bm->parsed()) {
      auto cfg = make_config(bm_common);
      const auto path = cmd_build_matrix(fleet_dir, cfg.scheme, cfg.cache_dir);
      std::cout << path.string() << '\n';
    } else if (gen->parsed()) {
      auto cfg = make_config(gen_common);
      const auto r = cmd_generate(fleet_dir, out_dir, cfg);
      std::cout << r.cycle_csv.string() << '\n' << r.report_json.string() << '\n';
    } else if (an->parsed()) {
      auto cfg = make_config(an_common);
      std::optional<fs::path> f;
      if (!an_fleet.empty()) f = an_fleet;
      print_json(cmd_analyze(cycle_path, f, out_dir, cfg));
    } else if (cmp->parsed()) {
      auto cfg = make_config(cmp_common);
      std::vector<CycleInput> inputs;
      for (const auto& a : cycle_args) inputs.push_back(parse_cycle_arg(a));
      cmd_compare(fleet_dir, inputs, out_dir, cfg);
      std::cout << (fs::path(out_dir) / "comparison.json").string() << '\n';
    } else if (vg->parsed()) {
      std::optional<fs::path> o;
      if (!vg_out.empty()) o = vg_out;
      print_json(io::to_json(cmd_validate_grade(calc_path, ref_path, o)));
    } else if (syn_fleet->parsed()) {
      synthetic::OracleFleetOptions o;
      if (syn_trips) o.trips = syn_trips;
      o.seed = syn_seed;
      const auto n = cmd_synth_fleet(out_dir, o);
      std::cout << "wrote " << n << " trips to " << FleetPaths{out_dir}.trips().string() << '\n';
    } else if (syn_raw->parsed()) {
      const std::size_t n = syn_trips ? syn_trips : 3;
      const fs::path root{out_dir};
      for (std::size_t k = 0; k < n; ++k) {
        synthetic::RawTripOptions o;
        o.seed = syn_seed + k;
        o.rate_hz = syn_rate;
        o.duration_s = syn_duration;
        o.altitude_noise_m = syn_noise;
        const auto trip = synthetic::raw_trip(o);
        const std::string id = "trip_" + std::to_string(k + 1);
        io::write_raw_trip(root / "raw" / (id + ".csv"), trip.samples);
        // truth at 1 Hz, block-averaged like the cleaned output
        const auto factor = static_cast<std::size_t>(std::llround(std::max(1.0, syn_rate)));
        const auto truth = resample_mean(trip.true_grade, factor);
        std::ostringstream os;
        os << "grade\n";
        for (double g : truth) os << io::format_double(g) << '\n';
        io::write_text(root / "truth" / (id + "_grade.csv"), os.str());
      }
      std::cout << "wrote " << n << " raw trips to " << (root / "raw").string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace cyclegen::cli
