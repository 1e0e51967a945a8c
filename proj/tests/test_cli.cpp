#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cyclegen/cli.hpp"
#include "cyclegen/io.hpp"
#include "cyclegen/synthetic.hpp"

using namespace cyclegen;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cyclegen_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "cyclegen");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

cli::RunConfig small_config(Method m, std::uint64_t seed) {
  cli::RunConfig cfg;
  cfg.scheme = synthetic::oracle_scheme();
  cfg.method = m;
  cfg.agent.seed = seed;
  cfg.seed_set = true;
  cfg.agent.t_target = 600;
  cfg.agent.n_candidates = 5;
  return cfg;
}

fs::path small_fleet(const fs::path& root) {
  synthetic::OracleFleetOptions o;
  o.trips = 10;
  o.seed = 4;
  cli::cmd_synth_fleet(root / "fleet", o);
  cli::cmd_build_matrix(root / "fleet", synthetic::oracle_scheme());
  return root / "fleet";
}

}  // namespace

TEST_CASE("format_double reads back exactly") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int k = 0; k < 2000; ++k) {
    const double x = k % 3 == 0 ? u(gen) * 1e-9 : u(gen);
    CHECK(std::stod(io::format_double(x)) == x);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(2.0) == "2");
}

TEST_CASE("trip and cycle files round trip") {
  TempDir dir("io");
  TripRecord t{"trip_a", {0, 1, 2}, {0.0, 1.25, 2.5}, {1.25, 1.25, 1.25}, {0.1, -0.2, 3.0 / 7.0}};
  io::write_trip(dir.path / "trip_a.csv", t);
  const auto back = io::read_trip(dir.path / "trip_a.csv");
  CHECK(back.trip_id == "trip_a");
  CHECK(back.v == t.v);
  CHECK(back.g_f == t.g_f);

  DriveCycle c;
  c.push(0, 0, 1.0 / 3.0);
  c.push(1.5, 1.5, -2);
  io::write_cycle(dir.path / "c.csv", c);
  const auto cb = io::read_cycle(dir.path / "c.csv");
  CHECK(cb.v == c.v);
  CHECK(cb.g == c.g);
  CHECK(cb.t == c.t);
}

TEST_CASE("transition matrix JSON round trip") {
  const auto sc = synthetic::oracle_scheme();
  synthetic::OracleFleetOptions o;
  o.trips = 5;
  const auto trips = synthetic::oracle_fleet(o);
  const auto m = build_sagstm(trips, sc);
  const auto back = io::sagstm_from_json(io::to_json(m));
  CHECK(back.scheme() == sc);
  CHECK(back.nnz() == m.nnz());
  for (std::uint32_t s = 1; s <= sc.n_states(); ++s) {
    const auto a = m.targets(StateIndex{s}), b = back.targets(StateIndex{s});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k] == b[k]);
      CHECK(m.probs(StateIndex{s})[k] == back.probs(StateIndex{s})[k]);
    }
  }
}

TEST_CASE("config parsing") {
  cli::RunConfig cfg;
  cli::apply_config(cfg, io::json{{"seed", 7}, {"method", "mcb"}, {"t_target", 900}, {"eps_min", 0.1}});
  CHECK(cfg.seed_set);
  CHECK(cfg.agent.seed == 7);
  CHECK(cfg.method == Method::mcb);
  CHECK(cfg.agent.t_target == 900);
  CHECK_THROWS_AS(cli::apply_config(cfg, io::json{{"no_such_key", 1}}), Error);

  TempDir dir("cfg");
  io::write_text(dir.path / "run.cfg", "# comment\nseed = 11\nmethod = mtb\n");
  cli::RunConfig kv;
  cli::apply_config(kv, cli::read_config_file(dir.path / "run.cfg"));
  CHECK(kv.agent.seed == 11);
  CHECK(kv.method == Method::mtb);

  const auto sc = cli::parse_bins("speed=1.0");
  CHECK(sc.n_speed() == 30);
  CHECK(sc.n_accel() == BinningScheme::standard().n_accel());
  CHECK_THROWS_AS(cli::parse_bins("speed=-1"), Error);
  CHECK_THROWS_AS(cli::parse_bins("colour=1"), Error);
}

TEST_CASE("cycle argument labels") {
  CHECK(cli::parse_cycle_arg("out/mtb_cycle.csv").label == "mtb");
  CHECK(cli::parse_cycle_arg("x=out/a.csv").label == "x");
  CHECK(cli::parse_cycle_arg("x=out/a.csv").path == fs::path("out/a.csv"));
  CHECK(cli::parse_cycle_arg("dir=1/b.csv").label == "dir");
}

TEST_CASE("exit codes") {
  TempDir dir("exit");
  fs::create_directories(dir.path / "empty");
  CHECK(run({"preprocess", (dir.path / "empty").string(), "--out", (dir.path / "f").string()}) == 2);
  CHECK(run({"generate", (dir.path / "empty").string(), "--seed", "1"}) == 2);
  CHECK(run({"--no-such-flag"}) == 2);

  io::write_text(dir.path / "calc.csv", "grade\n1\n2\n3\n");
  io::write_text(dir.path / "ref.csv", "grade\n1\n2\n");
  CHECK(run({"validate-grade", (dir.path / "calc.csv").string(), (dir.path / "ref.csv").string()}) == 3);
  io::write_text(dir.path / "ref3.csv", "grade\n1\n2\n4\n");
  CHECK(run({"validate-grade", (dir.path / "calc.csv").string(), (dir.path / "ref3.csv").string()}) == 0);
}

TEST_CASE("empty fleet reports no trips found") {
  TempDir dir("empty");
  fs::create_directories(dir.path / "trips");
  try {
    io::read_trip_dir(dir.path / "trips");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("no trips found") != std::string::npos);
  }
}

TEST_CASE("generate requires a seed and a cached matrix") {
  TempDir dir("gen");
  synthetic::OracleFleetOptions o;
  o.trips = 6;
  cli::cmd_synth_fleet(dir.path / "fleet", o);
  auto cfg = small_config(Method::piesmc, 1);
  cfg.seed_set = false;
  CHECK_THROWS_AS(cli::cmd_generate(dir.path / "fleet", dir.path / "out", cfg), Error);
  cfg.seed_set = true;
  try {
    cli::cmd_generate(dir.path / "fleet", dir.path / "out", cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("build-matrix") != std::string::npos);
  }
  // MTB does not need the matrix
  CHECK_NOTHROW(cli::cmd_generate(dir.path / "fleet", dir.path / "out", small_config(Method::mtb, 1)));

  // a matrix cached under a different scheme is not picked up
  cli::cmd_build_matrix(dir.path / "fleet", BinningScheme::standard());
  CHECK_THROWS_AS(cli::cmd_generate(dir.path / "fleet", dir.path / "out", cfg), Error);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  TempDir dir("det");
  const auto fleet = small_fleet(dir.path);
  for (Method m : {Method::piesmc, Method::mtb, Method::mcb}) {
    const auto a = cli::cmd_generate(fleet, dir.path / "a", small_config(m, 5));
    const auto b = cli::cmd_generate(fleet, dir.path / "b", small_config(m, 5));
    CHECK(slurp(a.cycle_csv) == slurp(b.cycle_csv));
    auto ra = a.report, rb = b.report;
    ra.erase("timing");
    rb.erase("timing");
    CHECK(ra.dump() == rb.dump());
    CHECK(a.report["method"] == std::string(to_string(m)));
    CHECK(a.cycle.size() >= 600);
  }
}

TEST_CASE("piesmc report tracks the running minimum") {
  TempDir dir("rep");
  const auto fleet = small_fleet(dir.path);
  const auto r = cli::cmd_generate(fleet, dir.path / "out", small_config(Method::piesmc, 2));
  const auto& eps = r.report["episodes"];
  REQUIRE(eps.size() == 5);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : eps) {
    best = std::min(best, e["cost_e"].get<double>());
    CHECK(e["best_cost_e"].get<double>() == best);
  }
  CHECK(r.report["cycle"]["cost"]["e_total"].get<double>() == Approx(best));
  CHECK(r.report["feasibility"]["violations"].empty());
  CHECK(r.report["timing"].contains("generation_s"));
}

TEST_CASE("fleet summary and compare") {
  TempDir dir("cmp");
  const auto fleet = small_fleet(dir.path);
  const auto summary = io::read_json(cli::FleetPaths{fleet}.summary());
  CHECK(summary["trip_count"].get<std::size_t>() == 10);

  const auto mtb = cli::cmd_generate(fleet, dir.path / "out", small_config(Method::mtb, 3));
  const auto pie = cli::cmd_generate(fleet, dir.path / "out", small_config(Method::piesmc, 3));
  auto cfg = small_config(Method::piesmc, 3);
  const auto j = cli::cmd_compare(fleet, {{"mtb", mtb.cycle_csv}, {"piesmc", pie.cycle_csv}}, dir.path / "cmp", cfg);
  CHECK(j["baseline"] == "mtb");
  REQUIRE(j["methods"].size() == 2);
  CHECK(j["methods"][0]["improvement_vs_mtb_pct"].get<double>() == 0.0);
  const double e_mtb = j["methods"][0]["cost"]["e_total"].get<double>();
  const double e_pie = j["methods"][1]["cost"]["e_total"].get<double>();
  CHECK(j["methods"][1]["improvement_vs_mtb_pct"].get<double>() == Approx((e_mtb - e_pie) / e_mtb * 100.0));
  CHECK(fs::exists(dir.path / "cmp" / "comparison.json"));

  // without an "mtb" label there is no baseline
  const auto k = cli::cmd_compare(fleet, {{"x", pie.cycle_csv}}, dir.path / "cmp2", cfg);
  CHECK(k["baseline"].is_null());
  CHECK(k["methods"][0]["improvement_vs_mtb_pct"].is_null());

  const auto an = cli::cmd_analyze(pie.cycle_csv, fleet, dir.path / "an", cfg);
  CHECK(an["cost"]["e_total"].get<double>() == Approx(e_pie));
  CHECK(fs::exists(dir.path / "an" / "piesmc_cycle_vsp.csv"));
}

TEST_CASE("a fleet compared against one of its own trips costs nothing for that trip") {
  TempDir dir("self");
  synthetic::OracleFleetOptions o;
  o.trips = 1;
  cli::cmd_synth_fleet(dir.path / "fleet", o);
  const auto trip = io::read_trip_dir(dir.path / "fleet" / "trips").front();
  DriveCycle c;
  for (std::size_t k = 0; k < trip.size(); ++k) c.push(trip.v[k], trip.a[k], trip.g_f[k]);
  io::write_cycle(dir.path / "self.csv", c);
  const auto j = cli::cmd_compare(dir.path / "fleet", {{"mtb", dir.path / "self.csv"}}, dir.path / "cmp",
                                  small_config(Method::mtb, 1));
  CHECK(j["methods"][0]["cost"]["e_total"].get<double>() == Approx(0.0));
  CHECK(j["methods"][0]["improvement_vs_mtb_pct"].is_null());
}
