#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cyclegen/analysis.hpp"
#include "cyclegen/cli.hpp"
#include "cyclegen/preprocess.hpp"
#include "cyclegen/statespace.hpp"
#include "cyclegen/synthetic.hpp"

namespace py = pybind11;
using namespace cyclegen;

namespace {

py::dict fragments_dict(const KinematicFragments& f) {
  py::dict d;
  const auto v = f.values();
  for (std::size_t i = 0; i < kNumFragments; ++i) d[py::str(std::string(kFragmentNames[i]))] = v[i];
  return d;
}

KinematicFragments fragments_from(const py::dict& d) {
  std::array<double, kNumFragments> v{};
  for (std::size_t i = 0; i < kNumFragments; ++i) v[i] = d[py::str(std::string(kFragmentNames[i]))].cast<double>();
  return KinematicFragments::from_values(v);
}

BinningScheme scheme_from(const std::string& name) {
  if (name == "standard") return BinningScheme::standard();
  if (name == "oracle") return synthetic::oracle_scheme();
  return cli::parse_bins(name);
}

cli::RunConfig run_config(const std::string& method, std::uint64_t seed, double t_target, std::size_t candidates,
                          const std::string& scheme) {
  cli::RunConfig cfg;
  cfg.scheme = scheme_from(scheme);
  cfg.method = parse_method(method);
  cfg.agent.seed = seed;
  cfg.seed_set = true;
  cfg.agent.t_target = t_target;
  cfg.agent.n_candidates = candidates;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<Error>(m, "CyclegenError", PyExc_ValueError);

  m.def("encode_state", [](int i, int j, int k, const std::string& scheme) {
    return encode_state({i, j, k}, scheme_from(scheme)).value;
  }, py::arg("speed"), py::arg("accel"), py::arg("grade"), py::arg("scheme") = "standard");
  m.def("decode_state", [](std::uint32_t n, const std::string& scheme) {
    const auto b = decode_state(StateIndex{n}, scheme_from(scheme));
    return py::make_tuple(b.speed, b.accel, b.grade);
  }, py::arg("n"), py::arg("scheme") = "standard");
  m.def("n_states", [](const std::string& scheme) { return scheme_from(scheme).n_states(); },
        py::arg("scheme") = "standard");

  m.def("haversine_distance", [](double lat1, double lon1, double lat2, double lon2) {
    return haversine_distance({lat1, lon1}, {lat2, lon2});
  });
  m.def("savitzky_golay", [](const std::vector<double>& x, int window, int order) {
    return savitzky_golay(x, window, order);
  }, py::arg("x"), py::arg("window") = 25, py::arg("order") = 3);

  m.def("kinematic_fragments", [](const std::vector<double>& v, std::optional<std::vector<double>> a) {
    return fragments_dict(a ? kinematic_fragments(v, *a) : kinematic_fragments(v));
  }, py::arg("v"), py::arg("a") = py::none());
  m.def("fragment_cost", [](const py::dict& gen, const py::dict& ref) {
    return fragment_cost(fragments_from(gen), fragments_from(ref)).e_total;
  });
  m.def("error_improvement", &error_improvement);
  m.def("vsp", [](double v, double a, double grade) { return vsp(v, a, grade); });
  m.def("wavelet_hf_fraction", [](const std::vector<double>& x, double split) {
    return wavelet_hf_fraction(cwt(x, log_scales()), split);
  }, py::arg("x"), py::arg("split") = kDefaultHfSplit);

  m.def("synth_fleet", [](const std::filesystem::path& out, std::size_t trips, std::uint64_t seed) {
    synthetic::OracleFleetOptions o;
    o.trips = trips;
    o.seed = seed;
    return cli::cmd_synth_fleet(out, o);
  }, py::arg("out_dir"), py::arg("trips") = 100, py::arg("seed") = 1);
  m.def("build_matrix", [](const std::filesystem::path& fleet, const std::string& scheme) {
    return cli::cmd_build_matrix(fleet, scheme_from(scheme));
  }, py::arg("fleet_dir"), py::arg("scheme") = "standard");
  m.def("generate", [](const std::filesystem::path& fleet, const std::filesystem::path& out, const std::string& method,
                       std::uint64_t seed, double t_target, std::size_t candidates, const std::string& scheme) {
    const auto r = cli::cmd_generate(fleet, out, run_config(method, seed, t_target, candidates, scheme));
    return py::make_tuple(r.cycle_csv, r.report.dump());
  }, py::arg("fleet_dir"), py::arg("out_dir"), py::arg("method") = "piesmc", py::arg("seed") = 0,
     py::arg("t_target") = 2160.0, py::arg("candidates") = 50, py::arg("scheme") = "standard");
  m.def("run", [](std::vector<std::string> args) {
    args.insert(args.begin(), "cyclegen");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  });
}
