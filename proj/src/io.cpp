#include "cyclegen/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cyclegen/error.hpp"

namespace cyclegen::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto comma = line.find(',');
    out.push_back(trim(line.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    line.remove_prefix(comma + 1);
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  if (field.empty()) return std::nullopt;
  std::string lower(field);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "nan" || lower == "na" || lower == "null") return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double x = 0.0;
  const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
  if (ec != std::errc{} || end != field.data() + field.size()) return std::nullopt;
  if (std::isnan(x)) return std::nullopt;
  return x;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
  std::vector<std::size_t> line_numbers;
};

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  return out;
}

// Reads a CSV whose first line is a header naming exactly `columns`.
Table read_table(const fs::path& path, const std::vector<std::string_view>& columns) {
  auto in = open_in(path);
  Table table;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  std::vector<std::size_t> order;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view);
    if (!have_header) {
      for (auto c : columns) {
        const auto it = std::find(fields.begin(), fields.end(), c);
        if (it == fields.end())
          throw input_error(path.string() + ": missing column '" + std::string(c) + "' in header");
        order.push_back(static_cast<std::size_t>(it - fields.begin()));
      }
      for (auto f : fields) table.header.emplace_back(f);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size())
      throw input_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " + std::to_string(fields.size()));
    std::vector<std::optional<double>> row;
    row.reserve(order.size());
    for (std::size_t c = 0; c < order.size(); ++c) {
      const auto field = fields[order[c]];
      auto x = parse_number(field);
      if (!x && !field.empty()) {
        std::string lower(field);
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (lower != "nan" && lower != "na" && lower != "null")
          throw input_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + std::string(field) +
                            "' in column " + std::string(columns[c]));
      }
      row.push_back(x);
    }
    table.rows.push_back(std::move(row));
    table.line_numbers.push_back(lineno);
  }
  if (!have_header) throw input_error(path.string() + ": empty file");
  return table;
}

double required(const Table& t, std::size_t row, std::size_t col, const fs::path& path, std::string_view name) {
  const auto& x = t.rows[row][col];
  if (!x)
    throw input_error(path.string() + ":" + std::to_string(t.line_numbers[row]) + ": missing value in column " +
                      std::string(name));
  return *x;
}

json nullable(double x, bool defined) { return defined && std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (x == 0.0) return "0";  // also folds -0
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw invariant_error("format_double: buffer too small");
  return std::string(buf.data(), end);
}

std::vector<RawSample> read_raw_trip(const fs::path& path) {
  const auto table = read_table(path, {"t", "speed", "lat", "lon", "alt"});
  std::vector<RawSample> out;
  out.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    RawSample s;
    s.t = required(table, r, 0, path, "t");
    s.speed = table.rows[r][1];
    s.lat = required(table, r, 2, path, "lat");
    s.lon = required(table, r, 3, path, "lon");
    s.alt = table.rows[r][4];
    out.push_back(s);
  }
  return out;
}

void write_raw_trip(const fs::path& path, const std::vector<RawSample>& samples) {
  std::ostringstream os;
  os << "t,speed,lat,lon,alt\n";
  for (const auto& s : samples) {
    os << format_double(s.t) << ',' << (s.speed ? format_double(*s.speed) : "") << ',' << format_double(s.lat) << ','
       << format_double(s.lon) << ',' << (s.alt ? format_double(*s.alt) : "") << '\n';
  }
  write_text(path, os.str());
}

TripRecord read_trip(const fs::path& path) {
  static const std::vector<std::string_view> cols = {"t", "v", "a", "g_f"};
  const auto table = read_table(path, cols);
  TripRecord trip;
  trip.trip_id = path.stem().string();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    trip.t.push_back(required(table, r, 0, path, "t"));
    trip.v.push_back(required(table, r, 1, path, "v"));
    trip.a.push_back(required(table, r, 2, path, "a"));
    trip.g_f.push_back(required(table, r, 3, path, "g_f"));
  }
  return trip;
}

void write_trip(const fs::path& path, const TripRecord& trip) {
  std::ostringstream os;
  os << "t,v,a,g_f\n";
  for (std::size_t k = 0; k < trip.size(); ++k)
    os << format_double(trip.t[k]) << ',' << format_double(trip.v[k]) << ',' << format_double(trip.a[k]) << ','
       << format_double(trip.g_f[k]) << '\n';
  write_text(path, os.str());
}

std::vector<fs::path> list_csv(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw input_error(dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<TripRecord> read_trip_dir(const fs::path& dir) {
  const auto files = list_csv(dir);
  if (files.empty()) throw input_error("no trips found in " + dir.string());
  std::vector<TripRecord> trips;
  trips.reserve(files.size());
  for (const auto& f : files) trips.push_back(read_trip(f));
  return trips;
}

DriveCycle read_cycle(const fs::path& path) {
  const auto table = read_table(path, {"t", "v", "a", "g"});
  DriveCycle cycle;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    cycle.push(required(table, r, 1, path, "v"), required(table, r, 2, path, "a"), required(table, r, 3, path, "g"));
    cycle.t.back() = required(table, r, 0, path, "t");
  }
  if (cycle.empty()) throw input_error(path.string() + ": cycle has no samples");
  return cycle;
}

void write_cycle(const fs::path& path, const DriveCycle& cycle) {
  std::ostringstream os;
  os << "t,v,a,g\n";
  for (std::size_t k = 0; k < cycle.size(); ++k)
    os << format_double(cycle.t[k]) << ',' << format_double(cycle.v[k]) << ',' << format_double(cycle.a[k]) << ','
       << format_double(cycle.g[k]) << '\n';
  write_text(path, os.str());
}

std::vector<double> read_series(const fs::path& path) {
  auto in = open_in(path);
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view);
    const auto x = parse_number(fields.back());
    if (!x) {
      if (out.empty() && lineno == 1) continue;  // header
      throw input_error(path.string() + ":" + std::to_string(lineno) + ": bad number '" + std::string(fields.back()) +
                        "'");
    }
    out.push_back(*x);
  }
  return out;
}

json to_json(const BinningScheme& scheme) {
  return json{{"speed_edges", scheme.speed_edges()},
              {"accel_edges", scheme.accel_edges()},
              {"grade_edges", scheme.grade_edges()}};
}

BinningScheme scheme_from_json(const json& j) {
  try {
    return BinningScheme(j.at("speed_edges").get<std::vector<double>>(), j.at("accel_edges").get<std::vector<double>>(),
                         j.at("grade_edges").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw input_error(std::string("bad binning scheme: ") + e.what());
  }
}

json to_json(const Sagstm& m) {
  json rows = json::array();
  for (std::uint32_t s = 1; s <= m.n_states(); ++s) {
    const StateIndex si{s};
    const auto targets = m.targets(si);
    if (targets.empty()) continue;
    std::vector<std::uint32_t> to;
    to.reserve(targets.size());
    for (auto t : targets) to.push_back(t.value);
    const auto p = m.probs(si);
    rows.push_back(json{{"from", s}, {"to", to}, {"p", std::vector<double>(p.begin(), p.end())}});
  }
  return json{{"schema_version", kSchemaVersion}, {"scheme", to_json(m.scheme())}, {"rows", std::move(rows)}};
}

Sagstm sagstm_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw input_error("transition matrix file has unsupported schema_version");
    auto scheme = scheme_from_json(j.at("scheme"));
    const std::size_t n = scheme.n_states();
    std::vector<std::size_t> row_ptr(n + 1, 0);
    std::vector<StateIndex> targets;
    std::vector<double> probs;
    std::uint32_t last = 0;
    for (const auto& row : j.at("rows")) {
      const auto from = row.at("from").get<std::uint32_t>();
      if (from <= last || from > n) throw input_error("transition matrix rows must be ascending and in range");
      const auto to = row.at("to").get<std::vector<std::uint32_t>>();
      const auto p = row.at("p").get<std::vector<double>>();
      if (to.size() != p.size()) throw input_error("transition matrix row has mismatched to/p lengths");
      for (std::uint32_t s = last + 1; s <= from; ++s) row_ptr[s] = targets.size();
      for (std::size_t i = 0; i < to.size(); ++i) {
        targets.push_back(StateIndex{to[i]});
        probs.push_back(p[i]);
      }
      row_ptr[from] = targets.size();
      last = from;
    }
    for (std::size_t s = last + 1; s <= n; ++s) row_ptr[s] = targets.size();
    return Sagstm(std::move(scheme), std::move(row_ptr), std::move(targets), std::move(probs));
  } catch (const json::exception& e) {
    throw input_error(std::string("bad transition matrix file: ") + e.what());
  }
}

json to_json(const KinematicFragments& f) {
  json j = json::object();
  const auto v = f.values();
  const std::array<bool, kNumFragments> defined = {f.v_bar_ei_defined, true, f.a_bar_p_defined, f.a_bar_n_defined,
                                                   true, true, true, true};
  for (std::size_t i = 0; i < kNumFragments; ++i) j[std::string(kFragmentNames[i])] = nullable(v[i], defined[i]);
  return j;
}

json to_json(const FragmentCost& c) {
  json eps = json::object();
  for (std::size_t i = 0; i < kNumFragments; ++i) eps[std::string(kFragmentNames[i])] = c.eps[i];
  return json{{"eps", std::move(eps)}, {"e_total", c.e_total}};
}

json to_json(const GradeErrorReport& r) {
  return json{{"schema_version", kSchemaVersion}, {"mae", r.mae}, {"mse", r.mse}, {"rmse", r.rmse}};
}

json to_json(const DistributionStats& s) {
  return json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"std", s.std}};
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw input_error(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, std::string_view text) {
  auto out = open_out(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw input_error("cannot write " + path.string());
}

void Fnv1a::update(std::string_view bytes) {
  for (unsigned char c : bytes) {
    h_ ^= c;
    h_ *= 0x100000001b3ULL;
  }
}

void Fnv1a::update_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path.string());
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
}

std::string Fnv1a::hex() const {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h_));
  return buf.data();
}

}  // namespace cyclegen::io
