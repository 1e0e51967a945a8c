#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cyclegen/log.hpp"
#include "cyclegen/rng.hpp"

namespace cyclegen {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream) const {
  // splitmix64 over (state sample, stream) gives well-separated child seeds.
  std::mt19937_64 copy = engine_;
  std::uint64_t z = copy() + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return Rng(z ^ (z >> 31));
}

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto log = spdlog::stderr_color_mt("cyclegen");
    log->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("CYCLEGEN_LOG")) level = spdlog::level::from_str(env);
    log->set_level(level);
    return log;
  }();
  return instance;
}

}  // namespace cyclegen
