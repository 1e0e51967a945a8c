#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace cyclegen {

// Shared logger writing to stderr. The level is read once from the
// CYCLEGEN_LOG environment variable (trace|debug|info|warn|error|off,
// default warn).
std::shared_ptr<spdlog::logger> logger();

}  // namespace cyclegen
