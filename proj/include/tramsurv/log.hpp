#pragma once

#include <spdlog/logger.h>

namespace tramsurv {

/// Library logger writing to stderr. Level comes from TRAMSURV_LOG
/// (trace, debug, info, warn, error, off); default warn.
spdlog::logger& logger();

}  // namespace tramsurv
