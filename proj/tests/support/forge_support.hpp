#pragma once

#include <optional>
#include <string>

#include "spliceloc/forge/tools.hpp"

namespace spliceloc::testing {

/// Encoder configuration for tests, or nullopt when the external tools do
/// not answer their version probes. Falls back to the build-time ffmpeg when
/// SPLICELOC_FFMPEG is unset.
std::optional<forge::ToolConfig> forge_tools();

/// Fresh, empty scratch directory under the system temp dir.
std::string scratch_dir(const std::string& name);

}  // namespace spliceloc::testing
