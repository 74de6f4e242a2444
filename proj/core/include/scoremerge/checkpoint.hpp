#pragma once

#include <string>

#include "scoremerge/expert.hpp"

namespace scoremerge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary expert checkpoint: magic + version header, model/param kinds,
/// schedule triple, architecture (layer sizes or mixture spec), then
/// parameters as little-endian 64-bit floats. Neural checkpoints store the
/// raw parameters followed by the EMA parameters; loading activates EMA.
void save_checkpoint(const std::string& path, const Expert& expert);

Expert load_checkpoint(const std::string& path);

}  // namespace scoremerge
