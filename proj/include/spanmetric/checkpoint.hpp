#pragma once

// Versioned binary checkpoint: magic, format version, a JSON header with
// the encoder config and slot table, then every parameter as a
// little-endian IEEE-754 double.

#include <optional>
#include <string>

#include "spanmetric/model.hpp"

namespace spanmetric::net {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Parameters& params);
Parameters deserialize_checkpoint(const std::string& bytes);

// Written through a temporary file and renamed into place.
void save_checkpoint(const Parameters& params, const std::string& path);

// Throws ConfigError when `expected` is given and differs from the stored
// config, or when the stored slot table disagrees with the config's layout.
Parameters load_checkpoint(const std::string& path,
                           const std::optional<EncoderConfig>& expected = std::nullopt);

}  // namespace spanmetric::net
