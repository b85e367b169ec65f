#pragma once

#include <string>
#include <string_view>

#include "drivesig/classifier.hpp"

namespace drivesig {

inline constexpr int kModelFormatVersion = 1;

// Versioned text container; layout documented in docs/model-format.md.
std::string serialize_model(const TrainedModel& model);
// Throws ModelVersionError for another format version and ModelCorruptError
// for anything malformed, truncated or failing the trailing checksum.
TrainedModel parse_model(std::string_view text);

void save_model(const TrainedModel& model, const std::string& path);
// Throws DataError(kMissingFile) when the path cannot be opened.
TrainedModel load_model(const std::string& path);

}  // namespace drivesig
