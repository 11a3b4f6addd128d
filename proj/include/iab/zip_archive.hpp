#pragma once

#include <optional>
#include <string>

namespace iab {

bool looks_like_zip(const std::string& bytes);

// Extracts the first file entry of a ZIP archive (stored or deflated).
// Returns nullopt when the bytes are not a parseable archive; throws IoError
// on CRC or size mismatch.
std::optional<std::string> unzip_first_entry(const std::string& bytes);

} // namespace iab
