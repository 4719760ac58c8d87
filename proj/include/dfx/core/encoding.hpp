#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfx {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::string base64_encode(std::string_view bytes);
/// Throws ErrorKind::parse on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lowercase hex SHA-256 digest, prefixed "sha256:".
std::string sha256_digest(std::span<const std::uint8_t> bytes);
std::string sha256_digest(std::string_view bytes);

/// Random RFC 4122 version-4 identifier.
std::string new_uuid();

/// Current UTC time as ISO-8601 with millisecond precision, e.g.
/// "2026-10-16T07:12:00.123Z".
std::string utc_timestamp_now();

/// Half-up rounding at a fixed number of decimals. Values that sit on the
/// half boundary up to floating representation error round up, so
/// 0.9125 -> 0.913 even though the double is 0.91249999...
double round_half_up(double value, int decimals);
std::string format_fixed(double value, int decimals);

}  // namespace dfx
