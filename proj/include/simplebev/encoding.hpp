#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simplebev {

std::string base64_encode(std::span<const std::uint8_t> bytes);
// Throws DataError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Little-endian float32 packing of doubles (row-major order preserved).
std::vector<std::uint8_t> pack_f32le(std::span<const double> values);
std::vector<double> unpack_f32le(std::span<const std::uint8_t> bytes);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace simplebev
