#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace proxydiff {

// Ethereum's Keccak-256 (original padding, not FIPS-202 SHA3-256).
std::array<std::uint8_t, 32> keccak256(std::string_view data);

// Lowercase hex digest without a 0x prefix.
std::string keccak256_hex(std::string_view data);

}  // namespace proxydiff
