#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ibis/mask.hpp"

namespace ibis {

using Bytes = std::vector<std::uint8_t>;

// 8-bit single-channel PNG, 0 = background, 255 = foreground.
Bytes encode_mask_png(const Mask& m);
// Any nonzero sample reads as foreground. Rejects anything but 8-bit grayscale.
Mask decode_mask_png(std::span<const std::uint8_t> png);

// 8-bit gray or RGB PNG.
Bytes encode_image_png(const Image& img);
Image decode_image_png(std::span<const std::uint8_t> png);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

// Lowercase hex SHA-256. Used for content addresses and config fingerprints.
inline constexpr std::string_view kDigestAlgorithm = "sha256";
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> data);
void write_file(const std::string& path, std::string_view text);

}  // namespace ibis
