#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mci/data/image.hpp"

namespace mci::data {

// Any PNG colour type / bit depth is accepted and converted to 8-bit RGB
// (alpha composited onto black, palette and gray expanded).
RgbImage decode_png(std::span<const std::uint8_t> bytes);
RgbImage read_png(const std::filesystem::path& path);

// Output carries no timestamp or text chunks, so equal images encode to
// equal bytes.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace mci::data
