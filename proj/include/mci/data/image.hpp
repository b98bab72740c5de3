#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mci::data {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int height, int width, Rgb fill = {0, 0, 0});

    int height() const { return height_; }
    int width() const { return width_; }
    bool empty() const { return pixels_.empty(); }

    Rgb at(int y, int x) const;
    void set(int y, int x, Rgb c);

    std::span<const std::uint8_t> bytes() const { return pixels_; }
    std::span<std::uint8_t> bytes() { return pixels_; }

    bool operator==(const RgbImage&) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> pixels_;
};

enum class ChangeClass : std::uint8_t { background = 0, building = 1, road = 2 };

inline constexpr int kNumClasses = 3;

std::string to_string(ChangeClass c);
/// Accepts "background", "building(s)", "road(s)"; throws mci::Error otherwise.
ChangeClass parse_change_class(const std::string& name);

/// Per-pixel class raster (the ChangeMask of a pair).
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(int height, int width, ChangeClass fill = ChangeClass::background);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return labels_.size(); }

    ChangeClass at(int y, int x) const { return static_cast<ChangeClass>(labels_[index(y, x)]); }
    void set(int y, int x, ChangeClass c) { labels_[index(y, x)] = static_cast<std::uint8_t>(c); }

    std::span<const std::uint8_t> raw() const { return labels_; }
    std::span<std::uint8_t> raw() { return labels_; }

    bool operator==(const LabelMap&) const = default;

private:
    std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width_ + x; }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> labels_;
};

enum class Split { train, val, test };

std::string to_string(Split s);
Split parse_split(const std::string& name);

struct ImagePair {
    std::string id;
    RgbImage t1;
    RgbImage t2;
    double resolution_m_per_px = 0.5;
    Split split = Split::train;
};

}  // namespace mci::data
