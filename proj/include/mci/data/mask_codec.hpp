#pragma once

#include <stdexcept>

#include "mci/data/image.hpp"
#include "mci/error.hpp"

namespace mci::data {

// File colours: background (0,0,0), building (255,0,0), road (255,255,0).
// Decoding requires an exact match.
inline constexpr Rgb kBackgroundColor{0, 0, 0};
inline constexpr Rgb kBuildingColor{255, 0, 0};
inline constexpr Rgb kRoadColor{255, 255, 0};

Rgb class_color(ChangeClass c);

class MaskDecodeError : public Error {
public:
    MaskDecodeError(int y, int x, Rgb color);
    int y() const { return y_; }
    int x() const { return x_; }
    Rgb color() const { return color_; }

private:
    int y_;
    int x_;
    Rgb color_;
};

/// Throws MaskDecodeError at the first (row-major) pixel with an unknown colour.
LabelMap decode_mask(const RgbImage& rgb);
RgbImage encode_mask(const LabelMap& labels);

}  // namespace mci::data
