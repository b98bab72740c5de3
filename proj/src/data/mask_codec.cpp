#include "mci/data/mask_codec.hpp"

#include <string>

namespace mci::data {

Rgb class_color(ChangeClass c) {
    switch (c) {
        case ChangeClass::background: return kBackgroundColor;
        case ChangeClass::building: return kBuildingColor;
        case ChangeClass::road: return kRoadColor;
    }
    return kBackgroundColor;
}

MaskDecodeError::MaskDecodeError(int y, int x, Rgb color)
    : Error("unknown mask colour (" + std::to_string(color[0]) + "," + std::to_string(color[1]) + "," +
            std::to_string(color[2]) + ") at pixel (x=" + std::to_string(x) + ", y=" + std::to_string(y) + ")"),
      y_(y),
      x_(x),
      color_(color) {}

LabelMap decode_mask(const RgbImage& rgb) {
    LabelMap labels(rgb.height(), rgb.width());
    for (int y = 0; y < rgb.height(); ++y) {
        for (int x = 0; x < rgb.width(); ++x) {
            const Rgb c = rgb.at(y, x);
            if (c == kBackgroundColor) {
                labels.set(y, x, ChangeClass::background);
            } else if (c == kBuildingColor) {
                labels.set(y, x, ChangeClass::building);
            } else if (c == kRoadColor) {
                labels.set(y, x, ChangeClass::road);
            } else {
                throw MaskDecodeError(y, x, c);
            }
        }
    }
    return labels;
}

RgbImage encode_mask(const LabelMap& labels) {
    RgbImage rgb(labels.height(), labels.width());
    for (int y = 0; y < labels.height(); ++y)
        for (int x = 0; x < labels.width(); ++x) rgb.set(y, x, class_color(labels.at(y, x)));
    return rgb;
}

}  // namespace mci::data
