#include "mci/data/image.hpp"

#include "mci/error.hpp"

namespace mci::data {

RgbImage::RgbImage(int height, int width, Rgb fill) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ShapeError("negative image size");
    pixels_.resize(static_cast<std::size_t>(height) * width * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill[0];
        pixels_[i + 1] = fill[1];
        pixels_[i + 2] = fill[2];
    }
}

Rgb RgbImage::at(int y, int x) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(int y, int x, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[i] = c[0];
    pixels_[i + 1] = c[1];
    pixels_[i + 2] = c[2];
}

LabelMap::LabelMap(int height, int width, ChangeClass fill) : height_(height), width_(width) {
    if (height < 0 || width < 0) throw ShapeError("negative mask size");
    labels_.assign(static_cast<std::size_t>(height) * width, static_cast<std::uint8_t>(fill));
}

std::string to_string(ChangeClass c) {
    switch (c) {
        case ChangeClass::background: return "background";
        case ChangeClass::building: return "building";
        case ChangeClass::road: return "road";
    }
    return "unknown";
}

ChangeClass parse_change_class(const std::string& name) {
    if (name == "background") return ChangeClass::background;
    if (name == "building" || name == "buildings") return ChangeClass::building;
    if (name == "road" || name == "roads") return ChangeClass::road;
    throw Error("unknown change class '" + name + "'");
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "unknown";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw Error("unknown split '" + name + "'");
}

}  // namespace mci::data
