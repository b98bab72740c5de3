#include "mci/data/png_io.hpp"

#include <png.h>

#include <fstream>

#include "mci/error.hpp"

namespace mci::data {

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("png: " + msg);
    }
    img.format = PNG_FORMAT_RGB;
    RgbImage image(static_cast<int>(img.height), static_cast<int>(img.width));
    auto data = image.bytes();
    // A black background replaces any alpha so decoded colours stay exact for opaque files.
    png_color background{0, 0, 0};
    if (!png_image_finish_read(&img, &background, data.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw IoError("png: " + msg);
    }
    return image;
}

RgbImage read_png(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_png(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    const auto data = image.bytes();
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, data.data(), 0, nullptr)) {
        throw IoError(std::string("png: ") + img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, data.data(), 0, nullptr)) {
        throw IoError(std::string("png: ") + img.message);
    }
    out.resize(size);
    return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) { write_file(path, encode_png(image)); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

}  // namespace mci::data
