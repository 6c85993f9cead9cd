#include "rainlab/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "rainlab/error.hpp"

namespace rainlab {

namespace {

std::uint8_t to_byte(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

double quantize(double v) { return static_cast<double>(to_byte(v)) / 255.0; }

void write_png(const std::vector<std::uint8_t>& bytes, int h, int w, int channels,
               const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot write PNG '" + path.string() + "': " + msg);
    }
}

}  // namespace

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
    if (h < 0 || w < 0) throw ShapeError("negative image dimensions");
    if (c != 1 && c != 3) throw ShapeError("image channels must be 1 or 3, got " + std::to_string(c));
}

RainField::RainField(int h, int w, double fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("negative rain field dimensions");
}

BinaryMask::BinaryMask(int h, int w, std::uint8_t fill)
    : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("negative mask dimensions");
}

std::size_t BinaryMask::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

Image compose(const Image& background, const RainField& rain) {
    if (background.height != rain.height || background.width != rain.width) {
        throw ShapeError("compose: background is " + std::to_string(background.height) + "x" +
                         std::to_string(background.width) + " but rain is " + std::to_string(rain.height) +
                         "x" + std::to_string(rain.width));
    }
    Image out = background;
    const int c = background.channels;
    for (std::size_t p = 0; p < background.pixel_count(); ++p) {
        for (int k = 0; k < c; ++k) {
            double& v = out.data[p * c + k];
            v = std::clamp(v + rain.data[p], 0.0, 1.0);
        }
    }
    return out;
}

Image to_grayscale(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.height, img.width, 1);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
        const double* px = &img.data[p * 3];
        out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

Image crop(const Image& img, int y0, int x0, int h, int w) {
    if (y0 < 0 || x0 < 0 || h < 0 || w < 0 || y0 + h > img.height || x0 + w > img.width) {
        throw ShapeError("crop window out of bounds");
    }
    Image out(h, w, img.channels);
    const std::size_t row = static_cast<std::size_t>(w) * img.channels;
    for (int y = 0; y < h; ++y) {
        auto src = img.data.begin() + ((static_cast<std::size_t>(y0 + y) * img.width + x0) * img.channels);
        std::copy(src, src + static_cast<std::ptrdiff_t>(row), out.data.begin() + static_cast<std::ptrdiff_t>(y * row));
    }
    return out;
}

Image clipped(Image img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
    return img;
}

Image quantized(Image img) {
    for (double& v : img.data) v = quantize(v);
    return img;
}

RainField quantized(RainField rain) {
    for (double& v : rain.data) v = quantize(v);
    return rain;
}

ImageDims read_dimensions(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot read PNG '" + path.string() + "': " + msg);
    }
    ImageDims d{static_cast<int>(image.height), static_cast<int>(image.width),
                (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1};
    png_image_free(&image);
    return d;
}

Image load_image(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot read PNG '" + path.string() + "': " + msg);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw IoError("unsupported bit depth in '" + path.string() + "': only 8-bit PNG is supported");
    }
    if (image.format & PNG_FORMAT_FLAG_ALPHA) {
        png_image_free(&image);
        throw IoError("unsupported PNG '" + path.string() + "': alpha channels are not supported");
    }
    const int channels = (image.format & PNG_FORMAT_FLAG_COLOR) ? 3 : 1;
    image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("cannot decode PNG '" + path.string() + "': " + msg);
    }
    Image out(static_cast<int>(image.height), static_cast<int>(image.width), channels);
    for (std::size_t i = 0; i < bytes.size(); ++i) out.data[i] = bytes[i] / 255.0;
    return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(img.data.size());
    std::transform(img.data.begin(), img.data.end(), bytes.begin(), to_byte);
    write_png(bytes, img.height, img.width, img.channels, path);
}

RainField load_rain(const std::filesystem::path& path) {
    Image img = to_grayscale(load_image(path));
    RainField rain(img.height, img.width);
    rain.data = std::move(img.data);
    return rain;
}

void save_rain(const RainField& rain, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes(rain.data.size());
    std::transform(rain.data.begin(), rain.data.end(), bytes.begin(), to_byte);
    write_png(bytes, rain.height, rain.width, 1, path);
}

}  // namespace rainlab
