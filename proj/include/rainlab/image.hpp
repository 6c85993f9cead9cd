#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace rainlab {

// Row-major, channel-interleaved intensities in [0, 1]. Holds backgrounds,
// rainy images and restoration outputs.
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0);

    std::size_t pixel_count() const { return static_cast<std::size_t>(height) * width; }
    std::size_t size() const { return data.size(); }

    double& at(int y, int x, int c = 0) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int y, int x, int c = 0) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }

    bool operator==(const Image&) const = default;
};

// Single-channel additive rain layer. Nonnegative; zero where no streak fell.
struct RainField {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    RainField() = default;
    RainField(int h, int w, double fill = 0.0);

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const RainField&) const = default;
};

// Values are exactly 0 or 1.
struct BinaryMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h, int w, std::uint8_t fill = 0);

    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;

    bool operator==(const BinaryMask&) const = default;
};

// I = clip(B + R, 0, 1); the rain layer is broadcast to every channel.
Image compose(const Image& background, const RainField& rain);

// Luma 0.299/0.587/0.114 for RGB; identity for single-channel input.
Image to_grayscale(const Image& img);

Image crop(const Image& img, int y0, int x0, int h, int w);

// Clamps every sample into [0, 1].
Image clipped(Image img);

// round(v * 255) / 255 per sample, i.e. what survives an 8-bit PNG.
Image quantized(Image img);
RainField quantized(RainField rain);

// 8-bit PNG, grayscale or RGB. Values are stored as round(v * 255).
struct ImageDims {
    int height = 0;
    int width = 0;
    int channels = 0;
};
ImageDims read_dimensions(const std::filesystem::path& path);
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// Rain fields are written as single-channel PNGs.
RainField load_rain(const std::filesystem::path& path);
void save_rain(const RainField& rain, const std::filesystem::path& path);

}  // namespace rainlab
