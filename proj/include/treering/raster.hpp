#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "treering/geometry.hpp"

namespace treering {

/// Row-major 8-bit grayscale image. Also used for masks (0 = background).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

    static GrayImage filled(int w, int h, std::uint8_t value) {
        return {w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, value)};
    }
};

/// Row-major interleaved RGB image.
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    const std::uint8_t* px(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    std::uint8_t* px(int x, int y) {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }

    static ColorImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        ColorImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
        for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
            img.rgb[i] = r;
            img.rgb[i + 1] = g;
            img.rgb[i + 2] = b;
        }
        return img;
    }
};

ColorImage load_image(const std::filesystem::path& path);
GrayImage load_mask(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const ColorImage& image);
void save_png(const std::filesystem::path& path, const GrayImage& image);

/// Forces background pixels (mask == 0) to white so the edge detector
/// sees a flat region there. Foreground pixels are untouched.
void apply_mask(ColorImage& image, const GrayImage& mask);

struct PreprocessResult {
    GrayImage image;      // target_size x target_size, equalized
    Point2 pith;          // pith in the resized frame
    double sx = 1.0;      // target_w / original_w
    double sy = 1.0;      // target_h / original_h
};

/// Resize to the square working size, convert to grayscale
/// (0.299 R + 0.587 G + 0.114 B) and equalize the global histogram.
/// A constant image equalizes to itself.
PreprocessResult preprocess(const ColorImage& image, Point2 pith, int target_size = 1500);

ColorImage resize_bilinear(const ColorImage& image, int out_w, int out_h);
GrayImage to_grayscale(const ColorImage& image);
GrayImage equalize_histogram(const GrayImage& image);

}  // namespace treering
