#include "treering/raster.hpp"

#include <array>
#include <cstddef>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cv_bridge.hpp"
#include "treering/errors.hpp"

namespace treering {

using cvb::from_mat;
using cvb::to_mat;

ColorImage load_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoFailure("image file not found: " + path.string());
    }
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw DecodeFailure("cannot decode image: " + path.string());
    }
    return from_mat(bgr);
}

GrayImage load_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoFailure("mask file not found: " + path.string());
    }
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty()) {
        throw DecodeFailure("cannot decode mask: " + path.string());
    }
    GrayImage mask;
    mask.width = gray.cols;
    mask.height = gray.rows;
    mask.pixels.assign(gray.datastart, gray.dataend);
    if (!gray.isContinuous()) {
        mask.pixels.resize(static_cast<std::size_t>(gray.cols) * gray.rows);
        for (int y = 0; y < gray.rows; ++y) {
            std::copy_n(gray.ptr<std::uint8_t>(y), gray.cols, mask.pixels.data() + static_cast<std::size_t>(y) * gray.cols);
        }
    }
    return mask;
}

void save_png(const std::filesystem::path& path, const ColorImage& image) {
    if (!cv::imwrite(path.string(), to_mat(image))) {
        throw IoFailure("cannot write image: " + path.string());
    }
}

void save_png(const std::filesystem::path& path, const GrayImage& image) {
    cv::Mat gray(image.height, image.width, CV_8UC1);
    for (int y = 0; y < image.height; ++y) {
        std::copy_n(image.pixels.data() + static_cast<std::size_t>(y) * image.width, image.width,
                    gray.ptr<std::uint8_t>(y));
    }
    if (!cv::imwrite(path.string(), gray)) {
        throw IoFailure("cannot write image: " + path.string());
    }
}

void apply_mask(ColorImage& image, const GrayImage& mask) {
    if (mask.width != image.width || mask.height != image.height) {
        throw DimensionMismatch("mask size " + std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                                " does not match image size " + std::to_string(image.width) + "x" +
                                std::to_string(image.height));
    }
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (mask.at(x, y) == 0) {
                std::uint8_t* p = image.px(x, y);
                p[0] = p[1] = p[2] = 255;
            }
        }
    }
}

ColorImage resize_bilinear(const ColorImage& image, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw ImageTooSmall("resize target must be positive, got " + std::to_string(out_w) + "x" +
                            std::to_string(out_h));
    }
    cv::Mat resized;
    cv::resize(to_mat(image), resized, cv::Size(out_w, out_h), 0.0, 0.0, cv::INTER_LINEAR);
    return from_mat(resized);
}

GrayImage to_grayscale(const ColorImage& image) {
    GrayImage gray;
    gray.width = image.width;
    gray.height = image.height;
    gray.pixels.resize(static_cast<std::size_t>(image.width) * image.height);
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        const std::uint8_t* p = image.rgb.data() + 3 * i;
        const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        gray.pixels[i] = static_cast<std::uint8_t>(luma + 0.5);
    }
    return gray;
}

GrayImage equalize_histogram(const GrayImage& image) {
    const std::size_t n = image.pixels.size();
    if (n == 0) {
        throw ImageTooSmall("cannot equalize an empty image");
    }
    std::array<std::size_t, 256> hist{};
    for (std::uint8_t v : image.pixels) {
        ++hist[v];
    }
    std::array<std::size_t, 256> cdf{};
    std::size_t running = 0;
    for (int v = 0; v < 256; ++v) {
        running += hist[v];
        cdf[v] = running;
    }
    std::size_t cdf_min = 0;
    for (int v = 0; v < 256; ++v) {
        if (hist[v] > 0) {
            cdf_min = cdf[v];
            break;
        }
    }
    std::array<std::uint8_t, 256> lut{};
    if (n == cdf_min) {
        // Constant image: every pixel shares one bin, map it to itself.
        for (int v = 0; v < 256; ++v) {
            lut[v] = static_cast<std::uint8_t>(v);
        }
    } else {
        const double scale = 255.0 / static_cast<double>(n - cdf_min);
        for (int v = 0; v < 256; ++v) {
            const double mapped = static_cast<double>(cdf[v] - std::min(cdf[v], cdf_min)) * scale;
            lut[v] = static_cast<std::uint8_t>(mapped + 0.5);
        }
    }
    GrayImage out = image;
    for (std::uint8_t& v : out.pixels) {
        v = lut[v];
    }
    return out;
}

PreprocessResult preprocess(const ColorImage& image, Point2 pith, int target_size) {
    if (image.width < 2 || image.height < 2) {
        throw ImageTooSmall("input image must be at least 2x2, got " + std::to_string(image.width) + "x" +
                            std::to_string(image.height));
    }
    if (target_size < 2) {
        throw ImageTooSmall("working size must be at least 2, got " + std::to_string(target_size));
    }
    PreprocessResult result;
    result.sx = static_cast<double>(target_size) / image.width;
    result.sy = static_cast<double>(target_size) / image.height;
    result.pith = Point2{pith.x * result.sx, pith.y * result.sy};
    const ColorImage resized = (image.width == target_size && image.height == target_size)
                                   ? image
                                   : resize_bilinear(image, target_size, target_size);
    result.image = equalize_histogram(to_grayscale(resized));
    return result;
}

}  // namespace treering
