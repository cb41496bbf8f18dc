#pragma once

// Internal conversions between the library's plain image structs and
// cv::Mat. Not installed; OpenCV stays an implementation detail.

#include <cstdint>

#include <opencv2/core.hpp>

#include "treering/raster.hpp"

namespace treering::cvb {

inline cv::Mat to_mat(const ColorImage& image) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const std::uint8_t* p = image.px(x, y);
            bgr.at<cv::Vec3b>(y, x) = cv::Vec3b(p[2], p[1], p[0]);
        }
    }
    return bgr;
}

inline ColorImage from_mat(const cv::Mat& bgr) {
    ColorImage image;
    image.width = bgr.cols;
    image.height = bgr.rows;
    image.rgb.resize(static_cast<std::size_t>(bgr.cols) * bgr.rows * 3);
    for (int y = 0; y < bgr.rows; ++y) {
        for (int x = 0; x < bgr.cols; ++x) {
            const cv::Vec3b& v = bgr.at<cv::Vec3b>(y, x);
            std::uint8_t* p = image.px(x, y);
            p[0] = v[2];
            p[1] = v[1];
            p[2] = v[0];
        }
    }
    return image;
}

}  // namespace treering::cvb
