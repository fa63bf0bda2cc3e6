#pragma once

#include <vector>

#include "strawdet/dataset.hpp"
#include "strawdet/image.hpp"
#include "strawdet/rng.hpp"

namespace strawdet {

struct LabeledImage {
    RasterImage image;
    std::vector<LabelRecord> labels;
};

// Per-channel clamp(p + delta, 0, 255).
RasterImage adjust_brightness(const RasterImage& img, int delta);

// pixel/255 + N(0, variance) per channel, clamped to [0,1], rescaled.
RasterImage gaussian_noise(const RasterImage& img, double variance, Rng& rng);

// Each pixel independently replaced with probability density, half black
// and half white in expectation.
RasterImage salt_pepper(const RasterImage& img, double density, Rng& rng);

struct HsvGains {
    double h = 0.015;
    double s = 0.7;
    double v = 0.4;
};

// Multiplies each HSV channel by (1 + u * gain), u uniform in [-1,1] per
// channel; hue wraps mod 1, saturation and value clamp to [0,1].
RasterImage hsv_jitter(const RasterImage& img, const HsvGains& gains, Rng& rng);

// Stitches four labeled images into one out_size x out_size composite:
// random center on a doubled canvas (within its middle half), quadrant
// placement, center crop. Labels are affine-transformed, clipped, and
// dropped when the clip keeps less than min_keep_area of the box.
LabeledImage mosaic(const std::vector<LabeledImage>& images, int out_size,
                    Rng& rng, double min_keep_area = 0.2);

} // namespace strawdet
