#include "strawdet/augment.hpp"

#include <algorithm>
#include <cmath>

#include "strawdet/error.hpp"

namespace strawdet {

RasterImage adjust_brightness(const RasterImage& img, int delta) {
    RasterImage out = img;
    for (uint8_t& p : out.pixels)
        p = uint8_t(std::clamp(int(p) + delta, 0, 255));
    return out;
}

RasterImage gaussian_noise(const RasterImage& img, double variance, Rng& rng) {
    require(variance > 0.0, "gaussian_noise: variance must be > 0, got ",
            variance);
    const double sigma = std::sqrt(variance);
    RasterImage out = img;
    for (uint8_t& p : out.pixels) {
        const double v = p / 255.0 + sigma * rng.gauss();
        p = uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    return out;
}

RasterImage salt_pepper(const RasterImage& img, double density, Rng& rng) {
    require(density >= 0.0 && density <= 1.0,
            "salt_pepper: density must be in [0,1], got ", density);
    RasterImage out = img;
    for (int64_t i = 0; i < int64_t(img.width) * img.height; ++i) {
        if (rng.uniform01() >= density) continue;
        const uint8_t v = rng.uniform01() < 0.5 ? 0 : 255;
        out.pixels[3 * i] = v;
        out.pixels[3 * i + 1] = v;
        out.pixels[3 * i + 2] = v;
    }
    return out;
}

namespace {

// Hexcone RGB <-> HSV, all channels in [0,1].
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    v = mx;
    s = mx > 0.0 ? d / mx : 0.0;
    if (d <= 0.0) {
        h = 0.0;
        return;
    }
    if (mx == r) {
        h = (g - b) / d;
    } else if (mx == g) {
        h = 2.0 + (b - r) / d;
    } else {
        h = 4.0 + (r - g) / d;
    }
    h /= 6.0;
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    if (s <= 0.0) {
        r = g = b = v;
        return;
    }
    h = h - std::floor(h);  // wrap
    const double hh = h * 6.0;
    const int i = std::min(5, int(hh));
    const double f = hh - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (i) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

} // namespace

RasterImage hsv_jitter(const RasterImage& img, const HsvGains& gains, Rng& rng) {
    require(gains.h >= 0 && gains.s >= 0 && gains.v >= 0,
            "hsv_jitter: gains must be >= 0");
    const double fh = 1.0 + rng.uniform(-1.0, 1.0) * gains.h;
    const double fs = 1.0 + rng.uniform(-1.0, 1.0) * gains.s;
    const double fv = 1.0 + rng.uniform(-1.0, 1.0) * gains.v;

    RasterImage out = img;
    for (int64_t i = 0; i < int64_t(img.width) * img.height; ++i) {
        uint8_t* px = out.pixels.data() + 3 * i;
        double h, s, v, r, g, b;
        rgb_to_hsv(px[0] / 255.0, px[1] / 255.0, px[2] / 255.0, h, s, v);
        h = h * fh;
        h = h - std::floor(h);
        s = std::clamp(s * fs, 0.0, 1.0);
        v = std::clamp(v * fv, 0.0, 1.0);
        hsv_to_rgb(h, s, v, r, g, b);
        px[0] = uint8_t(std::lround(r * 255.0));
        px[1] = uint8_t(std::lround(g * 255.0));
        px[2] = uint8_t(std::lround(b * 255.0));
    }
    return out;
}

namespace {

// Paste src into canvas with top-left at (ox, oy), clipped to canvas bounds.
void blit(RasterImage& canvas, const RasterImage& src, int ox, int oy) {
    const int x0 = std::max(0, -ox), x1 = std::min(src.width, canvas.width - ox);
    const int y0 = std::max(0, -oy), y1 = std::min(src.height, canvas.height - oy);
    for (int y = y0; y < y1; ++y)
        std::copy(src.px(x0, y), src.px(x0, y) + 3 * (x1 - x0),
                  canvas.px(ox + x0, oy + y));
}

} // namespace

LabeledImage mosaic(const std::vector<LabeledImage>& images, int out_size,
                    Rng& rng, double min_keep_area) {
    require(images.size() == 4, "mosaic: needs exactly 4 images, got ",
            images.size());
    require(out_size >= 2, "mosaic: bad out_size ", out_size);

    const int S = out_size;
    RasterImage canvas(2 * S, 2 * S, 114);
    // stitch center, within the middle half of the doubled canvas
    const int cx = S / 2 + int(rng.below(uint64_t(S) + 1));
    const int cy = S / 2 + int(rng.below(uint64_t(S) + 1));

    struct Placed {
        double scale;
        int ox, oy;
    };
    std::vector<Placed> placed;
    for (int q = 0; q < 4; ++q) {
        const RasterImage& src = images[q].image;
        require(!src.empty(), "mosaic: image ", q, " is empty");
        const double scale = double(S) / std::max(src.width, src.height);
        const int sw = std::max(1, int(std::lround(src.width * scale)));
        const int sh = std::max(1, int(std::lround(src.height * scale)));
        const RasterImage scaled = resize_bilinear(src, sw, sh);
        // quadrant corners meet at the stitch center
        const int ox = (q % 2 == 0) ? cx - sw : cx;
        const int oy = (q < 2) ? cy - sh : cy;
        blit(canvas, scaled, ox, oy);
        placed.push_back({scale, ox, oy});
    }

    // center crop of the doubled canvas
    const int crop = S / 2;
    LabeledImage out;
    out.image = RasterImage(S, S);
    for (int y = 0; y < S; ++y)
        std::copy(canvas.px(crop, y + crop), canvas.px(crop, y + crop) + 3 * S,
                  out.image.px(0, y));

    for (int q = 0; q < 4; ++q) {
        const RasterImage& src = images[q].image;
        const Placed& pl = placed[q];
        for (const LabelRecord& lab : images[q].labels) {
            // into crop-frame pixels
            const double bw = lab.w * src.width * pl.scale;
            const double bh = lab.h * src.height * pl.scale;
            const double bx = lab.cx * src.width * pl.scale + pl.ox - crop;
            const double by = lab.cy * src.height * pl.scale + pl.oy - crop;
            const double x0 = std::clamp(bx - bw / 2, 0.0, double(S));
            const double x1 = std::clamp(bx + bw / 2, 0.0, double(S));
            const double y0 = std::clamp(by - bh / 2, 0.0, double(S));
            const double y1 = std::clamp(by + bh / 2, 0.0, double(S));
            const double kept = (x1 - x0) * (y1 - y0);
            if (kept < min_keep_area * bw * bh) continue;
            LabelRecord r;
            r.class_id = lab.class_id;
            r.cx = float((x0 + x1) / 2 / S);
            r.cy = float((y0 + y1) / 2 / S);
            r.w = float((x1 - x0) / S);
            r.h = float((y1 - y0) / S);
            out.labels.push_back(r);
        }
    }
    return out;
}

} // namespace strawdet
