#include "strawdet/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "strawdet/error.hpp"

namespace strawdet {

RasterImage::RasterImage(int w, int h, uint8_t fill) : width(w), height(h) {
    require(w >= 0 && h >= 0, "image: negative dimensions ", w, "x", h);
    pixels.assign(size_t(3) * w * h, fill);
}

namespace {

// Skips PPM whitespace and '#' comment lines, then parses one decimal field.
int parse_ppm_int(const std::vector<uint8_t>& b, size_t& pos) {
    while (pos < b.size()) {
        if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else if (std::isspace(b[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    require(pos < b.size() && std::isdigit(b[pos]),
            "ppm: expected integer at byte ", pos);
    int v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
        v = v * 10 + (b[pos] - '0');
        require(v <= 1 << 30, "ppm: integer overflow in header");
        ++pos;
    }
    return v;
}

} // namespace

RasterImage decode_ppm(const std::vector<uint8_t>& bytes) {
    require(bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6',
            "ppm: bad magic (expected P6)");
    size_t pos = 2;
    const int w = parse_ppm_int(bytes, pos);
    const int h = parse_ppm_int(bytes, pos);
    const int maxval = parse_ppm_int(bytes, pos);
    require(maxval == 255, "ppm: unsupported maxval ", maxval,
            " (only 255 supported)");
    require(pos < bytes.size() && std::isspace(bytes[pos]),
            "ppm: missing separator after header");
    ++pos;  // single whitespace byte before the raster

    RasterImage img(w, h);
    const size_t need = size_t(3) * w * h;
    require(bytes.size() - pos >= need,
            "ppm: unexpected end of data (need ", need, " raster bytes, have ",
            bytes.size() - pos, ")");
    std::copy(bytes.begin() + pos, bytes.begin() + pos + need,
              img.pixels.begin());
    return img;
}

std::vector<uint8_t> encode_ppm(const RasterImage& img) {
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n",
                                img.width, img.height);
    std::vector<uint8_t> out(header, header + n);
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

RasterImage read_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open image ", path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    try {
        return decode_ppm(bytes);
    } catch (const Error& e) {
        fail(path, ": ", e.what());
    }
}

void write_image(const std::string& path, const RasterImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open ", path, " for writing");
    const auto bytes = encode_ppm(img);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    require(out.good(), "write failed for ", path);
}

RasterImage resize_bilinear(const RasterImage& img, int new_w, int new_h) {
    require(!img.empty(), "resize: empty source image");
    require(new_w >= 1 && new_h >= 1, "resize: bad target size ", new_w, "x",
            new_h);
    RasterImage out(new_w, new_h);
    const double sx = double(img.width) / new_w;
    const double sy = double(img.height) / new_h;
    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, double(img.height - 1));
        const int y0 = int(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, double(img.width - 1));
            const int x0 = int(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double wx = fx - x0;
            uint8_t* dst = out.px(x, y);
            for (int c = 0; c < 3; ++c) {
                const double top = img.px(x0, y0)[c] * (1 - wx) +
                                   img.px(x1, y0)[c] * wx;
                const double bot = img.px(x0, y1)[c] * (1 - wx) +
                                   img.px(x1, y1)[c] * wx;
                dst[c] = uint8_t(std::lround(top * (1 - wy) + bot * wy));
            }
        }
    }
    return out;
}

} // namespace strawdet
