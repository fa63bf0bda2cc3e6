#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace strawdet {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;

    RasterImage() = default;
    RasterImage(int w, int h, uint8_t fill = 0);

    uint8_t* px(int x, int y) { return pixels.data() + 3 * (int64_t(y) * width + x); }
    const uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (int64_t(y) * width + x);
    }
    bool empty() const { return width == 0 || height == 0; }
};

// Binary P6 portable pixmap, maxval 255. The project's native lossless
// format; round trips are bitwise.
RasterImage read_image(const std::string& path);
void write_image(const std::string& path, const RasterImage& img);

RasterImage decode_ppm(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_ppm(const RasterImage& img);

// Bilinear with half-pixel centers, clamped at borders.
RasterImage resize_bilinear(const RasterImage& img, int new_w, int new_h);

} // namespace strawdet
