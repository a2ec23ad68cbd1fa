#include "medgrad/image.hpp"

#include <algorithm>
#include <cmath>

namespace medgrad {

namespace {

void map_coords(AugmentOp op, int h, int w, int y, int x, int& sy, int& sx) {
    sy = y;
    sx = x;
    switch (op) {
        case AugmentOp::FlipH: sy = y; sx = w - 1 - x; break;
        case AugmentOp::FlipV: sy = h - 1 - y; sx = x; break;
        // rot90 is counterclockwise; square rasters only, so h == w
        case AugmentOp::Rot90: sy = x; sx = w - 1 - y; break;
        case AugmentOp::Rot180: sy = h - 1 - y; sx = w - 1 - x; break;
        case AugmentOp::Rot270: sy = h - 1 - x; sx = y; break;
    }
}

bool is_rotation(AugmentOp op) {
    return op == AugmentOp::Rot90 || op == AugmentOp::Rot180 || op == AugmentOp::Rot270;
}

}  // namespace

Image augment_image(const Image& img, AugmentOp op) {
    if (is_rotation(op) && img.height != img.width)
        throw DimensionError("rotation needs a square raster, got " +
                             std::to_string(img.height) + "x" + std::to_string(img.width));
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            int sy, sx;
            map_coords(op, img.height, img.width, y, x, sy, sx);
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    return out;
}

ImageMask augment_mask(const ImageMask& mask, AugmentOp op) {
    if (is_rotation(op) && mask.height != mask.width)
        throw DimensionError("rotation needs a square raster, got " +
                             std::to_string(mask.height) + "x" + std::to_string(mask.width));
    ImageMask out(mask.height, mask.width);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            int sy, sx;
            map_coords(op, mask.height, mask.width, y, x, sy, sx);
            out.at(y, x) = mask.at(sy, sx);
        }
    return out;
}

std::vector<float> to_gray(const Image& img) {
    std::vector<float> g(static_cast<std::size_t>(img.height) * img.width);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = 0.299f * img.data[i * 3] + 0.587f * img.data[i * 3 + 1] +
               0.114f * img.data[i * 3 + 2];
    return g;
}

Image resize_bilinear(const Image& img, int new_h, int new_w) {
    if (new_h == img.height && new_w == img.width) return img;
    Image out(new_h, new_w);
    const float sy_scale = static_cast<float>(img.height) / new_h;
    const float sx_scale = static_cast<float>(img.width) / new_w;
    for (int y = 0; y < new_h; ++y) {
        const float fy = std::max(0.0f, (y + 0.5f) * sy_scale - 0.5f);
        const int y0 = std::min(static_cast<int>(fy), img.height - 1);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const float wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            const float fx = std::max(0.0f, (x + 0.5f) * sx_scale - 0.5f);
            const int x0 = std::min(static_cast<int>(fx), img.width - 1);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const float wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const float top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
                const float bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
                out.at(y, x, c) = top * (1 - wy) + bot * wy;
            }
        }
    }
    return out;
}

void quantize_to_8bit(Image& img) {
    for (auto& v : img.data) {
        const float clamped = std::clamp(v, 0.0f, 1.0f);
        v = std::round(clamped * 255.0f) / 255.0f;
    }
}

float pixel_saturation(float r, float g, float b) {
    const float mx = std::max({r, g, b});
    const float mn = std::min({r, g, b});
    return mx > 0.0f ? (mx - mn) / mx : 0.0f;
}

}  // namespace medgrad
