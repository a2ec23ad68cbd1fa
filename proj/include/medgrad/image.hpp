#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medgrad/errors.hpp"

namespace medgrad {

// Interleaved RGB raster, float values in [0,1], row-major.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // height*width*3

    Image() = default;
    Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0f) {}

    float& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

// Binary lesion mask, 1 = lesion.
struct ImageMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    ImageMask() = default;
    ImageMask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += (v != 0);
        return n;
    }
};

enum class AugmentOp { FlipH, FlipV, Rot90, Rot180, Rot270 };

// Exact pixel permutations; rotations require a square raster.
Image augment_image(const Image& img, AugmentOp op);
ImageMask augment_mask(const ImageMask& mask, AugmentOp op);

// Rec. 601 luminance: 0.299 R + 0.587 G + 0.114 B.
std::vector<float> to_gray(const Image& img);

// Bilinear resampling with half-pixel centers (used only when ingesting
// external images; generated data is already at target size).
Image resize_bilinear(const Image& img, int new_h, int new_w);

// Snap values to the 8-bit grid (round(v*255)/255) so the in-memory pipeline
// matches what a PNG round-trip produces.
void quantize_to_8bit(Image& img);

// HSV saturation of one pixel: (max-min)/max, 0 for black.
float pixel_saturation(float r, float g, float b);

}  // namespace medgrad
