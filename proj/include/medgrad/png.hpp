#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medgrad/image.hpp"

namespace medgrad {

// Minimal PNG codec.
//
// Encoding writes 8-bit images with filter 0 scanlines and *stored* (level-0)
// deflate blocks, so the bytes depend only on the pixel values — golden files
// and dataset hashes stay stable across zlib versions and platforms.
// Decoding handles any 8-bit non-interlaced gray/RGB/alpha PNG via zlib.

std::vector<std::uint8_t> png_encode_rgb8(const std::vector<std::uint8_t>& pixels,
                                          int width, int height);
std::vector<std::uint8_t> png_encode_gray8(const std::vector<std::uint8_t>& pixels,
                                           int width, int height);

struct DecodedPng {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1, 2, 3 or 4 as stored in the file
    std::vector<std::uint8_t> pixels;
};

DecodedPng png_decode(const std::vector<std::uint8_t>& bytes);

// float-image conveniences (round(v*255) on write, /255 on read)
std::vector<std::uint8_t> png_encode_image(const Image& img);
Image png_decode_image(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> png_encode_mask(const ImageMask& mask);   // 255 = lesion
ImageMask png_decode_mask(const std::vector<std::uint8_t>& bytes);  // >=128 = lesion

// file helpers; IoError carries the path
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace medgrad
