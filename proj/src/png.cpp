#include "medgrad/png.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "medgrad/errors.hpp"

namespace medgrad {

namespace {

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t n = 0; n < 256; ++n) {
            std::uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xffffffffu;
    for (std::size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& data) {
    put_u32_be(out, static_cast<std::uint32_t>(data.size()));
    std::vector<std::uint8_t> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    put_u32_be(out, crc32_of(body.data(), body.size()));
}

// zlib container with stored (uncompressed) deflate blocks
std::vector<std::uint8_t> zlib_stored(const std::vector<std::uint8_t>& raw) {
    std::vector<std::uint8_t> z;
    z.push_back(0x78);  // CMF: deflate, 32K window
    z.push_back(0x01);  // FLG: check bits, no dict, fastest
    std::size_t off = 0;
    do {
        const std::size_t n = std::min<std::size_t>(raw.size() - off, 65535);
        const bool final = (off + n == raw.size());
        z.push_back(final ? 1 : 0);
        z.push_back(static_cast<std::uint8_t>(n & 0xff));
        z.push_back(static_cast<std::uint8_t>(n >> 8));
        z.push_back(static_cast<std::uint8_t>(~n & 0xff));
        z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + off, raw.begin() + off + n);
        off += n;
    } while (off < raw.size());
    std::uint32_t adler = adler32(adler32(0, nullptr, 0), raw.data(),
                                  static_cast<uInt>(raw.size()));
    put_u32_be(z, adler);
    return z;
}

std::vector<std::uint8_t> encode_impl(const std::vector<std::uint8_t>& pixels, int width,
                                      int height, int channels) {
    if (width <= 0 || height <= 0 ||
        pixels.size() != static_cast<std::size_t>(width) * height * channels)
        throw DimensionError("png encode: pixel buffer does not match " +
                             std::to_string(width) + "x" + std::to_string(height));
    std::vector<std::uint8_t> out(kSignature, kSignature + 8);

    std::vector<std::uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<std::uint32_t>(width));
    put_u32_be(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);              // color type
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);                                  // no interlace
    append_chunk(out, "IHDR", ihdr);

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * height);
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        raw.insert(raw.end(), pixels.begin() + y * stride, pixels.begin() + (y + 1) * stride);
    }
    append_chunk(out, "IDAT", zlib_stored(raw));
    append_chunk(out, "IEND", {});
    return out;
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace

std::vector<std::uint8_t> png_encode_rgb8(const std::vector<std::uint8_t>& pixels,
                                          int width, int height) {
    return encode_impl(pixels, width, height, 3);
}

std::vector<std::uint8_t> png_encode_gray8(const std::vector<std::uint8_t>& pixels,
                                           int width, int height) {
    return encode_impl(pixels, width, height, 1);
}

DecodedPng png_decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        throw FormatError("png: bad signature");

    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool seen_ihdr = false, seen_iend = false;
    while (pos + 8 <= bytes.size() && !seen_iend) {
        const std::uint32_t len = read_u32_be(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw FormatError("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* data = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw FormatError("png: bad IHDR length");
            width = static_cast<int>(read_u32_be(data));
            height = static_cast<int>(read_u32_be(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            interlace = data[12];
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr) throw FormatError("png: missing IHDR");
    if (width <= 0 || height <= 0) throw FormatError("png: bad dimensions");
    if (bit_depth != 8) throw FormatError("png: only 8-bit depth supported");
    if (interlace != 0) throw FormatError("png: interlaced images not supported");
    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw FormatError("png: unsupported color type " + std::to_string(color_type));
    }

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    const std::size_t raw_size = (stride + 1) * height;
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = raw_size;
    const int rc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || dest_len != raw_size) throw FormatError("png: zlib inflate failed");

    DecodedPng out;
    out.width = width;
    out.height = height;
    out.channels = channels;
    out.pixels.resize(stride * height);
    std::vector<std::uint8_t> prev(stride, 0);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = out.pixels.data() + y * stride;
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<std::size_t>(channels) ? dst[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<std::size_t>(channels) ? prev[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw FormatError("png: bad filter type " + std::to_string(filter));
            }
            dst[i] = static_cast<std::uint8_t>(v & 0xff);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return out;
}

std::vector<std::uint8_t> png_encode_image(const Image& img) {
    std::vector<std::uint8_t> px(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const float v = std::clamp(img.data[i], 0.0f, 1.0f);
        px[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return png_encode_rgb8(px, img.width, img.height);
}

Image png_decode_image(const std::vector<std::uint8_t>& bytes) {
    DecodedPng d = png_decode(bytes);
    Image img(d.height, d.width);
    const int ch = d.channels;
    for (int i = 0; i < d.width * d.height; ++i) {
        float r, g, b;
        if (ch == 1 || ch == 2) {
            r = g = b = d.pixels[i * ch] / 255.0f;
        } else {
            r = d.pixels[i * ch] / 255.0f;
            g = d.pixels[i * ch + 1] / 255.0f;
            b = d.pixels[i * ch + 2] / 255.0f;
        }
        img.data[i * 3] = r;
        img.data[i * 3 + 1] = g;
        img.data[i * 3 + 2] = b;
    }
    return img;
}

std::vector<std::uint8_t> png_encode_mask(const ImageMask& mask) {
    std::vector<std::uint8_t> px(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i) px[i] = mask.data[i] ? 255 : 0;
    return png_encode_gray8(px, mask.width, mask.height);
}

ImageMask png_decode_mask(const std::vector<std::uint8_t>& bytes) {
    DecodedPng d = png_decode(bytes);
    ImageMask m(d.height, d.width);
    for (int i = 0; i < d.width * d.height; ++i)
        m.data[i] = d.pixels[i * d.channels] >= 128 ? 1 : 0;
    return m;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("error reading file: " + path);
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("error writing file: " + path);
}

}  // namespace medgrad
