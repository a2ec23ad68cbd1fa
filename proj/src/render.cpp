#include "medgrad/render.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "medgrad/png.hpp"

namespace medgrad {

namespace {

struct Stop {
    float t, r, g, b;
};
constexpr Stop kHeatStops[] = {
    {0.00f, 0.05f, 0.03f, 0.53f},
    {0.25f, 0.02f, 0.60f, 0.85f},
    {0.50f, 0.15f, 0.80f, 0.25f},
    {0.75f, 0.95f, 0.85f, 0.10f},
    {1.00f, 0.80f, 0.05f, 0.05f},
};

// 5x7 glyphs, one byte per row, low 5 bits used (MSB = left column)
struct Glyph {
    char ch;
    std::array<std::uint8_t, 7> rows;
};
constexpr Glyph kFont[] = {
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x13, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x1B, 0x11}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x06, 0x08, 0x10, 0x1F}},
    {'3', {0x0E, 0x11, 0x01, 0x06, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'-', {0x00, 0x00, 0x00, 0x0E, 0x00, 0x00, 0x00}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char c) {
    for (const auto& g : kFont)
        if (g.ch == c) return &g;
    return nullptr;
}

constexpr int kLabelStrip = 11;
constexpr int kMargin = 2;

void fill_rect(Image& img, int y0, int x0, int h, int w, float r, float g, float b) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) {
            if (y < 0 || x < 0 || y >= img.height || x >= img.width) continue;
            img.at(y, x, 0) = r;
            img.at(y, x, 1) = g;
            img.at(y, x, 2) = b;
        }
}

void paste(Image& dst, const Image& src, int y0, int x0) {
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            for (int c = 0; c < 3; ++c) dst.at(y0 + y, x0 + x, c) = src.at(y, x, c);
}

Image overlay_map(const Image& image, const SaliencyMap& map, float alpha) {
    const auto up = upsample_bilinear(map, image.height, image.width);
    Image out(image.height, image.width);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            float r, g, b;
            heat_color(up[static_cast<std::size_t>(y) * image.width + x], r, g, b);
            out.at(y, x, 0) = alpha * r + (1 - alpha) * image.at(y, x, 0);
            out.at(y, x, 1) = alpha * g + (1 - alpha) * image.at(y, x, 1);
            out.at(y, x, 2) = alpha * b + (1 - alpha) * image.at(y, x, 2);
        }
    return out;
}

// panel cell: image area + label strip underneath
void draw_cell(Image& canvas, int y0, int x0, const Image& content, const std::string& label) {
    paste(canvas, content, y0, x0);
    fill_rect(canvas, y0 + content.height, x0, kLabelStrip, content.width, 0.93f, 0.93f, 0.93f);
    const int max_chars = std::max(0, (content.width - 2) / 6);
    draw_text(canvas, x0 + 1, y0 + content.height + 2,
              label.substr(0, static_cast<std::size_t>(max_chars)));
}

}  // namespace

void heat_color(float v, float& r, float& g, float& b) {
    v = std::clamp(v, 0.0f, 1.0f);
    for (std::size_t i = 1; i < std::size(kHeatStops); ++i) {
        if (v <= kHeatStops[i].t) {
            const auto& lo = kHeatStops[i - 1];
            const auto& hi = kHeatStops[i];
            const float t = (v - lo.t) / (hi.t - lo.t);
            r = lo.r + t * (hi.r - lo.r);
            g = lo.g + t * (hi.g - lo.g);
            b = lo.b + t * (hi.b - lo.b);
            return;
        }
    }
    r = kHeatStops[4].r;
    g = kHeatStops[4].g;
    b = kHeatStops[4].b;
}

void draw_text(Image& canvas, int x, int y, const std::string& text, float r, float g, float b) {
    int cx = x;
    for (char raw : text) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
        const Glyph* glyph = find_glyph(c);
        if (glyph) {
            for (int gy = 0; gy < 7; ++gy)
                for (int gx = 0; gx < 5; ++gx) {
                    if (!(glyph->rows[gy] & (0x10 >> gx))) continue;
                    const int py = y + gy, px = cx + gx;
                    if (py < 0 || px < 0 || py >= canvas.height || px >= canvas.width) continue;
                    canvas.at(py, px, 0) = r;
                    canvas.at(py, px, 1) = g;
                    canvas.at(py, px, 2) = b;
                }
        }
        cx += 6;
    }
}

std::vector<std::uint8_t> render_panel(const Image& image, const std::vector<SaliencyMap>& maps,
                                       const std::vector<std::string>& labels, float alpha) {
    if (labels.size() != maps.size())
        throw ContractError("render_panel: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(maps.size()) + " maps");
    if (alpha < 0.0f || alpha > 1.0f) throw ContractError("render_panel: alpha must be in [0,1]");
    const int n = static_cast<int>(maps.size()) + 1;
    const int cell_w = image.width;
    const int cell_h = image.height + kLabelStrip;
    Image canvas(kMargin + cell_h + kMargin, kMargin + n * (cell_w + kMargin));
    fill_rect(canvas, 0, 0, canvas.height, canvas.width, 1.0f, 1.0f, 1.0f);

    draw_cell(canvas, kMargin, kMargin, image, "original");
    for (std::size_t m = 0; m < maps.size(); ++m)
        draw_cell(canvas, kMargin, kMargin + static_cast<int>(m + 1) * (cell_w + kMargin),
                  overlay_map(image, maps[m], alpha), labels[m]);

    quantize_to_8bit(canvas);
    return png_encode_image(canvas);
}

std::pair<std::vector<std::uint8_t>, GridLayout> render_grid(
    const Image& image, const std::vector<std::string>& captions,
    const std::vector<std::vector<SaliencyMap>>& maps,
    const std::vector<std::string>& method_labels, float alpha) {
    if (captions.empty()) throw ContractError("render_grid: no captions");
    if (maps.size() != captions.size())
        throw ContractError("render_grid: map columns do not match captions");
    for (const auto& column : maps)
        if (column.size() != method_labels.size())
            throw ContractError("render_grid: map rows do not match method labels");

    GridLayout layout;
    layout.rows = static_cast<int>(method_labels.size()) + 1;
    layout.cols = static_cast<int>(captions.size());
    layout.cell_w = image.width;
    layout.cell_h = image.height + kLabelStrip;

    Image canvas(kMargin + layout.rows * (layout.cell_h + kMargin),
                 kMargin + layout.cols * (layout.cell_w + kMargin));
    fill_rect(canvas, 0, 0, canvas.height, canvas.width, 1.0f, 1.0f, 1.0f);

    for (int c = 0; c < layout.cols; ++c) {
        const int x0 = kMargin + c * (layout.cell_w + kMargin);
        draw_cell(canvas, kMargin, x0, image, captions[static_cast<std::size_t>(c)]);
        for (int r = 1; r < layout.rows; ++r) {
            const int y0 = kMargin + r * (layout.cell_h + kMargin);
            draw_cell(canvas, y0, x0,
                      overlay_map(image, maps[static_cast<std::size_t>(c)]
                                           [static_cast<std::size_t>(r - 1)], alpha),
                      method_labels[static_cast<std::size_t>(r - 1)]);
        }
    }
    quantize_to_8bit(canvas);
    return {png_encode_image(canvas), layout};
}

}  // namespace medgrad
