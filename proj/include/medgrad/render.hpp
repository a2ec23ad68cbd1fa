#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medgrad/image.hpp"
#include "medgrad/saliency.hpp"

namespace medgrad {

// Blue-to-red heat colormap: piecewise-linear through
// 0.00 dark blue (0.05, 0.03, 0.53), 0.25 cyan (0.02, 0.60, 0.85),
// 0.50 green (0.15, 0.80, 0.25), 0.75 yellow (0.95, 0.85, 0.10),
// 1.00 red (0.80, 0.05, 0.05).
void heat_color(float v, float& r, float& g, float& b);

// Draw 5x7 uppercase text into an image; lowercase input is uppercased.
void draw_text(Image& canvas, int x, int y, const std::string& text,
               float r = 0.15f, float g = 0.15f, float b = 0.15f);

// One row of panels: the original image followed by one overlay per map
// (overlay = alpha * colormap(upsampled map) + (1-alpha) * image), a text
// label baked under each panel. labels run parallel to maps.
std::vector<std::uint8_t> render_panel(const Image& image, const std::vector<SaliencyMap>& maps,
                                       const std::vector<std::string>& labels, float alpha);

struct GridLayout {
    int rows = 0;
    int cols = 0;
    int cell_w = 0;
    int cell_h = 0;
};

// Comparison grid: columns are captions, row 0 is the original image, each
// following row is one method. maps[c][m] is the map for caption c, method m.
std::pair<std::vector<std::uint8_t>, GridLayout> render_grid(
    const Image& image, const std::vector<std::string>& captions,
    const std::vector<std::vector<SaliencyMap>>& maps,
    const std::vector<std::string>& method_labels, float alpha);

}  // namespace medgrad
