#include "medgrad/entropy.hpp"

#include <algorithm>
#include <cmath>

#include "medgrad/errors.hpp"

namespace medgrad {

namespace {

// half-sample symmetric reflection: -1 -> 0, n -> n-1
int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

std::vector<int> quantize(const std::vector<float>& gray, int bins) {
    std::vector<int> q(gray.size());
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const float g = std::clamp(gray[i], 0.0f, 1.0f);
        q[i] = std::min(bins - 1, static_cast<int>(g * static_cast<float>(bins)));
    }
    return q;
}

// -(c/N) log2(c/N) tabulated over all possible counts; the disk size N is
// constant, so both variants share one table and therefore one arithmetic
std::vector<float> entropy_term_lut(std::uint32_t total) {
    std::vector<float> lut(total + 1, 0.0f);
    const float inv_total = 1.0f / static_cast<float>(total);
    for (std::uint32_t c = 1; c <= total; ++c) {
        const float f = static_cast<float>(c) * inv_total;
        lut[c] = -(f * std::log2(f));
    }
    return lut;
}

// identical count vectors give bitwise-identical entropies: same loop order,
// same table (empty bins contribute +0.0f, which never changes the sum)
float entropy_from_counts(const std::vector<std::uint32_t>& counts,
                          const std::vector<float>& lut) {
    float e = 0.0f;
    for (std::uint32_t c : counts) e += lut[c];
    return e;
}

void check_args(int height, int width, int radius, int bins) {
    if (height <= 0 || width <= 0) throw DimensionError("entropy: empty image");
    if (radius < 1) throw ContractError("entropy: radius must be >= 1");
    if (bins < 2) throw ContractError("entropy: bins must be >= 2");
}

// disk half-width per row offset: dx in [-hw(dy), hw(dy)]
std::vector<int> disk_halfwidths(int radius) {
    std::vector<int> hw(radius + 1);
    for (int dy = 0; dy <= radius; ++dy)
        hw[dy] = static_cast<int>(std::floor(std::sqrt(
            static_cast<double>(radius) * radius - static_cast<double>(dy) * dy)));
    return hw;
}

}  // namespace

EntropyMap local_entropy_ref(const std::vector<float>& gray, int height, int width,
                             int radius, int bins) {
    check_args(height, width, radius, bins);
    if (gray.size() != static_cast<std::size_t>(height) * width)
        throw DimensionError("entropy: gray buffer does not match dimensions");
    const auto q = quantize(gray, bins);
    const auto hw = disk_halfwidths(radius);

    std::uint32_t disk_size = 0;
    for (int dy = -radius; dy <= radius; ++dy) disk_size += 2 * hw[std::abs(dy)] + 1;
    const auto lut = entropy_term_lut(disk_size);

    EntropyMap map;
    map.height = height;
    map.width = width;
    map.radius = radius;
    map.bins = bins;
    map.values.resize(gray.size());

    std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins));
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            std::fill(counts.begin(), counts.end(), 0u);
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = reflect(y + dy, height);
                const int w = hw[std::abs(dy)];
                for (int dx = -w; dx <= w; ++dx) {
                    const int xx = reflect(x + dx, width);
                    ++counts[q[static_cast<std::size_t>(yy) * width + xx]];
                }
            }
            map.values[static_cast<std::size_t>(y) * width + x] =
                entropy_from_counts(counts, lut);
        }
    return map;
}

EntropyMap local_entropy_fast(const std::vector<float>& gray, int height, int width,
                              int radius, int bins) {
    check_args(height, width, radius, bins);
    if (gray.size() != static_cast<std::size_t>(height) * width)
        throw DimensionError("entropy: gray buffer does not match dimensions");
    const auto q = quantize(gray, bins);
    const auto hw = disk_halfwidths(radius);

    std::uint32_t disk_size = 0;
    for (int dy = -radius; dy <= radius; ++dy) disk_size += 2 * hw[std::abs(dy)] + 1;
    const auto lut = entropy_term_lut(disk_size);

    EntropyMap map;
    map.height = height;
    map.width = width;
    map.radius = radius;
    map.bins = bins;
    map.values.resize(gray.size());

    // per disk row: reflected row pointer plus that row's half-width
    std::vector<const int*> rows(2 * radius + 1);
    std::vector<int> widths(2 * radius + 1);

    std::vector<std::uint32_t> counts(static_cast<std::size_t>(bins));
    for (int y = 0; y < height; ++y) {
        for (int dy = -radius; dy <= radius; ++dy) {
            rows[dy + radius] = q.data() + static_cast<std::size_t>(reflect(y + dy, height)) * width;
            widths[dy + radius] = hw[std::abs(dy)];
        }
        // build the histogram for x = 0 directly
        std::fill(counts.begin(), counts.end(), 0u);
        for (int r = 0; r < 2 * radius + 1; ++r)
            for (int dx = -widths[r]; dx <= widths[r]; ++dx) ++counts[rows[r][reflect(dx, width)]];
        map.values[static_cast<std::size_t>(y) * width] = entropy_from_counts(counts, lut);

        // slide: per disk row, the trailing pixel leaves and the leading enters
        for (int x = 1; x < width; ++x) {
            for (int r = 0; r < 2 * radius + 1; ++r) {
                const int w = widths[r];
                const int lead = x + w;
                const int trail = x - 1 - w;
                --counts[rows[r][trail >= 0 ? trail : reflect(trail, width)]];
                ++counts[rows[r][lead < width ? lead : reflect(lead, width)]];
            }
            map.values[static_cast<std::size_t>(y) * width + x] =
                entropy_from_counts(counts, lut);
        }
    }
    return map;
}

Tensorf entropy_weights(const EntropyMap& map, int grid_rows, int grid_cols, EntropyNorm norm) {
    if (grid_rows < 1 || grid_cols < 1) throw ContractError("entropy_weights: empty grid");

    // reflect-pad to a multiple of the grid when needed
    int h = map.height, w = map.width;
    const int ph = (grid_rows - h % grid_rows) % grid_rows;
    const int pw = (grid_cols - w % grid_cols) % grid_cols;
    const std::vector<float>* src = &map.values;
    std::vector<float> padded;
    if (ph || pw) {
        padded.resize(static_cast<std::size_t>(h + ph) * (w + pw));
        for (int y = 0; y < h + ph; ++y)
            for (int x = 0; x < w + pw; ++x)
                padded[static_cast<std::size_t>(y) * (w + pw) + x] =
                    map.values[static_cast<std::size_t>(reflect(y, h)) * w + reflect(x, w)];
        src = &padded;
        h += ph;
        w += pw;
    }

    const int cell_h = h / grid_rows;
    const int cell_w = w / grid_cols;
    Tensorf out({static_cast<std::size_t>(grid_rows), static_cast<std::size_t>(grid_cols)});
    for (int r = 0; r < grid_rows; ++r)
        for (int c = 0; c < grid_cols; ++c) {
            float sum = 0.0f;
            for (int y = r * cell_h; y < (r + 1) * cell_h; ++y)
                for (int x = c * cell_w; x < (c + 1) * cell_w; ++x)
                    sum += (*src)[static_cast<std::size_t>(y) * w + x];
            out.data[static_cast<std::size_t>(r) * grid_cols + c] =
                sum / static_cast<float>(cell_h * cell_w);
        }

    if (norm == EntropyNorm::MaxEntropy) {
        const float denom = std::log2(static_cast<float>(map.bins));
        for (auto& v : out.data) v /= denom;
    } else {
        const auto [mn_it, mx_it] = std::minmax_element(out.data.begin(), out.data.end());
        const float mn = *mn_it, mx = *mx_it;
        if (mx > mn) {
            for (auto& v : out.data) v = (v - mn) / (mx - mn);
        } else {
            // degenerate constant map: weights are all zero by convention
            std::fill(out.data.begin(), out.data.end(), 0.0f);
        }
    }
    return out;
}

}  // namespace medgrad
