#pragma once

#include <vector>

#include "medgrad/tensor.hpp"

namespace medgrad {

// Per-pixel Shannon entropy (bits) of quantized gray levels over a disk
// neighborhood, reflect padding at the borders.
struct EntropyMap {
    int height = 0;
    int width = 0;
    int radius = 0;
    int bins = 0;
    std::vector<float> values;

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Reference implementation: rebuilds the disk histogram from scratch at every
// pixel. Gray values are quantized into `bins` equal-width bins over [0,1];
// entropy is -sum f*log2(f) over occupied bins.
EntropyMap local_entropy_ref(const std::vector<float>& gray, int height, int width,
                             int radius, int bins);

// Sliding-window variant: per scan row, the disk histogram is updated
// incrementally (one column of the disk leaves, one enters). Produces the
// same integer histograms as the reference, so results match bitwise.
EntropyMap local_entropy_fast(const std::vector<float>& gray, int height, int width,
                              int radius, int bins);

enum class EntropyNorm { MinMax, MaxEntropy };

// Average-pool the entropy map over each patch cell, then normalize:
// min-max to [0,1] (an all-constant map becomes all zeros), or divide by
// log2(bins) in max-entropy mode. Maps whose size is not divisible by the
// grid are reflect-padded first.
Tensorf entropy_weights(const EntropyMap& map, int grid_rows, int grid_cols,
                        EntropyNorm norm = EntropyNorm::MinMax);

}  // namespace medgrad
