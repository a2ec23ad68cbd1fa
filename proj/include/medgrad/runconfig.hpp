#pragma once

#include <cstdint>
#include <string>

#include "medgrad/model.hpp"
#include "medgrad/saliency.hpp"

namespace medgrad {

// Experiment configuration: JSON file with sections "model", "train",
// "explain", "data". Unknown keys are rejected so a typo cannot silently
// fall back to a default. Command-line flags override file values, which
// override the built-in defaults.
struct RunConfig {
    ModelConfig model;

    struct Train {
        int epochs = 30;
        int batch_size = 64;
        float lr = 3e-4f;  // toy-scale default; paper-mode uses 1e-5
        std::uint64_t seed = 42;
        double split_fraction = 0.75;
        bool augment = true;
    } train;

    ExplainConfig explain;

    struct Data {
        std::string source = "synthetic";  // synthetic | external
        int k_classes = 8;
        int n_pairs = 800;
        std::string dir;
    } data;

    unsigned threads = 1;

    void validate() const;

    static RunConfig from_json_string(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json_string() const;
};

}  // namespace medgrad
