#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "medgrad/model.hpp"
#include "medgrad/synthdata.hpp"

namespace medgrad {

struct ConfusionMatrix {
    int k = 0;
    std::vector<std::int64_t> counts;  // counts[true * k + predicted]

    explicit ConfusionMatrix(int classes = 0)
        : k(classes), counts(static_cast<std::size_t>(classes) * classes, 0) {}

    std::int64_t& at(int true_class, int predicted) {
        return counts[static_cast<std::size_t>(true_class) * k + predicted];
    }
    std::int64_t at(int true_class, int predicted) const {
        return counts[static_cast<std::size_t>(true_class) * k + predicted];
    }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    std::int64_t trace() const {
        std::int64_t t = 0;
        for (int i = 0; i < k; ++i) t += at(i, i);
        return t;
    }
};

struct MetricsReport {
    double accuracy = 0.0;
    double loss = 0.0;
    double precision = 0.0;    // macro
    double recall = 0.0;       // macro
    double f1 = 0.0;           // macro (mean of per-class F1)
    double sensitivity = 0.0;  // == recall
    double specificity = 0.0;  // macro one-vs-rest TN/(TN+FP)
    double clip_score = 0.0;   // mean cosine of matched pairs
    std::size_t n_samples = 0;
    int batch_size = 0;
};

// Classification rates from a confusion matrix (accuracy, macro P/R/F1,
// macro OvR specificity). A class with no predicted positives contributes
// precision 0.
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

// Matched-pair embedding similarity; delegates to cosine_similarity.
float clip_score(const Tensorf& image_embedding, const Tensorf& text_embedding);

// Full protocol: classify every item against the bundle's class prompts,
// contrastive loss over matched batches (mean per sample), mean CLIP score.
std::pair<MetricsReport, ConfusionMatrix> evaluate(const ClipBundle& bundle,
                                                   const Dataset& data, int batch_size = 64,
                                                   unsigned threads = 1);

// {"accuracy": ..., "loss": ..., ..., "n": int, "confusion": [[int]]}
std::string metrics_to_json(const MetricsReport& report, const ConfusionMatrix& cm);

}  // namespace medgrad
