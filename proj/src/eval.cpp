#include "medgrad/eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "medgrad/ops.hpp"
#include "medgrad/util.hpp"

using nlohmann::json;

namespace medgrad {

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.k < 1) throw ContractError("metrics: empty confusion matrix");
    const auto total = cm.total();
    if (total <= 0) throw ContractError("metrics: confusion matrix has no counts");

    MetricsReport r;
    r.n_samples = static_cast<std::size_t>(total);
    r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    double prec_sum = 0, rec_sum = 0, f1_sum = 0, spec_sum = 0;
    for (int c = 0; c < cm.k; ++c) {
        std::int64_t tp = cm.at(c, c), fp = 0, fn = 0;
        for (int o = 0; o < cm.k; ++o) {
            if (o == c) continue;
            fp += cm.at(o, c);
            fn += cm.at(c, o);
        }
        const std::int64_t tn = total - tp - fp - fn;
        const double prec = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double rec = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        prec_sum += prec;
        rec_sum += rec;
        f1_sum += (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        spec_sum += (tn + fp) > 0 ? static_cast<double>(tn) / (tn + fp) : 0.0;
    }
    r.precision = prec_sum / cm.k;
    r.recall = rec_sum / cm.k;
    r.f1 = f1_sum / cm.k;
    r.sensitivity = r.recall;
    r.specificity = spec_sum / cm.k;
    return r;
}

float clip_score(const Tensorf& image_embedding, const Tensorf& text_embedding) {
    return cosine_similarity(image_embedding, text_embedding);
}

std::pair<MetricsReport, ConfusionMatrix> evaluate(const ClipBundle& bundle, const Dataset& data,
                                                   int batch_size, unsigned threads) {
    if (data.items.empty()) throw ContractError("evaluate: empty dataset");
    if (batch_size < 1) throw ContractError("evaluate: batch_size must be >= 1");
    const auto prompts = bundle.prompt_tokens();
    if (prompts.size() < 2) throw ContractError("evaluate: need at least 2 class prompts");

    const ClipModel& model = bundle.model;
    const std::size_t n = data.items.size();
    const auto d = static_cast<std::size_t>(model.cfg.embed_dim);

    // embed prompts once, then images and captions (parallel over items,
    // results land in disjoint slots)
    std::vector<Tensorf> prompt_embs(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i)
        prompt_embs[i] = encode_text(model, prompts[i]);

    std::vector<Tensorf> img_embs(n), txt_embs(n);
    parallel_for(n, threads, [&](std::size_t i) {
        img_embs[i] = encode_image(model, data.items[i].image).first;
        txt_embs[i] = encode_text(model, data.items[i].tokens);
    });

    const float temp = model.temperature();
    ConfusionMatrix cm(static_cast<int>(prompts.size()));
    double clip_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        float best_score = -2.0f;
        for (std::size_t c = 0; c < prompt_embs.size(); ++c) {
            const float s = cosine_similarity(img_embs[i], prompt_embs[c]);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        const int true_class = data.items[i].class_id;
        if (true_class < 0 || true_class >= cm.k)
            throw ContractError("evaluate: item class " + std::to_string(true_class) +
                                " outside prompt table");
        cm.at(true_class, static_cast<int>(best)) += 1;
        clip_sum += clip_score(img_embs[i], txt_embs[i]);
    }

    // contrastive loss over matched batches, averaged per sample
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(n, start + static_cast<std::size_t>(batch_size));
        const std::size_t b = end - start;
        Tensorf logits({b, b});
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t j = 0; j < b; ++j) {
                float dot_ij = 0.0f;
                const float* fi = img_embs[start + i].data.data();
                const float* fj = txt_embs[start + j].data.data();
                for (std::size_t c = 0; c < d; ++c) dot_ij += fi[c] * fj[c];
                logits.at(i, j) = temp * dot_ij;
            }
        loss_sum += static_cast<double>(contrastive_loss(logits)) * static_cast<double>(b);
    }

    MetricsReport report = metrics_from_confusion(cm);
    report.loss = loss_sum / static_cast<double>(n);
    report.clip_score = clip_sum / static_cast<double>(n);
    report.batch_size = batch_size;
    return {report, cm};
}

std::string metrics_to_json(const MetricsReport& report, const ConfusionMatrix& cm) {
    json confusion = json::array();
    for (int t = 0; t < cm.k; ++t) {
        json row = json::array();
        for (int p = 0; p < cm.k; ++p) row.push_back(cm.at(t, p));
        confusion.push_back(row);
    }
    json j{{"accuracy", report.accuracy},
           {"loss", report.loss},
           {"precision", report.precision},
           {"recall", report.recall},
           {"f1", report.f1},
           {"sensitivity", report.sensitivity},
           {"specificity", report.specificity},
           {"clip_score", report.clip_score},
           {"n", report.n_samples},
           {"confusion", confusion}};
    return j.dump(2);
}

}  // namespace medgrad
