#include "medgrad/runconfig.hpp"

#include <json.hpp>

#include <set>

#include "medgrad/png.hpp"

using nlohmann::json;

namespace medgrad {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& section) {
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw FormatError("config: unknown key '" + key + "' in " + section);
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

void RunConfig::validate() const {
    if (!(train.split_fraction > 0.0 && train.split_fraction < 1.0))
        throw ContractError("config: train.split_fraction must be in (0, 1)");
    if (train.epochs < 0) throw ContractError("config: train.epochs must be >= 0");
    if (train.batch_size < 2) throw ContractError("config: train.batch_size must be >= 2");
    if (!(train.lr > 0.0f)) throw ContractError("config: train.lr must be positive");
    if (data.source != "synthetic" && data.source != "external")
        throw ContractError("config: data.source must be 'synthetic' or 'external'");
    explain.validate();
}

RunConfig RunConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("config: not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"model", "train", "explain", "data", "threads"}, "top level");

    RunConfig cfg;
    if (j.contains("model")) {
        const json& m = j["model"];
        reject_unknown(m,
                       {"image_size", "patch_size", "vision_layers", "vision_heads", "vision_dim",
                        "text_layers", "text_heads", "text_dim", "vocab_size", "context_length",
                        "embed_dim", "logit_scale_init", "mlp_ratio"},
                       "model");
        maybe(m, "image_size", cfg.model.image_size);
        maybe(m, "patch_size", cfg.model.patch_size);
        maybe(m, "vision_layers", cfg.model.vision_layers);
        maybe(m, "vision_heads", cfg.model.vision_heads);
        maybe(m, "vision_dim", cfg.model.vision_dim);
        maybe(m, "text_layers", cfg.model.text_layers);
        maybe(m, "text_heads", cfg.model.text_heads);
        maybe(m, "text_dim", cfg.model.text_dim);
        maybe(m, "vocab_size", cfg.model.vocab_size);
        maybe(m, "context_length", cfg.model.context_length);
        maybe(m, "embed_dim", cfg.model.embed_dim);
        maybe(m, "logit_scale_init", cfg.model.logit_scale_init);
        maybe(m, "mlp_ratio", cfg.model.mlp_ratio);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        reject_unknown(t, {"epochs", "batch_size", "lr", "seed", "split_fraction", "augment"},
                       "train");
        maybe(t, "epochs", cfg.train.epochs);
        maybe(t, "batch_size", cfg.train.batch_size);
        maybe(t, "lr", cfg.train.lr);
        maybe(t, "seed", cfg.train.seed);
        maybe(t, "split_fraction", cfg.train.split_fraction);
        maybe(t, "augment", cfg.train.augment);
    }
    if (j.contains("explain")) {
        const json& e = j["explain"];
        reject_unknown(e, {"disk_radius", "bins", "entropy_normalization", "overlay_alpha"},
                       "explain");
        maybe(e, "disk_radius", cfg.explain.disk_radius);
        maybe(e, "bins", cfg.explain.bins);
        if (e.contains("entropy_normalization")) {
            const auto mode = e["entropy_normalization"].get<std::string>();
            if (mode == "minmax")
                cfg.explain.entropy_normalization = EntropyNorm::MinMax;
            else if (mode == "max-entropy")
                cfg.explain.entropy_normalization = EntropyNorm::MaxEntropy;
            else
                throw FormatError("config: entropy_normalization must be 'minmax' or "
                                  "'max-entropy', got '" + mode + "'");
        }
        maybe(e, "overlay_alpha", cfg.explain.overlay_alpha);
    }
    if (j.contains("data")) {
        const json& d = j["data"];
        reject_unknown(d, {"source", "k_classes", "n_pairs", "dir"}, "data");
        maybe(d, "source", cfg.data.source);
        maybe(d, "k_classes", cfg.data.k_classes);
        maybe(d, "n_pairs", cfg.data.n_pairs);
        maybe(d, "dir", cfg.data.dir);
    }
    maybe(j, "threads", cfg.threads);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    const auto bytes = read_file(path);
    return from_json_string(std::string(bytes.begin(), bytes.end()));
}

std::string RunConfig::to_json_string() const {
    json j{
        {"model", json::parse(model.to_json_string())},
        {"train",
         {{"epochs", train.epochs},
          {"batch_size", train.batch_size},
          {"lr", train.lr},
          {"seed", train.seed},
          {"split_fraction", train.split_fraction},
          {"augment", train.augment}}},
        {"explain",
         {{"disk_radius", explain.disk_radius},
          {"bins", explain.bins},
          {"entropy_normalization",
           explain.entropy_normalization == EntropyNorm::MinMax ? "minmax" : "max-entropy"},
          {"overlay_alpha", explain.overlay_alpha}}},
        {"data",
         {{"source", data.source},
          {"k_classes", data.k_classes},
          {"n_pairs", data.n_pairs},
          {"dir", data.dir}}},
        {"threads", threads},
    };
    return j.dump(2);
}

}  // namespace medgrad
