#include "medgrad/model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "medgrad/adam.hpp"
#include "medgrad/model_graph.hpp"
#include "medgrad/ops.hpp"
#include "medgrad/rng.hpp"
#include "medgrad/util.hpp"

using nlohmann::json;

namespace medgrad {

void ModelConfig::validate() const {
    if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
        throw ContractError("model config: image_size must be a positive multiple of patch_size");
    if (vision_dim <= 0 || vision_heads <= 0 || vision_dim % vision_heads != 0)
        throw ContractError("model config: vision_dim must be divisible by vision_heads");
    if (text_dim <= 0 || text_heads <= 0 || text_dim % text_heads != 0)
        throw ContractError("model config: text_dim must be divisible by text_heads");
    if (vision_layers <= 0 || text_layers <= 0)
        throw ContractError("model config: layer counts must be positive");
    if (vocab_size < 3) throw ContractError("model config: vocab_size must be >= 3");
    if (context_length < 2) throw ContractError("model config: context_length must be >= 2");
    if (embed_dim <= 0 || mlp_ratio <= 0)
        throw ContractError("model config: embed_dim and mlp_ratio must be positive");
}

std::string ModelConfig::to_json_string() const {
    json j{{"image_size", image_size},       {"patch_size", patch_size},
           {"vision_layers", vision_layers}, {"vision_heads", vision_heads},
           {"vision_dim", vision_dim},       {"text_layers", text_layers},
           {"text_heads", text_heads},       {"text_dim", text_dim},
           {"vocab_size", vocab_size},       {"context_length", context_length},
           {"embed_dim", embed_dim},         {"logit_scale_init", logit_scale_init},
           {"mlp_ratio", mlp_ratio}};
    return j.dump();
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    ModelConfig cfg;
    try {
        j.at("image_size").get_to(cfg.image_size);
        j.at("patch_size").get_to(cfg.patch_size);
        j.at("vision_layers").get_to(cfg.vision_layers);
        j.at("vision_heads").get_to(cfg.vision_heads);
        j.at("vision_dim").get_to(cfg.vision_dim);
        j.at("text_layers").get_to(cfg.text_layers);
        j.at("text_heads").get_to(cfg.text_heads);
        j.at("text_dim").get_to(cfg.text_dim);
        j.at("vocab_size").get_to(cfg.vocab_size);
        j.at("context_length").get_to(cfg.context_length);
        j.at("embed_dim").get_to(cfg.embed_dim);
        j.at("logit_scale_init").get_to(cfg.logit_scale_init);
        j.at("mlp_ratio").get_to(cfg.mlp_ratio);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    return cfg;
}

namespace {

Tensorf normal_init(Shape shape, Rng& rng, float stddev) {
    Tensorf t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.normal(0.0, stddev));
    t.requires_grad = true;
    return t;
}

// weight matrices scale with fan-in; embeddings use a fixed small scale
Tensorf fanin_init(Shape shape, Rng& rng) {
    const float stddev = 1.0f / std::sqrt(static_cast<float>(shape[0]));
    return normal_init(std::move(shape), rng, stddev);
}

Tensorf const_init(Shape shape, float value) {
    Tensorf t = Tensorf::full(std::move(shape), value);
    t.requires_grad = true;
    return t;
}

BlockParams<float> init_block(int dim, int mlp_ratio, Rng& rng) {
    const auto d = static_cast<std::size_t>(dim);
    const auto hid = static_cast<std::size_t>(dim * mlp_ratio);
    BlockParams<float> b;
    b.ln1_g = const_init({1, d}, 1.0f);
    b.ln1_b = const_init({1, d}, 0.0f);
    b.attn.wq = fanin_init({d, d}, rng);
    b.attn.bq = const_init({1, d}, 0.0f);
    b.attn.wk = fanin_init({d, d}, rng);
    b.attn.bk = const_init({1, d}, 0.0f);
    b.attn.wv = fanin_init({d, d}, rng);
    b.attn.bv = const_init({1, d}, 0.0f);
    b.attn.wo = fanin_init({d, d}, rng);
    b.attn.bo = const_init({1, d}, 0.0f);
    b.ln2_g = const_init({1, d}, 1.0f);
    b.ln2_b = const_init({1, d}, 0.0f);
    b.mlp_w1 = fanin_init({d, hid}, rng);
    b.mlp_b1 = const_init({1, hid}, 0.0f);
    b.mlp_w2 = fanin_init({hid, d}, rng);
    b.mlp_b2 = const_init({1, d}, 0.0f);
    return b;
}

}  // namespace

ClipModel ClipModel::init(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ClipModel m;
    m.cfg = cfg;

    const auto dv = static_cast<std::size_t>(cfg.vision_dim);
    const auto dt = static_cast<std::size_t>(cfg.text_dim);
    const auto de = static_cast<std::size_t>(cfg.embed_dim);
    const auto patch_len = static_cast<std::size_t>(cfg.patch_size * cfg.patch_size * 3);
    const auto n_tokens = static_cast<std::size_t>(cfg.n_patches() + 1);

    auto& v = m.params.vision;
    v.patch_w = fanin_init({patch_len, dv}, rng);
    v.patch_b = const_init({1, dv}, 0.0f);
    v.cls_token = normal_init({1, dv}, rng, 0.1f);
    v.pos = normal_init({n_tokens, dv}, rng, 0.1f);
    for (int i = 0; i < cfg.vision_layers; ++i)
        v.blocks.push_back(init_block(cfg.vision_dim, cfg.mlp_ratio, rng));
    v.ln_post_g = const_init({1, dv}, 1.0f);
    v.ln_post_b = const_init({1, dv}, 0.0f);
    v.proj = fanin_init({dv, de}, rng);

    auto& t = m.params.text;
    t.tok_embed = normal_init({static_cast<std::size_t>(cfg.vocab_size), dt}, rng, 0.1f);
    t.pos = normal_init({static_cast<std::size_t>(cfg.context_length), dt}, rng, 0.1f);
    for (int i = 0; i < cfg.text_layers; ++i)
        t.blocks.push_back(init_block(cfg.text_dim, cfg.mlp_ratio, rng));
    t.ln_final_g = const_init({1, dt}, 1.0f);
    t.ln_final_b = const_init({1, dt}, 0.0f);
    t.proj = fanin_init({dt, de}, rng);

    m.params.log_temperature = const_init({1}, cfg.logit_scale_init);
    return m;
}

std::vector<Tensorf*> ClipModel::param_ptrs() {
    std::vector<Tensorf*> out;
    params.for_each([&](const std::string&, Tensorf& t) { out.push_back(&t); });
    return out;
}

std::size_t ClipModel::param_count() const {
    std::size_t n = 0;
    params.for_each([&](const std::string&, const Tensorf& t) { n += t.size(); });
    return n;
}

void ClipModel::zero_grads() {
    params.for_each([&](const std::string&, Tensorf& t) { t.zero_grad(); });
}

bool ClipModel::all_finite() const {
    bool ok = true;
    params.for_each([&](const std::string&, const Tensorf& t) { ok = ok && t.all_finite(); });
    return ok;
}

std::uint64_t ClipModel::params_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    params.for_each([&](const std::string& name, const Tensorf& t) {
        h = fnv1a64(name.data(), name.size(), h);
        h = fnv1a64(t.data.data(), t.data.size() * sizeof(float), h);
    });
    return h;
}

void ClipModel::clamp_temperature() {
    float& lt = params.log_temperature.data[0];
    lt = std::clamp(lt, 0.0f, std::log(100.0f));
}

std::vector<TokenSeq> ClipBundle::prompt_tokens() const {
    std::vector<TokenSeq> out;
    out.reserve(classes.size());
    for (const auto& c : classes)
        out.push_back(vocab.encode(c.prompt, static_cast<std::size_t>(model.cfg.context_length)));
    return out;
}

std::pair<Tensorf, EncoderActivations> encode_image(const ClipModel& model, const Image& image) {
    Tapef tape;
    auto vars = ClipVars<float>::make(tape, model.params);
    auto fwd = vision_forward(tape, model.cfg, vars, image);

    EncoderActivations acts;
    acts.patch_tokens = tape.value(fwd.patch_tokens);
    acts.value_features = tape.value(fwd.value_features);
    acts.cls_query = fwd.cls_query;
    acts.keys = fwd.keys;
    acts.grid_rows = model.cfg.patches_per_side();
    acts.grid_cols = model.cfg.patches_per_side();
    acts.heads = model.cfg.vision_heads;

    Tensorf emb({static_cast<std::size_t>(model.cfg.embed_dim)}, tape.value(fwd.embedding).data);
    return {std::move(emb), std::move(acts)};
}

Tensorf encode_text(const ClipModel& model, const TokenSeq& tokens) {
    Tapef tape;
    auto vars = ClipVars<float>::make(tape, model.params);
    Var emb = text_forward(tape, model.cfg, vars, tokens);
    return Tensorf({static_cast<std::size_t>(model.cfg.embed_dim)}, tape.value(emb).data);
}

Tensorf similarity_matrix(const ClipModel& model, const std::vector<Image>& images,
                          const std::vector<TokenSeq>& texts) {
    if (images.size() != texts.size())
        throw ContractError("similarity_matrix: batch sizes differ (" +
                            std::to_string(images.size()) + " vs " +
                            std::to_string(texts.size()) + ")");
    const std::size_t b = images.size();
    const auto d = static_cast<std::size_t>(model.cfg.embed_dim);
    Tensorf I({b, d}), X({b, d});
    for (std::size_t i = 0; i < b; ++i) {
        auto [emb, acts] = encode_image(model, images[i]);
        std::copy_n(emb.data.data(), d, I.data.data() + i * d);
        auto txt = encode_text(model, texts[i]);
        std::copy_n(txt.data.data(), d, X.data.data() + i * d);
    }
    Tensorf logits = matmul(I, transpose(X));
    const float scale = model.temperature();
    for (auto& v : logits.data) v *= scale;
    return logits;
}

std::vector<float> classify(const ClipModel& model, const Image& image,
                            const std::vector<TokenSeq>& class_prompts) {
    if (class_prompts.size() < 2)
        throw ContractError("classify needs at least 2 class prompts, got " +
                            std::to_string(class_prompts.size()));
    auto [img_emb, acts] = encode_image(model, image);
    Tensorf logits({class_prompts.size()});
    const float scale = model.temperature();
    for (std::size_t i = 0; i < class_prompts.size(); ++i) {
        const Tensorf txt = encode_text(model, class_prompts[i]);
        logits.data[i] = scale * cosine_similarity(img_emb, txt);
    }
    const Tensorf probs = softmax(logits);
    return probs.data;
}

std::vector<EpochLog> train(ClipModel& model, const Dataset& train_data, const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    if (train_data.items.empty()) throw ContractError("train: empty dataset");
    if (cfg.batch_size < 2) throw ContractError("train: batch_size must be >= 2");
    model.cfg.validate();

    const auto param_list = model.param_ptrs();
    AdamState opt = AdamState::init(param_list);
    Rng rng(cfg.seed);
    std::vector<EpochLog> logs;

    std::vector<std::size_t> order(train_data.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<TokenSeq> prompts;
    for (const auto& c : train_data.classes)
        prompts.push_back(train_data.vocab.encode(
            c.prompt, static_cast<std::size_t>(model.cfg.context_length)));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        std::size_t n_seen = 0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            if (end - start < 2) break;  // a contrastive batch needs >= 2 pairs

            std::vector<Image> aug_images;
            std::vector<TokenSeq> aug_tokens;
            aug_images.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const auto& item = train_data.items[order[i]];
                if (cfg.augment) {
                    const auto pick = rng.below(6);  // identity + 5 dihedral ops
                    aug_images.push_back(pick == 0 ? item.image
                                                   : augment_image(item.image,
                                                                   static_cast<AugmentOp>(pick - 1)));
                    const std::string caption = augment_caption(item.caption, rng);
                    aug_tokens.push_back(train_data.vocab.encode(
                        caption, static_cast<std::size_t>(model.cfg.context_length)));
                } else {
                    aug_images.push_back(item.image);
                    aug_tokens.push_back(item.tokens);
                }
            }

            Tapef tape;
            tape.reserve(4096);
            auto vars = ClipVars<float>::make_tracked(tape, model.params);
            std::vector<const Image*> img_ptrs;
            std::vector<const TokenSeq*> txt_ptrs;
            for (std::size_t i = 0; i < aug_images.size(); ++i) {
                img_ptrs.push_back(&aug_images[i]);
                txt_ptrs.push_back(&aug_tokens[i]);
            }
            Var loss = contrastive_graph(tape, model.cfg, vars, img_ptrs, txt_ptrs);
            const float loss_val = tape.value(loss).data[0];
            if (!std::isfinite(loss_val))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

            model.zero_grads();
            tape.backward(loss);
            adam_step(param_list, opt, cfg.lr);
            model.clamp_temperature();

            loss_sum += static_cast<double>(loss_val) * static_cast<double>(end - start);
            n_seen += end - start;
        }
        if (!model.all_finite())
            throw NumericError("train: non-finite parameters after epoch " +
                               std::to_string(epoch));

        EpochLog log;
        log.epoch = epoch;
        log.loss = n_seen ? loss_sum / static_cast<double>(n_seen) : 0.0;

        // accuracy estimate on a seeded subsample of the training items
        if (!prompts.empty() && prompts.size() >= 2) {
            std::vector<std::size_t> sample(order.size());
            for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i;
            rng.shuffle(sample.begin(), sample.end());
            const std::size_t n = std::min(cfg.accuracy_sample, sample.size());
            std::size_t correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto& item = train_data.items[sample[i]];
                const auto probs = classify(model, item.image, prompts);
                const auto pred = static_cast<int>(
                    std::max_element(probs.begin(), probs.end()) - probs.begin());
                correct += (pred == item.class_id);
            }
            log.train_acc = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
        }
        logs.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return logs;
}

}  // namespace medgrad
