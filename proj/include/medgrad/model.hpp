#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "medgrad/image.hpp"
#include "medgrad/synthdata.hpp"
#include "medgrad/tensor.hpp"
#include "medgrad/tokenizer.hpp"

namespace medgrad {

struct ModelConfig {
    int image_size = 64;
    int patch_size = 8;
    int vision_layers = 3;
    int vision_heads = 4;
    int vision_dim = 64;
    int text_layers = 2;
    int text_heads = 4;
    int text_dim = 64;
    int vocab_size = 0;  // set when a vocabulary is known
    int context_length = 32;
    int embed_dim = 64;
    float logit_scale_init = 2.6592600f;  // ln(1/0.07)
    int mlp_ratio = 4;

    int patches_per_side() const { return image_size / patch_size; }
    int n_patches() const { return patches_per_side() * patches_per_side(); }
    void validate() const;

    std::string to_json_string() const;
    static ModelConfig from_json_string(const std::string& text);
};

template <typename T>
struct AttnParams {
    Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct BlockParams {
    Tensor<T> ln1_g, ln1_b;
    AttnParams<T> attn;
    Tensor<T> ln2_g, ln2_b;
    Tensor<T> mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

template <typename T>
struct VisionParams {
    Tensor<T> patch_w, patch_b;  // [ps*ps*3 x d], [1 x d]
    Tensor<T> cls_token;         // [1 x d]
    Tensor<T> pos;               // [P+1 x d]
    std::vector<BlockParams<T>> blocks;
    Tensor<T> ln_post_g, ln_post_b;
    Tensor<T> proj;  // [d x D]
};

template <typename T>
struct TextParams {
    Tensor<T> tok_embed;  // [V x d]
    Tensor<T> pos;        // [ctx x d]
    std::vector<BlockParams<T>> blocks;
    Tensor<T> ln_final_g, ln_final_b;
    Tensor<T> proj;  // [d x D]
};

// Full parameter set at one precision. Training uses float; the gradient
// test harness casts to double and runs the same graph.
template <typename T>
struct ClipParams {
    VisionParams<T> vision;
    TextParams<T> text;
    Tensor<T> log_temperature;  // [1]; exp() is the logit scale of Eq-style softmax

    template <typename Self, typename F>
    static void visit(Self& self, F&& fn) {
        auto block = [&](const std::string& prefix, auto& b) {
            fn(prefix + ".ln1_g", b.ln1_g);
            fn(prefix + ".ln1_b", b.ln1_b);
            fn(prefix + ".attn.wq", b.attn.wq);
            fn(prefix + ".attn.bq", b.attn.bq);
            fn(prefix + ".attn.wk", b.attn.wk);
            fn(prefix + ".attn.bk", b.attn.bk);
            fn(prefix + ".attn.wv", b.attn.wv);
            fn(prefix + ".attn.bv", b.attn.bv);
            fn(prefix + ".attn.wo", b.attn.wo);
            fn(prefix + ".attn.bo", b.attn.bo);
            fn(prefix + ".ln2_g", b.ln2_g);
            fn(prefix + ".ln2_b", b.ln2_b);
            fn(prefix + ".mlp_w1", b.mlp_w1);
            fn(prefix + ".mlp_b1", b.mlp_b1);
            fn(prefix + ".mlp_w2", b.mlp_w2);
            fn(prefix + ".mlp_b2", b.mlp_b2);
        };
        fn("vision.patch_w", self.vision.patch_w);
        fn("vision.patch_b", self.vision.patch_b);
        fn("vision.cls_token", self.vision.cls_token);
        fn("vision.pos", self.vision.pos);
        for (std::size_t i = 0; i < self.vision.blocks.size(); ++i)
            block("vision.block" + std::to_string(i), self.vision.blocks[i]);
        fn("vision.ln_post_g", self.vision.ln_post_g);
        fn("vision.ln_post_b", self.vision.ln_post_b);
        fn("vision.proj", self.vision.proj);
        fn("text.tok_embed", self.text.tok_embed);
        fn("text.pos", self.text.pos);
        for (std::size_t i = 0; i < self.text.blocks.size(); ++i)
            block("text.block" + std::to_string(i), self.text.blocks[i]);
        fn("text.ln_final_g", self.text.ln_final_g);
        fn("text.ln_final_b", self.text.ln_final_b);
        fn("text.proj", self.text.proj);
        fn("log_temperature", self.log_temperature);
    }

    template <typename F>
    void for_each(F&& fn) { visit(*this, fn); }
    template <typename F>
    void for_each(F&& fn) const { visit(*this, fn); }

    template <typename U>
    ClipParams<U> cast() const {
        ClipParams<U> out;
        out.vision.blocks.resize(vision.blocks.size());
        out.text.blocks.resize(text.blocks.size());
        std::vector<Tensor<U>*> dst;
        out.for_each([&](const std::string&, Tensor<U>& t) { dst.push_back(&t); });
        std::size_t i = 0;
        for_each([&](const std::string&, const Tensor<T>& t) {
            *dst[i++] = t.template cast<U>();
        });
        return out;
    }
};

// Cached internals of one image forward pass, consumed by the saliency
// methods: final-block patch tokens, their value features mapped into the
// shared embedding space, and the final-block cls query / patch keys.
struct EncoderActivations {
    Tensorf patch_tokens;    // [P x d_v]
    Tensorf value_features;  // [P x D]
    Tensorf cls_query;       // [heads x d_head]
    Tensorf keys;            // [P x heads*d_head]
    int grid_rows = 0;
    int grid_cols = 0;
    int heads = 0;
};

struct ClipModel {
    ModelConfig cfg;
    ClipParams<float> params;

    static ClipModel init(const ModelConfig& cfg, std::uint64_t seed);

    std::vector<Tensorf*> param_ptrs();
    std::size_t param_count() const;
    void zero_grads();
    bool all_finite() const;
    std::uint64_t params_hash() const;

    float temperature() const { return std::exp(params.log_temperature.data[0]); }
    // exp(log_temperature) stays in [1, 100]; called after every optimizer step
    void clamp_temperature();
};

// Model plus everything needed to run it on captions: the vocabulary and the
// per-class canonical prompts. This is what a checkpoint stores.
struct ClipBundle {
    ClipModel model;
    Vocabulary vocab;
    std::vector<ClassInfo> classes;

    std::vector<TokenSeq> prompt_tokens() const;
};

// --- inference ---------------------------------------------------------------

std::pair<Tensorf, EncoderActivations> encode_image(const ClipModel& model, const Image& image);
Tensorf encode_text(const ClipModel& model, const TokenSeq& tokens);

// logits[i][j] = exp(log_temperature) * cos(f_I(i), f_T(j))
Tensorf similarity_matrix(const ClipModel& model, const std::vector<Image>& images,
                          const std::vector<TokenSeq>& texts);

// p(y=i|x): softmax over temperature-scaled cosine similarities
std::vector<float> classify(const ClipModel& model, const Image& image,
                            const std::vector<TokenSeq>& class_prompts);

// --- training ----------------------------------------------------------------

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    float lr = 3e-4f;  // toy-scale default; 1e-5 is the paper-mode setting
    std::uint64_t seed = 42;
    bool augment = true;
    std::size_t accuracy_sample = 256;  // train-accuracy estimate subsample
};

struct EpochLog {
    int epoch = 0;
    double loss = 0.0;
    double train_acc = 0.0;
};

// Contrastive training on the given items (already split). Deterministic in
// (model seed, config seed): one rng stream drives shuffling and the
// flip/rotate + caption-reorder augmentation.
std::vector<EpochLog> train(ClipModel& model, const Dataset& train_data,
                            const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace medgrad
