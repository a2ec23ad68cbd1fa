#pragma once

// Templated graph builders shared by training (float), explainability
// (float, with input gradients) and the gradient test harness (double).

#include <cmath>
#include <string>
#include <vector>

#include "medgrad/model.hpp"
#include "medgrad/tape.hpp"

namespace medgrad {

template <typename T>
struct AttnVars {
    Var wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct BlockVars {
    Var ln1_g, ln1_b;
    AttnVars<T> attn;
    Var ln2_g, ln2_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
};

template <typename T>
struct VisionVars {
    Var patch_w, patch_b, cls_token, pos;
    std::vector<BlockVars<T>> blocks;
    Var ln_post_g, ln_post_b, proj;
};

template <typename T>
struct TextVars {
    Var tok_embed, pos;
    std::vector<BlockVars<T>> blocks;
    Var ln_final_g, ln_final_b, proj;
};

// Parameter leaves on a tape, mirroring ClipParams. make() records plain
// constants (fast inference: no backward closures at all); make_tracked()
// binds float params for gradient write-back or, at other precisions, marks
// the leaves differentiable so their grads can be read off the tape.
template <typename T>
struct ClipVars {
    VisionVars<T> vision;
    TextVars<T> text;
    Var log_temperature;
    std::vector<std::pair<std::string, Var>> named;

    static ClipVars make(Tape<T>& tape, const ClipParams<T>& params) {
        return build(params, [&](const Tensor<T>& p) { return tape.leaf(p, false); });
    }

    static ClipVars make_tracked(Tape<T>& tape, ClipParams<T>& params) {
        return build(params, [&](Tensor<T>& p) {
            if constexpr (std::is_same_v<T, float>) return tape.param(p);
            else return tape.leaf(p, true);
        });
    }

private:
    template <typename Params, typename MakeLeaf>
    static ClipVars build(Params& params, MakeLeaf&& make_leaf) {
        ClipVars out;
        out.vision.blocks.resize(params.vision.blocks.size());
        out.text.blocks.resize(params.text.blocks.size());

        std::vector<Var*> slots;
        auto collect_block = [&](BlockVars<T>& b) {
            for (Var* v : {&b.ln1_g, &b.ln1_b, &b.attn.wq, &b.attn.bq, &b.attn.wk, &b.attn.bk,
                           &b.attn.wv, &b.attn.bv, &b.attn.wo, &b.attn.bo, &b.ln2_g, &b.ln2_b,
                           &b.mlp_w1, &b.mlp_b1, &b.mlp_w2, &b.mlp_b2})
                slots.push_back(v);
        };
        for (Var* v : {&out.vision.patch_w, &out.vision.patch_b, &out.vision.cls_token,
                       &out.vision.pos})
            slots.push_back(v);
        for (auto& b : out.vision.blocks) collect_block(b);
        for (Var* v : {&out.vision.ln_post_g, &out.vision.ln_post_b, &out.vision.proj})
            slots.push_back(v);
        for (Var* v : {&out.text.tok_embed, &out.text.pos}) slots.push_back(v);
        for (auto& b : out.text.blocks) collect_block(b);
        for (Var* v : {&out.text.ln_final_g, &out.text.ln_final_b, &out.text.proj,
                       &out.log_temperature})
            slots.push_back(v);

        // ClipParams::for_each visits tensors in exactly the slot order above
        std::size_t i = 0;
        params.for_each([&](const std::string& name, auto& p) {
            Var v = make_leaf(p);
            *slots.at(i++) = v;
            out.named.emplace_back(name, v);
        });
        if (i != slots.size())
            throw ContractError("ClipVars: parameter visit order out of sync");
        return out;
    }
};

// q/k/v projections of one block, before the per-head split ([L x d] each)
struct AttnCapture {
    Var q, k, v;
};

template <typename T>
Var block_forward(Tape<T>& t, const BlockVars<T>& b, Var x, int heads,
                  AttnCapture* capture = nullptr) {
    Var h = t.layer_norm(x, b.ln1_g, b.ln1_b);
    Var q = t.add_rowvec(t.matmul(h, b.attn.wq), b.attn.bq);
    Var k = t.add_rowvec(t.matmul(h, b.attn.wk), b.attn.bk);
    Var v = t.add_rowvec(t.matmul(h, b.attn.wv), b.attn.bv);
    if (capture) *capture = {q, k, v};

    const std::size_t d = t.value(q).cols();
    const std::size_t dh = d / heads;
    const T inv_sqrt_dh = T(1) / std::sqrt(static_cast<T>(dh));
    std::vector<Var> head_outs;
    head_outs.reserve(heads);
    for (int i = 0; i < heads; ++i) {
        Var qh = t.slice_cols(q, i * dh, dh);
        Var kh = t.slice_cols(k, i * dh, dh);
        Var vh = t.slice_cols(v, i * dh, dh);
        Var scores = t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt_dh);
        head_outs.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    Var o = t.add_rowvec(t.matmul(t.concat_cols(head_outs), b.attn.wo), b.attn.bo);
    x = t.add(x, o);

    Var h2 = t.layer_norm(x, b.ln2_g, b.ln2_b);
    Var inner = t.gelu(t.add_rowvec(t.matmul(h2, b.mlp_w1), b.mlp_b1));
    Var m = t.add_rowvec(t.matmul(inner, b.mlp_w2), b.mlp_b2);
    return t.add(x, m);
}

// Row p of the result is patch p (grid row-major), flattened y, x, rgb.
template <typename T>
Tensor<T> patchify(const Image& img, int patch_size) {
    const int per_side = img.width / patch_size;
    const int n_patches = per_side * per_side;
    const int patch_len = patch_size * patch_size * 3;
    Tensor<T> out({static_cast<std::size_t>(n_patches), static_cast<std::size_t>(patch_len)});
    for (int p = 0; p < n_patches; ++p) {
        const int py = (p / per_side) * patch_size;
        const int px = (p % per_side) * patch_size;
        T* row = out.data.data() + static_cast<std::size_t>(p) * patch_len;
        int j = 0;
        for (int y = 0; y < patch_size; ++y)
            for (int x = 0; x < patch_size; ++x)
                for (int c = 0; c < 3; ++c)
                    row[j++] = static_cast<T>(img.at(py + y, px + x, c));
    }
    return out;
}

template <typename T>
struct VisionForward {
    Var embedding;       // [1 x D], unit norm
    Var patch_tokens;    // [P x d], final block output
    Var value_features;  // [P x D], final-block value tokens through the projection
    Tensor<T> cls_query; // [heads x d_head], detached
    Tensor<T> keys;      // [P x heads*d_head], detached
};

template <typename T>
VisionForward<T> vision_forward(Tape<T>& t, const ModelConfig& cfg, const ClipVars<T>& pv,
                                const Image& img, bool image_grad = false) {
    if (img.height != cfg.image_size || img.width != cfg.image_size)
        throw DimensionError("encode_image: raster is " + std::to_string(img.height) + "x" +
                             std::to_string(img.width) + ", model expects " +
                             std::to_string(cfg.image_size) + "x" +
                             std::to_string(cfg.image_size));
    const int P = cfg.n_patches();

    Var patches = t.leaf(patchify<T>(img, cfg.patch_size), image_grad);
    Var embedded = t.add_rowvec(t.matmul(patches, pv.vision.patch_w), pv.vision.patch_b);
    std::vector<Var> rows{pv.vision.cls_token, embedded};
    Var x = t.add(t.concat_rows(rows), pv.vision.pos);

    AttnCapture capture;
    for (std::size_t i = 0; i < pv.vision.blocks.size(); ++i) {
        const bool last = i + 1 == pv.vision.blocks.size();
        x = block_forward(t, pv.vision.blocks[i], x, cfg.vision_heads,
                          last ? &capture : nullptr);
    }

    std::vector<std::size_t> patch_idx(P);
    for (int i = 0; i < P; ++i) patch_idx[i] = static_cast<std::size_t>(i + 1);

    VisionForward<T> out;
    Var normed = t.layer_norm(x, pv.vision.ln_post_g, pv.vision.ln_post_b);
    Var cls = t.gather_rows(normed, {0});
    out.embedding = t.l2_normalize_rows(t.matmul(cls, pv.vision.proj));
    out.patch_tokens = t.gather_rows(x, patch_idx);
    out.value_features = t.matmul(t.gather_rows(capture.v, patch_idx), pv.vision.proj);

    // detached copies of the final block's cls query and patch keys
    const Tensor<T>& qv = t.value(capture.q);
    const Tensor<T>& kv = t.value(capture.k);
    const std::size_t d = qv.cols();
    const std::size_t dh = d / cfg.vision_heads;
    out.cls_query = Tensor<T>({static_cast<std::size_t>(cfg.vision_heads), dh});
    for (std::size_t i = 0; i < d; ++i) out.cls_query.data[i] = qv.data[i];  // row 0
    out.keys = Tensor<T>({static_cast<std::size_t>(P), d});
    std::copy_n(kv.data.data() + d, static_cast<std::size_t>(P) * d, out.keys.data.data());
    return out;
}

// Embedding pooled at the end-of-text position. Attention runs over the real
// tokens only (BOS..EOS); trailing padding never enters the graph.
template <typename T>
Var text_forward(Tape<T>& t, const ModelConfig& cfg, const ClipVars<T>& pv,
                 const TokenSeq& tokens) {
    if (tokens.empty()) throw ContractError("encode_text: empty token sequence");
    if (tokens.size() > static_cast<std::size_t>(cfg.context_length))
        throw DimensionError("encode_text: sequence of " + std::to_string(tokens.size()) +
                             " tokens exceeds context length " +
                             std::to_string(cfg.context_length));
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (TokenId id : tokens) {
        if (id < 0 || id >= cfg.vocab_size)
            throw VocabularyError("encode_text: token id " + std::to_string(id) +
                                  " outside vocabulary of size " +
                                  std::to_string(cfg.vocab_size));
        ids.push_back(static_cast<std::size_t>(id));
        if (id == kEosId) break;
    }
    const std::size_t len = ids.size();

    std::vector<std::size_t> pos_idx(len);
    for (std::size_t i = 0; i < len; ++i) pos_idx[i] = i;
    Var x = t.add(t.gather_rows(pv.text.tok_embed, ids), t.gather_rows(pv.text.pos, pos_idx));
    for (const auto& b : pv.text.blocks) x = block_forward(t, b, x, cfg.text_heads);
    Var normed = t.layer_norm(x, pv.text.ln_final_g, pv.text.ln_final_b);
    Var pooled = t.gather_rows(normed, {len - 1});  // end-of-text position
    return t.l2_normalize_rows(t.matmul(pooled, pv.text.proj));
}

// Symmetric InfoNCE over a matched batch: mean of row-wise (image -> text)
// and column-wise (text -> image) cross-entropies of the scaled cosine
// logits, matched pairs on the diagonal.
template <typename T>
Var contrastive_graph(Tape<T>& t, const ModelConfig& cfg, const ClipVars<T>& pv,
                      const std::vector<const Image*>& images,
                      const std::vector<const TokenSeq*>& texts) {
    if (images.empty() || images.size() != texts.size())
        throw ContractError("contrastive batch: " + std::to_string(images.size()) +
                            " images vs " + std::to_string(texts.size()) + " texts");
    std::vector<Var> img_emb, txt_emb;
    img_emb.reserve(images.size());
    txt_emb.reserve(texts.size());
    for (const Image* im : images)
        img_emb.push_back(vision_forward(t, cfg, pv, *im).embedding);
    for (const TokenSeq* tk : texts) txt_emb.push_back(text_forward(t, cfg, pv, *tk));

    Var I = t.concat_rows(img_emb);
    Var X = t.concat_rows(txt_emb);
    Var logits = t.scale_by(t.matmul(I, t.transpose(X)), t.exp(pv.log_temperature));
    std::vector<std::size_t> diag(images.size());
    for (std::size_t i = 0; i < diag.size(); ++i) diag[i] = i;
    Var by_row = t.cross_entropy_rows(logits, diag);
    Var by_col = t.cross_entropy_rows(t.transpose(logits), diag);
    return t.scale(t.add(by_row, by_col), T(0.5));
}

}  // namespace medgrad
