#pragma once

// Finite-difference check of the full contrastive graph with respect to
// every model parameter. Test-only; the forward evaluations used for the
// differences never touch the backward rules they verify.

#include <string>
#include <vector>

#include "medgrad/model_graph.hpp"

namespace medgrad::test {

struct ModelFdReport {
    double max_rel_err = 0.0;
    std::size_t checked = 0;
    std::string worst;
};

template <typename T>
ModelFdReport contrastive_fd(const ModelConfig& cfg, ClipParams<T> params,
                             const std::vector<Image>& images,
                             const std::vector<TokenSeq>& tokens, std::size_t stride = 1) {
    std::vector<const Image*> img_ptrs;
    std::vector<const TokenSeq*> txt_ptrs;
    for (const auto& im : images) img_ptrs.push_back(&im);
    for (const auto& tk : tokens) txt_ptrs.push_back(&tk);

    // analytic gradients for every parameter
    std::vector<std::pair<std::string, std::vector<T>>> analytic;
    {
        Tape<T> tape;
        tape.reserve(2048);
        auto vars = ClipVars<T>::make_tracked(tape, params);
        Var loss = contrastive_graph(tape, cfg, vars, img_ptrs, txt_ptrs);
        tape.backward(loss);
        for (const auto& [name, var] : vars.named) analytic.emplace_back(name, tape.grad(var));
    }

    auto eval = [&]() -> T {
        Tape<T> tape;
        tape.reserve(2048);
        auto vars = ClipVars<T>::make(tape, params);
        Var loss = contrastive_graph(tape, cfg, vars, img_ptrs, txt_ptrs);
        return tape.value(loss).data[0];
    };

    ModelFdReport rep;
    std::size_t tensor_idx = 0;
    params.for_each([&](const std::string& name, Tensor<T>& p) {
        const auto& grad = analytic[tensor_idx++].second;
        for (std::size_t i = 0; i < p.size(); i += stride) {
            const T x0 = p.data[i];
            const T h = static_cast<T>(1e-3) * (T(1) + std::abs(x0));
            p.data[i] = x0 + h;
            const T fp = eval();
            p.data[i] = x0 - h;
            const T fm = eval();
            p.data[i] = x0;
            const double fd = (static_cast<double>(fp) - static_cast<double>(fm)) /
                              (2.0 * static_cast<double>(h));
            const double ad = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
            const double rel = std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1.0});
            ++rep.checked;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst = name + "[" + std::to_string(i) + "] ad=" + std::to_string(ad) +
                            " fd=" + std::to_string(fd);
            }
        }
    });
    return rep;
}

// small geometry shared by the gradient tests: 2 layers, D=8, B=3
inline ModelConfig tiny_fd_config(int vocab_size) {
    ModelConfig cfg;
    cfg.image_size = 16;
    cfg.patch_size = 8;
    cfg.vision_layers = 2;
    cfg.vision_heads = 2;
    cfg.vision_dim = 8;
    cfg.text_layers = 2;
    cfg.text_heads = 2;
    cfg.text_dim = 8;
    cfg.vocab_size = vocab_size;
    cfg.context_length = 8;
    cfg.embed_dim = 8;
    cfg.mlp_ratio = 2;
    cfg.logit_scale_init = 0.0f;  // see fd_condition below
    return cfg;
}

// Central differences at the fixed step 1e-3*(1+|x|) are only valid where
// third derivatives are modest (truncation ~ h^2/6 * f'''); the backward
// rules under test are point-independent algebra, so the check runs at a
// well-conditioned parameter point: unit logit scale and attenuated block
// weights. Layer-norm inputs stay at the embedding scale, which keeps the
// 1/std factors tame.
inline void fd_condition(ClipModel& model) {
    model.params.for_each([&](const std::string& name, Tensorf& t) {
        const bool block_weight = name.find(".attn.w") != std::string::npos ||
                                  name.find(".mlp_w") != std::string::npos ||
                                  name.find("proj") != std::string::npos;
        if (block_weight)
            for (auto& v : t.data) v *= 0.3f;
    });
}

}  // namespace medgrad::test
