#include "medgrad/saliency.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "medgrad/model_graph.hpp"
#include "medgrad/ops.hpp"

using nlohmann::json;

namespace medgrad {

std::string method_name(SaliencyMethod m) {
    switch (m) {
        case SaliencyMethod::MedGradEclip: return "medgrad-eclip";
        case SaliencyMethod::GradEclip: return "grad-eclip";
        case SaliencyMethod::GradCam: return "grad-cam";
    }
    return "?";
}

SaliencyMethod method_from_name(const std::string& name) {
    if (name == "medgrad-eclip") return SaliencyMethod::MedGradEclip;
    if (name == "grad-eclip") return SaliencyMethod::GradEclip;
    if (name == "grad-cam") return SaliencyMethod::GradCam;
    throw ContractError("unknown saliency method '" + name +
                        "' (valid: medgrad-eclip, grad-eclip, grad-cam)");
}

std::vector<float> channel_gradient_map(const Tensorf& features,
                                        const std::vector<float>& channel_weights) {
    const std::size_t p = features.rows();
    const std::size_t d = features.cols();
    if (channel_weights.size() != d)
        throw DimensionError("channel_gradient_map: " + std::to_string(channel_weights.size()) +
                             " weights for " + std::to_string(d) + " channels");
    std::vector<float> out(p);
    for (std::size_t i = 0; i < p; ++i) {
        float s = 0.0f;
        const float* row = features.data.data() + i * d;
        for (std::size_t c = 0; c < d; ++c) s += row[c] * channel_weights[c];
        out[i] = std::max(0.0f, s);
    }
    return out;
}

void minmax_normalize(std::vector<float>& values) {
    if (values.empty()) return;
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const float mn = *mn_it, mx = *mx_it;
    if (mx > mn) {
        for (auto& v : values) v = (v - mn) / (mx - mn);
    } else if (mx > 0.0f) {
        std::fill(values.begin(), values.end(), 1.0f);
    } else {
        std::fill(values.begin(), values.end(), 0.0f);
    }
}

std::vector<float> grad_eclip_spatial_weights(const EncoderActivations& acts) {
    const std::size_t p = acts.keys.rows();
    const int heads = acts.heads;
    const std::size_t dh = acts.cls_query.cols();
    std::vector<float> w(p, 0.0f);
    for (std::size_t i = 0; i < p; ++i) {
        float acc = 0.0f;
        for (int h = 0; h < heads; ++h) {
            Tensorf q({dh}, std::vector<float>(
                                acts.cls_query.data.begin() + h * dh,
                                acts.cls_query.data.begin() + (h + 1) * dh));
            Tensorf k({dh}, std::vector<float>(
                                acts.keys.data.begin() + i * (heads * dh) + h * dh,
                                acts.keys.data.begin() + i * (heads * dh) + (h + 1) * dh));
            acc += std::max(0.0f, cosine_similarity(q, k));
        }
        w[i] = acc / static_cast<float>(heads);
    }
    minmax_normalize(w);
    return w;
}

ExplainPass explain_pass(const ClipModel& model, const Image& image, const TokenSeq& tokens) {
    if (!model.all_finite())
        throw NumericError("explain: model parameters contain NaN/Inf");

    Tapef tape;
    tape.reserve(1024);
    auto vars = ClipVars<float>::make(tape, model.params);
    // image leaf is differentiable so gradients reach the interior nodes
    auto fwd = vision_forward(tape, model.cfg, vars, image, /*image_grad=*/true);
    Var txt = text_forward(tape, model.cfg, vars, tokens);
    Var sim = tape.cosine(fwd.embedding, txt);
    tape.backward(sim);

    ExplainPass pass;
    pass.similarity = tape.value(sim).data[0];
    pass.channel_weights = tape.grad(fwd.embedding);
    if (pass.channel_weights.empty())
        pass.channel_weights.assign(model.cfg.embed_dim, 0.0f);
    pass.patch_token_grad = tape.grad_tensor(fwd.patch_tokens);
    pass.acts.patch_tokens = tape.value(fwd.patch_tokens);
    pass.acts.value_features = tape.value(fwd.value_features);
    pass.acts.cls_query = fwd.cls_query;
    pass.acts.keys = fwd.keys;
    pass.acts.grid_rows = model.cfg.patches_per_side();
    pass.acts.grid_cols = model.cfg.patches_per_side();
    pass.acts.heads = model.cfg.vision_heads;
    return pass;
}

SaliencyMap medgrad_with_weights(const ExplainPass& pass, const Tensorf& weights) {
    const auto raw = channel_gradient_map(pass.acts.value_features, pass.channel_weights);
    if (weights.size() != raw.size())
        throw DimensionError("medgrad weights do not match the patch grid");
    SaliencyMap map;
    map.rows = pass.acts.grid_rows;
    map.cols = pass.acts.grid_cols;
    map.method = SaliencyMethod::MedGradEclip;
    map.values.resize(raw.size());
    // w_e is channel-independent, so it factors out of the ReLU-ed channel sum
    for (std::size_t i = 0; i < raw.size(); ++i) map.values[i] = raw[i] * weights.data[i];
    minmax_normalize(map.values);
    return map;
}

SaliencyMap medgrad_eclip(const ClipModel& model, const Image& image, const TokenSeq& tokens,
                          const ExplainConfig& config) {
    config.validate();
    ExplainPass pass = explain_pass(model, image, tokens);
    const auto gray = to_gray(image);
    const auto ent = local_entropy_fast(gray, image.height, image.width, config.disk_radius,
                                        config.bins);
    const Tensorf w_e = entropy_weights(ent, pass.acts.grid_rows, pass.acts.grid_cols,
                                        config.entropy_normalization);
    return medgrad_with_weights(pass, w_e);
}

SaliencyMap grad_eclip_from(const ExplainPass& pass) {
    const auto raw = channel_gradient_map(pass.acts.value_features, pass.channel_weights);
    const auto w_s = grad_eclip_spatial_weights(pass.acts);
    SaliencyMap map;
    map.rows = pass.acts.grid_rows;
    map.cols = pass.acts.grid_cols;
    map.method = SaliencyMethod::GradEclip;
    map.values.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) map.values[i] = raw[i] * w_s[i];
    minmax_normalize(map.values);
    return map;
}

SaliencyMap grad_cam_from(const ExplainPass& pass) {
    const std::size_t p = pass.acts.patch_tokens.rows();
    const std::size_t d = pass.acts.patch_tokens.cols();
    // alpha_c: gradient averaged over patches
    std::vector<float> alpha(d, 0.0f);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t c = 0; c < d; ++c)
            alpha[c] += pass.patch_token_grad.data[i * d + c];
    for (auto& a : alpha) a /= static_cast<float>(p);

    SaliencyMap map;
    map.rows = pass.acts.grid_rows;
    map.cols = pass.acts.grid_cols;
    map.method = SaliencyMethod::GradCam;
    map.values = channel_gradient_map(pass.acts.patch_tokens, alpha);
    minmax_normalize(map.values);
    return map;
}

SaliencyMap grad_eclip(const ClipModel& model, const Image& image, const TokenSeq& tokens) {
    return grad_eclip_from(explain_pass(model, image, tokens));
}

SaliencyMap grad_cam(const ClipModel& model, const Image& image, const TokenSeq& tokens) {
    return grad_cam_from(explain_pass(model, image, tokens));
}

Explanations explain_all(const ClipModel& model, const Image& image, const TokenSeq& tokens,
                         const ExplainConfig& config) {
    config.validate();
    ExplainPass pass = explain_pass(model, image, tokens);
    const auto gray = to_gray(image);
    const auto ent = local_entropy_fast(gray, image.height, image.width, config.disk_radius,
                                        config.bins);
    const Tensorf w_e = entropy_weights(ent, pass.acts.grid_rows, pass.acts.grid_cols,
                                        config.entropy_normalization);
    Explanations out;
    out.medgrad = medgrad_with_weights(pass, w_e);
    out.grad_eclip = grad_eclip_from(pass);
    out.grad_cam = grad_cam_from(pass);
    return out;
}

std::vector<float> upsample_bilinear(const SaliencyMap& map, int out_h, int out_w) {
    if (out_h <= 0 || out_w <= 0) throw DimensionError("upsample: empty target");
    std::vector<float> out(static_cast<std::size_t>(out_h) * out_w);
    const auto src_y = [&](int y) {
        return out_h == 1 ? 0.0f
                          : static_cast<float>(y) * (map.rows - 1) / static_cast<float>(out_h - 1);
    };
    const auto src_x = [&](int x) {
        return out_w == 1 ? 0.0f
                          : static_cast<float>(x) * (map.cols - 1) / static_cast<float>(out_w - 1);
    };
    for (int y = 0; y < out_h; ++y) {
        const float fy = src_y(y);
        const int y0 = std::min(static_cast<int>(fy), map.rows - 1);
        const int y1 = std::min(y0 + 1, map.rows - 1);
        const float wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const float fx = src_x(x);
            const int x0 = std::min(static_cast<int>(fx), map.cols - 1);
            const int x1 = std::min(x0 + 1, map.cols - 1);
            const float wx = fx - x0;
            const float top = map.at(y0, x0) * (1 - wx) + map.at(y0, x1) * wx;
            const float bot = map.at(y1, x0) * (1 - wx) + map.at(y1, x1) * wx;
            out[static_cast<std::size_t>(y) * out_w + x] = top * (1 - wy) + bot * wy;
        }
    }
    return out;
}

std::string saliency_to_json(const SaliencyMap& map) {
    json values = json::array();
    for (int r = 0; r < map.rows; ++r) {
        json row = json::array();
        for (int c = 0; c < map.cols; ++c) row.push_back(map.at(r, c));
        values.push_back(row);
    }
    json j{{"method", method_name(map.method)},
           {"caption", map.caption},
           {"grid", {map.rows, map.cols}},
           {"values", values}};
    return j.dump();
}

}  // namespace medgrad
