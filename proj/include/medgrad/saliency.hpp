#pragma once

#include <string>
#include <vector>

#include "medgrad/entropy.hpp"
#include "medgrad/image.hpp"
#include "medgrad/model.hpp"

namespace medgrad {

struct ExplainConfig {
    int disk_radius = 5;
    int bins = 32;
    EntropyNorm entropy_normalization = EntropyNorm::MinMax;
    float overlay_alpha = 0.5f;

    void validate() const {
        if (disk_radius < 1) throw ContractError("explain config: disk_radius must be >= 1");
        if (bins < 2) throw ContractError("explain config: bins must be >= 2");
        if (overlay_alpha < 0.0f || overlay_alpha > 1.0f)
            throw ContractError("explain config: overlay_alpha must be in [0,1]");
    }
};

enum class SaliencyMethod { MedGradEclip, GradEclip, GradCam };

std::string method_name(SaliencyMethod m);                 // "medgrad-eclip", ...
SaliencyMethod method_from_name(const std::string& name);  // ContractError on unknown

enum class SaliencyNorm { Raw, MinMax };

// Nonnegative per-patch relevance grid.
struct SaliencyMap {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;
    SaliencyMethod method = SaliencyMethod::MedGradEclip;
    std::string caption;
    SaliencyNorm normalization = SaliencyNorm::MinMax;

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

// Shared combine step: ReLU(features @ channel_weights), one value per patch.
std::vector<float> channel_gradient_map(const Tensorf& features,
                                        const std::vector<float>& channel_weights);

// Min-max to [0,1]; a constant positive map becomes all ones, an all-zero
// map stays zero.
void minmax_normalize(std::vector<float>& values);

// Spatial weights of the cosine-attention baseline: per patch,
// ReLU(cos(cls_query, key)) averaged over heads, then min-max normalized.
std::vector<float> grad_eclip_spatial_weights(const EncoderActivations& acts);

// Everything the saliency methods need from one forward/backward pass:
// d cos(f_I, f_T) / d f_I (channel weights), d cos / d patch tokens, and the
// cached activations.
struct ExplainPass {
    std::vector<float> channel_weights;  // [D]
    Tensorf patch_token_grad;            // [P x d_v]
    EncoderActivations acts;
    float similarity = 0.0f;
};

ExplainPass explain_pass(const ClipModel& model, const Image& image, const TokenSeq& tokens);

// The three saliency methods. Each is a pure function of (model, image,
// caption, config) and returns a min-max-normalized patch-grid map.
SaliencyMap medgrad_eclip(const ClipModel& model, const Image& image, const TokenSeq& tokens,
                          const ExplainConfig& config = {});
SaliencyMap grad_eclip(const ClipModel& model, const Image& image, const TokenSeq& tokens);
SaliencyMap grad_cam(const ClipModel& model, const Image& image, const TokenSeq& tokens);

// Building blocks over a finished pass; medgrad_with_weights takes the pooled
// entropy weights from the caller (medgrad_eclip passes its computed w_e).
SaliencyMap medgrad_with_weights(const ExplainPass& pass, const Tensorf& weights);
SaliencyMap grad_eclip_from(const ExplainPass& pass);
SaliencyMap grad_cam_from(const ExplainPass& pass);

// One forward/backward shared across all three methods (what the CLI uses).
struct Explanations {
    SaliencyMap medgrad;
    SaliencyMap grad_eclip;
    SaliencyMap grad_cam;
};
Explanations explain_all(const ClipModel& model, const Image& image, const TokenSeq& tokens,
                         const ExplainConfig& config = {});

// Bilinear upsampling of a patch-grid map (corners align with corners).
std::vector<float> upsample_bilinear(const SaliencyMap& map, int out_h, int out_w);

// Sidecar JSON: {"method", "caption", "grid", "values"}
std::string saliency_to_json(const SaliencyMap& map);

}  // namespace medgrad
