#include "medgrad/synthdata.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "medgrad/png.hpp"
#include "medgrad/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace medgrad {

namespace {

struct Rgb {
    float r, g, b;
};

Rgb color_rgb(LesionColor c) {
    switch (c) {
        case LesionColor::LightBrown: return {0.72f, 0.53f, 0.38f};
        case LesionColor::DarkBrown: return {0.45f, 0.29f, 0.18f};
        case LesionColor::BlueGray: return {0.28f, 0.41f, 0.60f};
        case LesionColor::Black: return {0.13f, 0.11f, 0.11f};
        case LesionColor::Red: return {0.72f, 0.21f, 0.19f};
        case LesionColor::White: return {0.90f, 0.88f, 0.86f};
    }
    return {0, 0, 0};
}

constexpr Rgb kSkinBase{0.89f, 0.72f, 0.64f};
constexpr Rgb kVeilColor{0.60f, 0.66f, 0.76f};
constexpr Rgb kRegressionColor{0.85f, 0.79f, 0.75f};
constexpr float kPi = 3.14159265358979323846f;

void blend(Image& img, int y, int x, const Rgb& c, float alpha) {
    if (alpha <= 0.0f) return;
    img.at(y, x, 0) = (1 - alpha) * img.at(y, x, 0) + alpha * c.r;
    img.at(y, x, 1) = (1 - alpha) * img.at(y, x, 1) + alpha * c.g;
    img.at(y, x, 2) = (1 - alpha) * img.at(y, x, 2) + alpha * c.b;
}

// Lesion outline: superellipse with a low-order Fourier perturbation of the
// radius. Harmonic selection depends on the symmetry class: even cosine terms
// keep both mirror axes, general cosine terms keep one (theta -> -theta),
// sine terms break both.
struct Outline {
    float cx, cy;       // center, pixel coordinates
    float a, b;         // semi-axes
    float exponent;     // superellipse p
    float rot;          // axis rotation (only nonzero for symmetry 0)
    float amplitude;    // border_irregularity * 0.35
    std::vector<std::pair<int, float>> cos_terms;  // (frequency, coefficient)
    std::vector<std::pair<int, float>> sin_terms;

    float radius_at(float theta) const {
        const float ct = std::cos(theta), st = std::sin(theta);
        const float term = std::pow(std::abs(ct) / a, exponent) +
                           std::pow(std::abs(st) / b, exponent);
        float r = std::pow(term, -1.0f / exponent);
        float w = 0.0f;
        for (auto [k, c] : cos_terms) w += c * std::cos(k * theta);
        for (auto [k, s] : sin_terms) w += s * std::sin(k * theta);
        return r * (1.0f + amplitude * w);
    }

    // returns d/boundary: <= 1 means inside
    float radial_fraction(float px, float py, float* theta_out = nullptr) const {
        const float dx = px - cx, dy = py - cy;
        const float xr = dx * std::cos(rot) + dy * std::sin(rot);
        const float yr = -dx * std::sin(rot) + dy * std::cos(rot);
        const float d = std::sqrt(xr * xr + yr * yr);
        const float theta = std::atan2(yr, xr);
        if (theta_out) *theta_out = theta;
        const float boundary = radius_at(theta);
        return boundary > 0 ? d / boundary : 2.0f;
    }
};

Outline make_outline(const LesionSpec& spec, Rng& rng, int size) {
    Outline o;
    const float s = static_cast<float>(size);
    const float center = (s - 1.0f) / 2.0f;
    const float base_r = spec.lesion_radius_fraction * s;

    const float ecc = static_cast<float>(rng.uniform(0.05, 0.20));
    o.a = base_r * (1.0f + ecc);
    o.b = base_r * (1.0f - ecc);
    o.exponent = static_cast<float>(rng.uniform(1.9, 2.5));
    o.rot = spec.symmetry_axes == 0 ? static_cast<float>(rng.uniform(0.0, kPi)) : 0.0f;

    // mirror symmetry pins the center on the mirrored axis
    const float jx = static_cast<float>(rng.uniform(-3.0, 3.0));
    const float jy = static_cast<float>(rng.uniform(-3.0, 3.0));
    switch (spec.symmetry_axes) {
        case 2: o.cx = center; o.cy = center; break;
        case 1: o.cx = center + jx; o.cy = center; break;  // flip-v symmetric
        default: o.cx = center + jx; o.cy = center + jy; break;
    }

    o.amplitude = 0.35f * spec.border_irregularity;
    const std::vector<int> even{2, 4, 6};
    const std::vector<int> all{2, 3, 4, 5};
    float total = 0.0f;
    for (int k : (spec.symmetry_axes == 2 ? even : all)) {
        const float c = static_cast<float>(rng.uniform(-1.0, 1.0));
        o.cos_terms.emplace_back(k, c);
        total += std::abs(c);
    }
    if (spec.symmetry_axes == 0) {
        for (int k : all) {
            const float c = static_cast<float>(rng.uniform(-1.0, 1.0));
            o.sin_terms.emplace_back(k, c);
            total += std::abs(c);
        }
    }
    if (total > 0) {
        for (auto& [k, c] : o.cos_terms) c /= total;
        for (auto& [k, c] : o.sin_terms) c /= total;
    }
    return o;
}

struct Blob {
    float x, y, radius;
};

Blob sample_blob(const Outline& o, Rng& rng, float t_lo, float t_hi, float r_lo, float r_hi,
                 float base_r) {
    const float psi = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
    const float t = static_cast<float>(rng.uniform(t_lo, t_hi));
    Blob blob;
    blob.x = o.cx + std::cos(psi + o.rot) * t * o.a;
    blob.y = o.cy + std::sin(psi + o.rot) * t * o.b;
    blob.radius = base_r * static_cast<float>(rng.uniform(r_lo, r_hi));
    return blob;
}

void paint_blob(Image& img, const ImageMask& mask, const Blob& blob, const Rgb& color,
                float max_alpha) {
    const int y0 = std::max(0, static_cast<int>(blob.y - blob.radius) - 1);
    const int y1 = std::min(img.height - 1, static_cast<int>(blob.y + blob.radius) + 1);
    const int x0 = std::max(0, static_cast<int>(blob.x - blob.radius) - 1);
    const int x1 = std::min(img.width - 1, static_cast<int>(blob.x + blob.radius) + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!mask.at(y, x)) continue;
            const float dx = x - blob.x, dy = y - blob.y;
            const float q = (dx * dx + dy * dy) / (blob.radius * blob.radius);
            if (q >= 1.0f) continue;
            blend(img, y, x, color, max_alpha * (1.0f - q));
        }
}

}  // namespace

std::string color_name(LesionColor c) {
    switch (c) {
        case LesionColor::LightBrown: return "light-brown";
        case LesionColor::DarkBrown: return "dark-brown";
        case LesionColor::BlueGray: return "blue-gray";
        case LesionColor::Black: return "black";
        case LesionColor::Red: return "red";
        case LesionColor::White: return "white";
    }
    return "?";
}

std::string structure_name(LesionStructure s) {
    switch (s) {
        case LesionStructure::Streaks: return "streaks";
        case LesionStructure::Dots: return "dots";
        case LesionStructure::PigmentNetwork: return "pigment network";
        case LesionStructure::BlueWhitishVeil: return "blue-whitish veil";
        case LesionStructure::Regression: return "regression";
    }
    return "?";
}

std::vector<std::string> LesionSpec::criteria_terms() const {
    std::vector<std::string> terms;
    switch (symmetry_axes) {
        case 2: terms.push_back("fully symmetric"); break;
        case 1: terms.push_back("symmetry in 1 axis"); break;
        default: terms.push_back("asymmetric"); break;
    }
    terms.push_back(border_irregularity >= 0.4f ? "irregular border" : "regular border");
    for (auto c : colors) terms.push_back(color_name(c));
    for (auto s : structures) terms.push_back(structure_name(s));
    return terms;
}

std::string LesionSpec::canonical_caption() const {
    std::string caption = class_name;
    for (const auto& t : criteria_terms()) caption += ", " + t;
    return caption;
}

void LesionSpec::validate() const {
    if (symmetry_axes < 0 || symmetry_axes > 2)
        throw ContractError("lesion spec: symmetry_axes must be 0, 1 or 2");
    if (border_irregularity < 0.0f || border_irregularity > 1.0f)
        throw ContractError("lesion spec: border_irregularity must be in [0,1]");
    if (!(lesion_radius_fraction > 0.1f && lesion_radius_fraction < 0.45f))
        throw ContractError("lesion spec: lesion_radius_fraction must be in (0.1, 0.45)");
    if (colors.empty()) throw ContractError("lesion spec: at least one color required");
    if (class_name.empty()) throw ContractError("lesion spec: empty class name");
}

std::vector<LesionSpec> default_lesion_specs(int k) {
    if (k < 2 || k > 17)
        throw ContractError("class count must be in [2, 17], got " + std::to_string(k));
    using C = LesionColor;
    using S = LesionStructure;
    const std::vector<LesionSpec> base = {
        {0, "common nevus", 2, 0.05f, {C::LightBrown}, {S::PigmentNetwork}, 0.30f},
        {1, "atypical nevus", 1, 0.45f, {C::LightBrown, C::DarkBrown},
         {S::PigmentNetwork, S::Dots}, 0.33f},
        {2, "melanoma", 0, 0.85f, {C::DarkBrown, C::Black, C::BlueGray},
         {S::Streaks, S::BlueWhitishVeil}, 0.36f},
        {3, "blue nevus", 2, 0.10f, {C::BlueGray}, {}, 0.22f},
        {4, "dermatofibroma", 2, 0.20f, {C::LightBrown, C::White}, {S::Regression}, 0.25f},
        {5, "vascular lesion", 2, 0.15f, {C::Red}, {}, 0.24f},
        {6, "seborrheic keratosis", 1, 0.55f, {C::DarkBrown, C::Black}, {S::Dots}, 0.30f},
        {7, "basal cell carcinoma", 0, 0.65f, {C::Red, C::White, C::BlueGray},
         {S::Regression, S::Dots}, 0.28f},
    };
    std::vector<LesionSpec> specs;
    for (int i = 0; i < k; ++i) {
        LesionSpec s = base[i % 8];
        s.class_id = i;
        if (i >= 8) {
            // synthetic variant classes: shifted symmetry, rougher border,
            // one extra color from the palette
            s.class_name += (i >= 16 ? " type c" : " type b");
            s.symmetry_axes = (s.symmetry_axes + 1) % 3;
            s.border_irregularity = std::min(0.9f, s.border_irregularity + 0.3f);
            const C extra = static_cast<C>((i + 2) % 6);
            if (std::find(s.colors.begin(), s.colors.end(), extra) == s.colors.end())
                s.colors.push_back(extra);
        }
        specs.push_back(std::move(s));
    }
    return specs;
}

ImageTextPair generate_pair(const LesionSpec& spec, Rng rng, int image_size) {
    spec.validate();
    if (image_size < 16) throw ContractError("image_size must be >= 16");

    Image img(image_size, image_size);
    ImageMask mask(image_size, image_size);

    // background: jittered skin tone
    const float tr = static_cast<float>(rng.uniform(-0.03, 0.03));
    const float tg = static_cast<float>(rng.uniform(-0.03, 0.03));
    const float tb = static_cast<float>(rng.uniform(-0.03, 0.03));
    for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
            img.at(y, x, 0) = kSkinBase.r + tr;
            img.at(y, x, 1) = kSkinBase.g + tg;
            img.at(y, x, 2) = kSkinBase.b + tb;
        }

    Outline outline = make_outline(spec, rng, image_size);
    const float base_r = spec.lesion_radius_fraction * image_size;
    const Rgb base_color = color_rgb(spec.colors[0]);

    // lesion body + mask; radial shading, lateral gradient when asymmetric
    for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
            const float q = outline.radial_fraction(static_cast<float>(x), static_cast<float>(y));
            if (q > 1.0f) continue;
            mask.at(y, x) = 1;
            float shade = 0.82f + 0.18f * q;
            if (spec.symmetry_axes < 2)
                shade *= 1.0f + 0.10f * (x - outline.cx) / base_r;
            const Rgb c{base_color.r * shade, base_color.g * shade, base_color.b * shade};
            const float edge = std::min(1.0f, (1.0f - q) * 14.0f);  // thin soft rim
            blend(img, y, x, c, 0.3f + 0.7f * edge);
        }

    // secondary color regions
    for (std::size_t ci = 1; ci < spec.colors.size(); ++ci) {
        const bool small = spec.colors[ci] == LesionColor::White;
        const int n_blobs = 1 + static_cast<int>(rng.below(2));
        for (int bi = 0; bi < n_blobs; ++bi) {
            Blob blob = sample_blob(outline, rng, 0.1, 0.55, small ? 0.12 : 0.16,
                                    small ? 0.18 : 0.30, base_r);
            paint_blob(img, mask, blob, color_rgb(spec.colors[ci]), 0.85f);
        }
    }

    // dermoscopic structures
    for (auto st : spec.structures) {
        switch (st) {
            case LesionStructure::PigmentNetwork: {
                const int spacing = 4 + static_cast<int>(rng.below(3));
                const int ox = static_cast<int>(rng.below(spacing));
                const int oy = static_cast<int>(rng.below(spacing));
                const float ang = static_cast<float>(rng.uniform(-0.3, 0.3));
                const Rgb net = color_rgb(LesionColor::DarkBrown);
                for (int y = 0; y < image_size; ++y)
                    for (int x = 0; x < image_size; ++x) {
                        if (!mask.at(y, x)) continue;
                        if (outline.radial_fraction(static_cast<float>(x),
                                                    static_cast<float>(y)) > 0.92f)
                            continue;
                        const int u = static_cast<int>(
                            std::lround(x * std::cos(ang) + y * std::sin(ang)));
                        const int v = static_cast<int>(
                            std::lround(-x * std::sin(ang) + y * std::cos(ang)));
                        const bool on_line = ((u - ox) % spacing + spacing) % spacing == 0 ||
                                             ((v - oy) % spacing + spacing) % spacing == 0;
                        if (on_line) blend(img, y, x, net, 0.35f);
                    }
                break;
            }
            case LesionStructure::Dots: {
                const int n = 8 + static_cast<int>(rng.below(8));
                const Rgb dot{0.16f, 0.12f, 0.10f};
                for (int i = 0; i < n; ++i) {
                    Blob blob = sample_blob(outline, rng, 0.0, 0.75, 0.0, 1.0, 0.0f);
                    blob.radius = 1.0f + static_cast<float>(rng.below(2));
                    paint_blob(img, mask, blob, dot, 0.9f);
                }
                break;
            }
            case LesionStructure::Streaks: {
                const int n = 9 + static_cast<int>(rng.below(7));
                const Rgb streak{0.22f, 0.15f, 0.11f};
                for (int i = 0; i < n; ++i) {
                    const float psi = static_cast<float>(rng.uniform(0.0, 2.0 * kPi));
                    const float boundary = outline.radius_at(psi);
                    for (float t = 0.62f; t <= 1.04f; t += 0.02f) {
                        const float px = outline.cx + std::cos(psi + outline.rot) * t * boundary;
                        const float py = outline.cy + std::sin(psi + outline.rot) * t * boundary;
                        const int xi = static_cast<int>(std::lround(px));
                        const int yi = static_cast<int>(std::lround(py));
                        if (xi < 0 || yi < 0 || xi >= image_size || yi >= image_size) continue;
                        blend(img, yi, xi, streak, 0.75f);
                    }
                }
                break;
            }
            case LesionStructure::BlueWhitishVeil: {
                Blob blob = sample_blob(outline, rng, 0.0, 0.45, 0.42, 0.62, base_r);
                paint_blob(img, mask, blob, kVeilColor, 0.55f);
                break;
            }
            case LesionStructure::Regression: {
                Blob blob = sample_blob(outline, rng, 0.15, 0.5, 0.30, 0.45, base_r);
                paint_blob(img, mask, blob, kRegressionColor, 0.65f);
                break;
            }
        }
    }

    // single multiplicative noise factor per pixel keeps saturation intact
    for (int y = 0; y < image_size; ++y)
        for (int x = 0; x < image_size; ++x) {
            const float n = 1.0f + 0.05f * (rng.uniform_float() - 0.5f);
            for (int c = 0; c < 3; ++c) img.at(y, x, c) *= n;
        }
    quantize_to_8bit(img);

    ImageTextPair pair;
    pair.image = std::move(img);
    pair.mask = std::move(mask);
    pair.has_mask = true;
    pair.class_id = spec.class_id;
    pair.class_name = spec.class_name;
    pair.caption = spec.canonical_caption();
    pair.criteria = spec.criteria_terms();
    pair.spec = spec;
    if (pair.mask.count() == 0) throw NumericError("generated mask is empty");
    return pair;
}

std::string augment_caption(const std::string& caption, Rng& rng) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= caption.size()) {
        const std::size_t comma = caption.find(',', start);
        std::string seg = caption.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start);
        // trim
        const auto b = seg.find_first_not_of(' ');
        const auto e = seg.find_last_not_of(' ');
        if (b == std::string::npos) throw ParseError("malformed caption: empty segment");
        parts.push_back(seg.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (parts.empty()) throw ParseError("malformed caption: no class segment");
    rng.shuffle(parts.begin() + 1, parts.end());
    std::string out = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) out += ", " + parts[i];
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
    Dataset out;
    out.vocab = vocab;
    out.classes = classes;
    out.items.reserve(indices.size());
    for (auto i : indices) out.items.push_back(items.at(i));
    return out;
}

Dataset generate_dataset(int n_pairs, int k_classes, std::uint64_t seed, int image_size,
                         std::size_t context_length, unsigned threads) {
    if (n_pairs < 0) throw ContractError("n_pairs must be >= 0");
    const auto specs = default_lesion_specs(k_classes);

    Dataset ds;
    for (const auto& s : specs) {
        ds.vocab.add_text(s.canonical_caption());
        ds.classes.push_back({s.class_name, s.canonical_caption()});
    }

    ds.items.resize(static_cast<std::size_t>(n_pairs));
    parallel_for(static_cast<std::size_t>(n_pairs), threads, [&](std::size_t i) {
        char id[16];
        std::snprintf(id, sizeof id, "pair-%05zu", i);
        const auto& spec = specs[i % specs.size()];
        ImageTextPair pair = generate_pair(spec, Rng::derive(seed, id), image_size);
        pair.id = id;
        pair.tokens = ds.vocab.encode(pair.caption, context_length);
        ds.items[i] = std::move(pair);
    });
    return ds;
}

namespace {

std::uint64_t pair_content_hash(const ImageTextPair& item) {
    std::vector<std::uint8_t> px(item.image.data.size());
    for (std::size_t i = 0; i < px.size(); ++i)
        px[i] = static_cast<std::uint8_t>(
            std::lround(std::clamp(item.image.data[i], 0.0f, 1.0f) * 255.0f));
    std::uint64_t h = fnv1a64(px.data(), px.size());
    return fnv1a64(item.caption.data(), item.caption.size(), h);
}

}  // namespace

SplitResult split_dataset(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ContractError("split fraction must be in (0, 1)");

    // drop exact (image, caption) duplicates first
    std::vector<std::size_t> kept;
    {
        std::map<std::uint64_t, std::size_t> seen;
        for (std::size_t i = 0; i < ds.items.size(); ++i) {
            const auto h = pair_content_hash(ds.items[i]);
            if (seen.emplace(h, i).second) kept.push_back(i);
        }
    }
    if (kept.size() < 4)
        throw ContractError("split needs at least 4 unique pairs, have " +
                            std::to_string(kept.size()));

    std::map<int, std::vector<std::size_t>> by_class;
    for (auto i : kept) by_class[ds.items[i].class_id].push_back(i);

    SplitResult result;
    Rng rng(seed);

    // singleton classes cannot be stratified; they train
    std::vector<int> eligible;
    std::size_t eligible_total = 0;
    for (auto& [cid, idx] : by_class) {
        if (idx.size() < 2) {
            result.warnings.push_back("class " + std::to_string(cid) +
                                      " has fewer than 2 items; assigned to train");
            for (auto i : idx) result.train.push_back(i);
        } else {
            eligible.push_back(cid);
            eligible_total += idx.size();
        }
    }

    // largest-remainder allocation of the train quota across classes
    const auto target_total = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(eligible_total)));
    std::vector<std::size_t> quota(eligible.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t allocated = 0;
    for (std::size_t c = 0; c < eligible.size(); ++c) {
        const double share = fraction * static_cast<double>(by_class[eligible[c]].size());
        quota[c] = static_cast<std::size_t>(share);
        allocated += quota[c];
        remainders.emplace_back(-(share - static_cast<double>(quota[c])), c);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t r = 0; allocated < target_total && r < remainders.size(); ++r) {
        ++quota[remainders[r].second];
        ++allocated;
    }
    for (std::size_t c = 0; c < eligible.size(); ++c) {
        auto& idx = by_class[eligible[c]];
        rng.shuffle(idx.begin(), idx.end());
        // both splits keep at least one item per class
        const std::size_t n_train = std::clamp<std::size_t>(quota[c], 1, idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (i < n_train ? result.train : result.test).push_back(idx[i]);
    }
    std::sort(result.train.begin(), result.train.end());
    std::sort(result.test.begin(), result.test.end());
    return result;
}

void save_dataset(const Dataset& ds, const std::string& dir, unsigned threads) {
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    if (ec) throw IoError("cannot create directory: " + dir + "/images");
    bool any_mask = false;
    for (const auto& it : ds.items) any_mask |= it.has_mask;
    if (any_mask) {
        fs::create_directories(fs::path(dir) / "masks", ec);
        if (ec) throw IoError("cannot create directory: " + dir + "/masks");
    }

    parallel_for(ds.items.size(), threads, [&](std::size_t i) {
        const auto& it = ds.items[i];
        write_file((fs::path(dir) / "images" / (it.id + ".png")).string(),
                   png_encode_image(it.image));
        if (it.has_mask)
            write_file((fs::path(dir) / "masks" / (it.id + ".png")).string(),
                       png_encode_mask(it.mask));
    });

    std::ostringstream manifest;
    for (const auto& it : ds.items) {
        json line{{"id", it.id},
                  {"file", "images/" + it.id + ".png"},
                  {"mask", it.has_mask ? json("masks/" + it.id + ".png") : json(nullptr)},
                  {"class", it.class_name},
                  {"caption", it.caption},
                  {"criteria", it.criteria}};
        manifest << line.dump() << "\n";
    }
    const std::string mtext = manifest.str();
    write_file((fs::path(dir) / "manifest.jsonl").string(),
               std::vector<std::uint8_t>(mtext.begin(), mtext.end()));

    const std::string vtext = ds.vocab.to_file_text();
    write_file((fs::path(dir) / "vocab.txt").string(),
               std::vector<std::uint8_t>(vtext.begin(), vtext.end()));
}

Dataset load_dataset(const std::string& dir, int image_size, std::size_t context_length) {
    const fs::path root(dir);
    if (!fs::exists(root / "manifest.jsonl"))
        throw IoError("missing manifest: " + (root / "manifest.jsonl").string());

    Dataset ds;
    const auto mbytes = read_file((root / "manifest.jsonl").string());
    const std::string mtext(mbytes.begin(), mbytes.end());

    const bool have_vocab_file = fs::exists(root / "vocab.txt");
    if (have_vocab_file) {
        const auto vbytes = read_file((root / "vocab.txt").string());
        ds.vocab = Vocabulary::from_file_text(std::string(vbytes.begin(), vbytes.end()));
    }

    std::map<std::string, int> class_ids;
    std::istringstream lines(mtext);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("manifest line " + std::to_string(lineno) + ": " + e.what());
        }
        for (const char* key : {"id", "file", "class", "caption"})
            if (!j.contains(key))
                throw FormatError("manifest line " + std::to_string(lineno) +
                                  ": missing key '" + key + "'");

        ImageTextPair item;
        item.id = j["id"].get<std::string>();
        item.caption = j["caption"].get<std::string>();
        item.class_name = j["class"].get<std::string>();
        if (j.contains("criteria") && j["criteria"].is_array())
            item.criteria = j["criteria"].get<std::vector<std::string>>();

        auto [it, inserted] = class_ids.emplace(item.class_name,
                                                static_cast<int>(ds.classes.size()));
        if (inserted) ds.classes.push_back({item.class_name, item.caption});
        item.class_id = it->second;

        const std::string img_path = (root / j["file"].get<std::string>()).string();
        item.image = png_decode_image(read_file(img_path));
        if (image_size > 0 &&
            (item.image.height != image_size || item.image.width != image_size))
            item.image = resize_bilinear(item.image, image_size, image_size);

        if (j.contains("mask") && !j["mask"].is_null()) {
            const std::string mask_path = (root / j["mask"].get<std::string>()).string();
            item.mask = png_decode_mask(read_file(mask_path));
            item.has_mask = true;
            if (image_size > 0 &&
                (item.mask.height != image_size || item.mask.width != image_size)) {
                // nearest-neighbor keeps the mask binary
                ImageMask resized(image_size, image_size);
                for (int y = 0; y < image_size; ++y)
                    for (int x = 0; x < image_size; ++x) {
                        const int sy = y * item.mask.height / image_size;
                        const int sx = x * item.mask.width / image_size;
                        resized.at(y, x) = item.mask.at(sy, sx);
                    }
                item.mask = std::move(resized);
            }
        }
        ds.items.push_back(std::move(item));
    }

    if (!have_vocab_file)
        for (const auto& it : ds.items) ds.vocab.add_text(it.caption);
    for (auto& it : ds.items) it.tokens = ds.vocab.encode(it.caption, context_length);
    return ds;
}

std::uint64_t dataset_dir_hash(const std::string& dir) {
    std::vector<std::string> rels;
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            rels.push_back(fs::relative(entry.path(), dir).generic_string());
    std::sort(rels.begin(), rels.end());
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& rel : rels) {
        h = fnv1a64(rel.data(), rel.size(), h);
        const auto bytes = read_file((fs::path(dir) / rel).string());
        h = fnv1a64(bytes.data(), bytes.size(), h);
    }
    return h;
}

}  // namespace medgrad
