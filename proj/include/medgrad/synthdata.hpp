#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medgrad/image.hpp"
#include "medgrad/rng.hpp"
#include "medgrad/tokenizer.hpp"

namespace medgrad {

enum class LesionColor { LightBrown, DarkBrown, BlueGray, Black, Red, White };
enum class LesionStructure { Streaks, Dots, PigmentNetwork, BlueWhitishVeil, Regression };

std::string color_name(LesionColor c);       // caption term, e.g. "light-brown"
std::string structure_name(LesionStructure s);

// Recipe for one lesion class: shape symmetry, border roughness, palette and
// dermoscopic structures. class_id indexes the template table.
struct LesionSpec {
    int class_id = 0;
    std::string class_name;
    int symmetry_axes = 2;              // 0, 1 or 2 mirror axes
    float border_irregularity = 0.0f;   // [0,1]
    std::vector<LesionColor> colors;
    std::vector<LesionStructure> structures;
    float lesion_radius_fraction = 0.3f;  // of image size, in (0.1, 0.45)

    // symmetry term, border term, colors, structures - in this order
    std::vector<std::string> criteria_terms() const;
    std::string canonical_caption() const;  // "<class>, <c1>, <c2>, ..."
    void validate() const;
};

// Fixed table of class templates; k up to 17 (entries past the 8 base
// classes are documented synthetic variants).
std::vector<LesionSpec> default_lesion_specs(int k);

// One image/caption pair with generator ground truth.
struct ImageTextPair {
    std::string id;
    Image image;
    std::string caption;
    TokenSeq tokens;  // filled when a dataset is assembled with a vocabulary
    int class_id = 0;
    std::string class_name;
    ImageMask mask;
    bool has_mask = false;
    std::vector<std::string> criteria;
    std::optional<LesionSpec> spec;
};

// Procedural render: noisy skin background, radius-perturbed superellipse
// lesion, color blobs, structure primitives. Deterministic in (spec, rng);
// output is already snapped to the 8-bit grid so it matches its own PNG
// round-trip bitwise.
ImageTextPair generate_pair(const LesionSpec& spec, Rng rng, int image_size);

// Permute the criteria segments of "class, c1, c2, ..."; the class segment
// stays first and the token multiset is preserved.
std::string augment_caption(const std::string& caption, Rng& rng);

struct ClassInfo {
    std::string name;
    std::string prompt;  // canonical caption used for classification
};

struct Dataset {
    std::vector<ImageTextPair> items;
    Vocabulary vocab;
    std::vector<ClassInfo> classes;

    std::size_t size() const { return items.size(); }
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

// Deterministic synthetic dataset: classes assigned round-robin, one derived
// rng per (seed, id). Vocabulary covers every template caption for k classes.
Dataset generate_dataset(int n_pairs, int k_classes, std::uint64_t seed, int image_size,
                         std::size_t context_length, unsigned threads = 1);

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

// Stratified split after duplicate removal. Largest-remainder allocation
// keeps the overall train fraction exact while every class stays within one
// item of the target fraction. Classes with < 2 items go to train with a
// warning.
SplitResult split_dataset(const Dataset& ds, double fraction, std::uint64_t seed);

// --- disk format -----------------------------------------------------------
// <dir>/images/<id>.png, <dir>/masks/<id>.png (optional), <dir>/manifest.jsonl,
// <dir>/vocab.txt

void save_dataset(const Dataset& ds, const std::string& dir, unsigned threads = 1);

// Loads a dataset directory. Images are resized (bilinear) to image_size when
// they do not match; captions go through the stored vocabulary when present,
// otherwise a vocabulary is built from the manifest. This is also the
// ingestion path for externally prepared data.
Dataset load_dataset(const std::string& dir, int image_size, std::size_t context_length);

// Hash of the on-disk tree (sorted relative paths + bytes).
std::uint64_t dataset_dir_hash(const std::string& dir);

}  // namespace medgrad
