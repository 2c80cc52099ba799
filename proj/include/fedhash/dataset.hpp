#pragma once

// Procedural glyph-bitmap dataset and client partitioners. The generator is a
// pure function of (n, seed, p_flip, max_shift): per example it draws a class,
// a 2-D shift (when max_shift > 0), and per-pixel flip decisions (when
// p_flip > 0), in that order, from one stream.

#include <cstdint>
#include <string>
#include <vector>

#include "fedhash/model.hpp"

namespace fedhash {

inline constexpr uint32_t kGlyphHeight = 8;
inline constexpr uint32_t kGlyphWidth = 8;
inline constexpr uint32_t kGlyphClasses = 10;
inline constexpr uint32_t kGlyphPixels = kGlyphHeight * kGlyphWidth;

struct GlyphDataset {
    std::vector<float> images;     // n x 64, values in [0, 1]
    std::vector<uint32_t> labels;  // class ids in [0, 10)
    uint64_t seed = 0;
    float p_flip = 0.0f;
    uint32_t max_shift = 0;

    size_t size() const { return labels.size(); }

    Batch batch(const std::vector<uint32_t>& example_indices) const;
    Batch all() const;
};

// The ten built-in 8x8 glyph masks, row-major floats in {0, 1}.
const float* glyph_mask(uint32_t cls);

// Deterministic generation: n >= 1, p_flip in [0, 0.5), max_shift in {0,1,2}.
GlyphDataset generate_glyphs(size_t n, uint64_t seed, float p_flip, uint32_t max_shift);

// Flat binary export: header (magic "FGLY", version u32, count u64, height
// u32, width u32, classes u32, seed u64, p_flip f32, max_shift u32, all
// little-endian), then count*height*width f32 images, then count u32 labels.
void write_glyph_file(const std::string& path, const GlyphDataset& data);
GlyphDataset read_glyph_file(const std::string& path);

enum class PartitionKind { Uniform, LabelSkew };

struct Partition {
    PartitionKind kind = PartitionKind::Uniform;
    std::vector<std::vector<uint32_t>> shards;  // client -> example indices

    size_t clients() const { return shards.size(); }
};

// Seeded permutation of [0, n) dealt round-robin into c shards; sizes differ
// by at most one.
Partition split_uniform(size_t n, size_t clients, uint64_t seed);

// Per-class Dirichlet(alpha) proportions across clients: for every class
// (ascending), draw client shares from normalized Gamma(alpha, 1) variates
// and deal that class's examples (in seeded shuffled order) to clients by
// cumulative share. Redraws up to 10 times if any client ends up empty.
Partition split_label_skew(const std::vector<uint32_t>& labels, size_t clients, double alpha,
                           uint64_t seed);

// Held-out split: the last fifth of example indices; the rest is the training
// pool handed to the partitioner.
struct TrainEvalSplit {
    std::vector<uint32_t> train;
    std::vector<uint32_t> eval;
};
TrainEvalSplit train_eval_split(size_t n);

}  // namespace fedhash
