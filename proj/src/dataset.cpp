#include "fedhash/dataset.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "fedhash/errors.hpp"
#include "fedhash/prng.hpp"

namespace fedhash {

namespace {

// Ten 8x8 digit glyphs, one row per string, '#' = 1. Drawn on a 4x4 cell
// grid and upsampled 2x: the thick strokes keep classes apart under the
// generator's 1-2 pixel shifts.
constexpr const char* kGlyphArt[kGlyphClasses][kGlyphHeight] = {
    {
        "########",
        "########",
        "##....##",
        "##....##",
        "##....##",
        "##....##",
        "########",
        "########",
    },
    {
        "..##....",
        "..##....",
        "####....",
        "####....",
        "..##....",
        "..##....",
        "..##....",
        "..##....",
    },
    {
        "######..",
        "######..",
        "....##..",
        "....##..",
        "..##....",
        "..##....",
        "########",
        "########",
    },
    {
        "########",
        "########",
        "....####",
        "....####",
        "......##",
        "......##",
        "########",
        "########",
    },
    {
        "##..##..",
        "##..##..",
        "##..##..",
        "##..##..",
        "########",
        "########",
        "....##..",
        "....##..",
    },
    {
        "########",
        "########",
        "####....",
        "####....",
        "....####",
        "....####",
        "######..",
        "######..",
    },
    {
        "##......",
        "##......",
        "########",
        "########",
        "##....##",
        "##....##",
        "########",
        "########",
    },
    {
        "########",
        "########",
        "......##",
        "......##",
        "....##..",
        "....##..",
        "....##..",
        "....##..",
    },
    {
        "########",
        "########",
        "########",
        "########",
        "##....##",
        "##....##",
        "########",
        "########",
    },
    {
        "########",
        "########",
        "##....##",
        "##....##",
        "########",
        "########",
        "......##",
        "......##",
    },
};

std::array<std::array<float, kGlyphPixels>, kGlyphClasses> build_masks() {
    std::array<std::array<float, kGlyphPixels>, kGlyphClasses> masks{};
    for (uint32_t c = 0; c < kGlyphClasses; ++c) {
        for (uint32_t r = 0; r < kGlyphHeight; ++r) {
            for (uint32_t x = 0; x < kGlyphWidth; ++x) {
                masks[c][r * kGlyphWidth + x] = kGlyphArt[c][r][x] == '#' ? 1.0f : 0.0f;
            }
        }
    }
    return masks;
}

const std::array<std::array<float, kGlyphPixels>, kGlyphClasses>& masks() {
    static const auto m = build_masks();
    return m;
}

}  // namespace

const float* glyph_mask(uint32_t cls) {
    return masks()[cls].data();
}

Batch GlyphDataset::batch(const std::vector<uint32_t>& example_indices) const {
    Batch b;
    b.batch_size = example_indices.size();
    b.input_dim = kGlyphPixels;
    b.features.resize(b.batch_size * kGlyphPixels);
    b.labels.resize(b.batch_size);
    for (size_t i = 0; i < example_indices.size(); ++i) {
        const uint32_t e = example_indices[i];
        std::memcpy(b.features.data() + i * kGlyphPixels, images.data() + size_t{e} * kGlyphPixels,
                    kGlyphPixels * sizeof(float));
        b.labels[i] = labels[e];
    }
    return b;
}

Batch GlyphDataset::all() const {
    std::vector<uint32_t> idx(size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
    return batch(idx);
}

GlyphDataset generate_glyphs(size_t n, uint64_t seed, float p_flip, uint32_t max_shift) {
    if (n < 1) throw ConfigError("dataset.n", "need at least one example");
    if (!(p_flip >= 0.0f && p_flip < 0.5f)) {
        throw ConfigError("dataset.p_flip", "must lie in [0, 0.5)");
    }
    if (max_shift > 2) throw ConfigError("dataset.shift", "must be 0, 1 or 2");

    GlyphDataset data;
    data.seed = seed;
    data.p_flip = p_flip;
    data.max_shift = max_shift;
    data.images.resize(n * kGlyphPixels);
    data.labels.resize(n);

    Xoshiro256ss rng(seed);
    const int s = static_cast<int>(max_shift);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t cls = static_cast<uint32_t>(rng.bounded(kGlyphClasses));
        data.labels[i] = cls;
        float* img = data.images.data() + i * kGlyphPixels;
        const float* mask = glyph_mask(cls);

        int dy = 0, dx = 0;
        if (s > 0) {
            dy = static_cast<int>(rng.bounded(2 * s + 1)) - s;
            dx = static_cast<int>(rng.bounded(2 * s + 1)) - s;
        }
        for (int y = 0; y < static_cast<int>(kGlyphHeight); ++y) {
            for (int x = 0; x < static_cast<int>(kGlyphWidth); ++x) {
                const int sy = y - dy;
                const int sx = x - dx;
                const bool in = sy >= 0 && sy < static_cast<int>(kGlyphHeight) && sx >= 0 &&
                                sx < static_cast<int>(kGlyphWidth);
                img[y * kGlyphWidth + x] = in ? mask[sy * kGlyphWidth + sx] : 0.0f;
            }
        }
        if (p_flip > 0.0f) {
            for (uint32_t p = 0; p < kGlyphPixels; ++p) {
                if (rng.next_double() < static_cast<double>(p_flip)) {
                    img[p] = 1.0f - img[p];
                }
            }
        }
    }
    return data;
}

namespace {

constexpr char kGlyphMagic[4] = {'F', 'G', 'L', 'Y'};
constexpr uint32_t kGlyphVersion = 1;

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[i]) << (8 * i);
    return v;
}

uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

void write_glyph_file(const std::string& path, const GlyphDataset& data) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot open '" + path + "' for writing");

    std::vector<uint8_t> header;
    header.insert(header.end(), kGlyphMagic, kGlyphMagic + 4);
    put_u32(header, kGlyphVersion);
    put_u64(header, data.size());
    put_u32(header, kGlyphHeight);
    put_u32(header, kGlyphWidth);
    put_u32(header, kGlyphClasses);
    put_u64(header, data.seed);
    uint32_t flip_bits;
    std::memcpy(&flip_bits, &data.p_flip, 4);
    put_u32(header, flip_bits);
    put_u32(header, data.max_shift);
    if (std::fwrite(header.data(), 1, header.size(), f.get()) != header.size()) {
        throw Error("short write to '" + path + "'");
    }

    std::vector<uint8_t> body;
    body.reserve(data.images.size() * 4 + data.labels.size() * 4);
    for (float v : data.images) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(body, bits);
    }
    for (uint32_t v : data.labels) put_u32(body, v);
    if (std::fwrite(body.data(), 1, body.size(), f.get()) != body.size()) {
        throw Error("short write to '" + path + "'");
    }
}

GlyphDataset read_glyph_file(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open '" + path + "' for reading");
    uint8_t header[44];
    if (std::fread(header, 1, sizeof(header), f.get()) != sizeof(header)) {
        throw FramingError("'" + path + "': truncated header");
    }
    if (std::memcmp(header, kGlyphMagic, 4) != 0) {
        throw FramingError("'" + path + "': bad magic");
    }
    if (get_u32(header + 4) != kGlyphVersion) {
        throw FramingError("'" + path + "': unsupported version");
    }
    const uint64_t count = get_u64(header + 8);
    if (get_u32(header + 16) != kGlyphHeight || get_u32(header + 20) != kGlyphWidth ||
        get_u32(header + 24) != kGlyphClasses) {
        throw FramingError("'" + path + "': unexpected geometry");
    }
    GlyphDataset data;
    data.seed = get_u64(header + 28);
    const uint32_t flip_bits = get_u32(header + 36);
    std::memcpy(&data.p_flip, &flip_bits, 4);
    data.max_shift = get_u32(header + 40);

    const size_t pixel_bytes = count * kGlyphPixels * 4;
    std::vector<uint8_t> body(pixel_bytes + count * 4);
    if (std::fread(body.data(), 1, body.size(), f.get()) != body.size()) {
        throw FramingError("'" + path + "': truncated body");
    }
    data.images.resize(count * kGlyphPixels);
    for (size_t i = 0; i < data.images.size(); ++i) {
        const uint32_t bits = get_u32(body.data() + i * 4);
        std::memcpy(&data.images[i], &bits, 4);
    }
    data.labels.resize(count);
    for (size_t i = 0; i < count; ++i) {
        data.labels[i] = get_u32(body.data() + pixel_bytes + i * 4);
    }
    return data;
}

Partition split_uniform(size_t n, size_t clients, uint64_t seed) {
    if (clients < 1) throw ConfigError("clients", "need at least one client");
    if (n < clients) throw ConfigError("dataset.n", "fewer examples than clients");
    Partition part;
    part.kind = PartitionKind::Uniform;
    part.shards.resize(clients);
    const std::vector<uint64_t> perm = random_sort(n, seed);
    for (size_t i = 0; i < n; ++i) {
        part.shards[i % clients].push_back(static_cast<uint32_t>(perm[i]));
    }
    return part;
}

namespace {

double draw_normal(Xoshiro256ss& rng) {
    // Box-Muller; u1 shifted away from zero.
    const double u1 = 1.0 - rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Marsaglia-Tsang Gamma(alpha, 1); the alpha < 1 case boosts from alpha + 1.
double draw_gamma(double alpha, Xoshiro256ss& rng) {
    if (alpha < 1.0) {
        const double u = 1.0 - rng.next_double();
        return draw_gamma(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = draw_normal(rng);
        const double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        const double v = t * t * t;
        const double u = 1.0 - rng.next_double();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

}  // namespace

Partition split_label_skew(const std::vector<uint32_t>& labels, size_t clients, double alpha,
                           uint64_t seed) {
    if (clients < 1) throw ConfigError("clients", "need at least one client");
    if (!(alpha > 0.0)) throw ConfigError("partition.alpha", "must be positive");

    std::vector<std::vector<uint32_t>> by_class(kGlyphClasses);
    for (size_t i = 0; i < labels.size(); ++i) {
        by_class[labels[i]].push_back(static_cast<uint32_t>(i));
    }

    Xoshiro256ss rng(seed);
    for (int attempt = 0; attempt < 10; ++attempt) {
        Partition part;
        part.kind = PartitionKind::LabelSkew;
        part.shards.resize(clients);
        for (auto& cls : by_class) {
            std::vector<uint32_t> order = cls;
            fisher_yates(order, rng);
            std::vector<double> share(clients);
            double total = 0.0;
            for (auto& g : share) {
                g = draw_gamma(alpha, rng);
                total += g;
            }
            const size_t nc = order.size();
            double cum = 0.0;
            size_t start = 0;
            for (size_t i = 0; i < clients; ++i) {
                cum += share[i] / total;
                const size_t end =
                    (i + 1 == clients) ? nc : static_cast<size_t>(cum * static_cast<double>(nc));
                for (size_t j = start; j < end && j < nc; ++j) {
                    part.shards[i].push_back(order[j]);
                }
                start = std::min(end, nc);
            }
        }
        bool any_empty = false;
        for (const auto& shard : part.shards) any_empty |= shard.empty();
        if (!any_empty) return part;
    }
    throw ConfigError("partition.alpha",
                      "could not draw a skewed partition without an empty client in 10 attempts");
}

TrainEvalSplit train_eval_split(size_t n) {
    TrainEvalSplit split;
    const size_t train_n = n - n / 5;
    split.train.reserve(train_n);
    split.eval.reserve(n - train_n);
    for (size_t i = 0; i < train_n; ++i) split.train.push_back(static_cast<uint32_t>(i));
    for (size_t i = train_n; i < n; ++i) split.eval.push_back(static_cast<uint32_t>(i));
    return split;
}

}  // namespace fedhash
