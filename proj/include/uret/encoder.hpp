#pragma once
// Bi-encoder: hashed token embeddings, mean pooling, two-layer tanh
// projection. One passage tower and one or five query towers depending on
// the sharing variant. Forward passes record a cache so gradients can be
// pushed back through encode_backward.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uret/corpus.hpp"

namespace uret {

enum class Variant { shared, task_markers, task_specific };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

struct Tensor {
    std::string name;
    std::size_t rows = 0, cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(std::string n, std::size_t r, std::size_t c)
        : name(std::move(n)), rows(r), cols(c), v(r * c, 0.0) {}
    double* row(std::size_t r) { return v.data() + r * cols; }
    const double* row(std::size_t r) const { return v.data() + r * cols; }
    std::size_t size() const { return v.size(); }
};

struct Tower {
    Tensor emb;  // vocab x dim
    Tensor w1;   // dim x dim
    Tensor b1;   // 1 x dim
    Tensor w2;   // dim x dim
    Tensor b2;   // 1 x dim
};

struct EncoderParams {
    Variant variant = Variant::shared;
    std::size_t dim = 128;
    std::size_t vocab = 0;
    Tower passage;
    std::vector<Tower> query;  // 1 (shared, task_markers) or 5 (task_specific)
    Tensor markers;            // 5 x dim, task_markers only

    // Uniform [-0.05, 0.05] weights, zero biases, deterministic in seed.
    static EncoderParams init(Variant variant, std::size_t dim, std::size_t vocab,
                              std::uint64_t seed);
    // Same shapes, all zeros. Gradient accumulators.
    EncoderParams zeros_like() const;

    // All tensors in a fixed order (flattening order for the optimizer,
    // finite differences, and the checkpoint format).
    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::size_t param_count() const;

    void save(const std::string& path) const;
    static EncoderParams load(const std::string& path);
};

// Token -> embedding row, fixed multiplicative hash.
std::size_t hash_token(const std::string& token, std::size_t vocab);

// Inverted dropout on the pooled representation; rate 0 or no rng disables it.
struct Dropout {
    double rate = 0.0;
    std::mt19937_64* rng = nullptr;
};

struct EncodeCache {
    int tower_index = -1;  // -1 = passage tower, else index into query towers
    std::vector<std::size_t> rows;
    int marker_row = -1;
    double inv_count = 0.0;
    std::vector<double> mask;  // per-dim dropout scale, empty if disabled
    std::vector<double> pooled;
    std::vector<double> h1;
    std::vector<double> out;
};

std::vector<double> encode_query(const EncoderParams& params, const std::string& text,
                                 TaskClass task_class, EncodeCache* cache = nullptr,
                                 Dropout dropout = {});
std::vector<double> encode_passage(const EncoderParams& params, const std::string& text,
                                   EncodeCache* cache = nullptr, Dropout dropout = {});

// Accumulates d(out)/d(params) * dout into grads.
void encode_backward(const EncoderParams& params, const EncodeCache& cache,
                     const std::vector<double>& dout, EncoderParams& grads);

// Exact inner product; throws on dimension mismatch.
double similarity(const std::vector<double>& q, const std::vector<double>& p);

}  // namespace uret
