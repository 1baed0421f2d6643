#include "uret/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "uret/io.hpp"
#include "uret/kernels.hpp"

namespace uret {

Variant variant_from_string(const std::string& s) {
    if (s == "shared") return Variant::shared;
    if (s == "task_markers") return Variant::task_markers;
    if (s == "task_specific") return Variant::task_specific;
    throw std::runtime_error("unknown variant: " + s);
}

std::string to_string(Variant v) {
    switch (v) {
        case Variant::shared: return "shared";
        case Variant::task_markers: return "task_markers";
        case Variant::task_specific: return "task_specific";
    }
    return "?";
}

namespace {

Tower make_tower(const std::string& prefix, std::size_t vocab, std::size_t dim) {
    Tower t;
    t.emb = Tensor(prefix + ".emb", vocab, dim);
    t.w1 = Tensor(prefix + ".w1", dim, dim);
    t.b1 = Tensor(prefix + ".b1", 1, dim);
    t.w2 = Tensor(prefix + ".w2", dim, dim);
    t.b2 = Tensor(prefix + ".b2", 1, dim);
    return t;
}

bool is_bias(const Tensor& t) {
    auto n = t.name;
    return n.size() >= 3 && (n.ends_with(".b1") || n.ends_with(".b2"));
}

}  // namespace

EncoderParams EncoderParams::init(Variant variant, std::size_t dim, std::size_t vocab,
                                  std::uint64_t seed) {
    if (dim < 2) throw std::runtime_error("encoder: dim must be >= 2");
    if (vocab < 1) throw std::runtime_error("encoder: vocab must be >= 1");
    EncoderParams p;
    p.variant = variant;
    p.dim = dim;
    p.vocab = vocab;
    p.passage = make_tower("p", vocab, dim);
    std::size_t query_towers = variant == Variant::task_specific ? 5 : 1;
    for (std::size_t i = 0; i < query_towers; ++i)
        p.query.push_back(make_tower("q" + std::to_string(i), vocab, dim));
    if (variant == Variant::task_markers) p.markers = Tensor("markers", 5, dim);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    for (Tensor* t : p.tensors()) {
        if (is_bias(*t)) continue;
        for (double& x : t->v) x = dist(rng);
    }
    return p;
}

EncoderParams EncoderParams::zeros_like() const {
    EncoderParams g = *this;
    for (Tensor* t : g.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
    return g;
}

std::vector<Tensor*> EncoderParams::tensors() {
    std::vector<Tensor*> out;
    auto add = [&](Tower& t) {
        out.push_back(&t.emb);
        out.push_back(&t.w1);
        out.push_back(&t.b1);
        out.push_back(&t.w2);
        out.push_back(&t.b2);
    };
    add(passage);
    for (auto& q : query) add(q);
    if (variant == Variant::task_markers) out.push_back(&markers);
    return out;
}

std::vector<const Tensor*> EncoderParams::tensors() const {
    auto mutable_list = const_cast<EncoderParams*>(this)->tensors();
    return std::vector<const Tensor*>(mutable_list.begin(), mutable_list.end());
}

std::size_t EncoderParams::param_count() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->size();
    return n;
}

void EncoderParams::save(const std::string& path) const {
    io::Writer w;
    w.magic("UENC");
    w.u8(static_cast<std::uint8_t>(variant));
    w.u32(static_cast<std::uint32_t>(dim));
    w.u32(static_cast<std::uint32_t>(vocab));
    auto list = tensors();
    w.u32(static_cast<std::uint32_t>(list.size()));
    for (const Tensor* t : list) {
        w.str(t->name);
        w.u32(static_cast<std::uint32_t>(t->rows));
        w.u32(static_cast<std::uint32_t>(t->cols));
        w.f64_array(t->v.data(), t->v.size());
    }
    w.save(path);
}

EncoderParams EncoderParams::load(const std::string& path) {
    io::Reader r = io::Reader::from_file(path);
    r.expect_magic("UENC");
    auto variant = static_cast<Variant>(r.u8());
    std::size_t dim = r.u32();
    std::size_t vocab = r.u32();
    EncoderParams p = EncoderParams::init(variant, dim, vocab, 0);
    auto list = p.tensors();
    std::uint32_t count = r.u32();
    if (count != list.size())
        throw std::runtime_error("checkpoint: tensor count mismatch in " + path);
    for (Tensor* t : list) {
        std::string name = r.str();
        std::uint32_t rows = r.u32(), cols = r.u32();
        if (name != t->name || rows != t->rows || cols != t->cols)
            throw std::runtime_error("checkpoint: unexpected tensor " + name + " in " + path);
        r.f64_array(t->v.data(), t->v.size());
    }
    return p;
}

std::size_t hash_token(const std::string& token, std::size_t vocab) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    h *= 0x9e3779b97f4a7c15ull;
    return static_cast<std::size_t>(h % vocab);
}

namespace {

// Shared forward pass. tower_index -1 selects the passage tower.
std::vector<double> encode_impl(const EncoderParams& params, const std::string& text,
                                int tower_index, int marker_row, EncodeCache* cache,
                                Dropout dropout) {
    const Tower& tower =
        tower_index < 0 ? params.passage : params.query.at(static_cast<std::size_t>(tower_index));
    std::size_t dim = params.dim;

    Tokens tokens = tokenize(text);
    std::vector<std::size_t> rows;
    rows.reserve(tokens.size());
    for (const auto& t : tokens) rows.push_back(hash_token(t, params.vocab));

    std::vector<double> pooled(dim, 0.0);
    for (std::size_t r : rows) kernels::axpy_f64(1.0, tower.emb.row(r), pooled.data(), dim);
    std::size_t count = rows.size();
    if (marker_row >= 0) {
        kernels::axpy_f64(1.0, params.markers.row(static_cast<std::size_t>(marker_row)),
                          pooled.data(), dim);
        ++count;
    }
    double inv_count = count ? 1.0 / static_cast<double>(count) : 0.0;
    for (double& x : pooled) x *= inv_count;

    std::vector<double> mask;
    if (dropout.rate > 0.0 && dropout.rng) {
        mask.resize(dim);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double keep = 1.0 - dropout.rate;
        for (std::size_t i = 0; i < dim; ++i)
            mask[i] = u(*dropout.rng) < keep ? 1.0 / keep : 0.0;
        for (std::size_t i = 0; i < dim; ++i) pooled[i] *= mask[i];
    }

    std::vector<double> h1(dim);
    for (std::size_t i = 0; i < dim; ++i)
        h1[i] = std::tanh(kernels::dot_f64(tower.w1.row(i), pooled.data(), dim) +
                          tower.b1.v[i]);
    std::vector<double> out(dim);
    for (std::size_t i = 0; i < dim; ++i)
        out[i] = kernels::dot_f64(tower.w2.row(i), h1.data(), dim) + tower.b2.v[i];

    if (cache) {
        cache->tower_index = tower_index;
        cache->rows = std::move(rows);
        cache->marker_row = marker_row;
        cache->inv_count = inv_count;
        cache->mask = std::move(mask);
        cache->pooled = pooled;
        cache->h1 = h1;
        cache->out = out;
    }
    return out;
}

}  // namespace

std::vector<double> encode_query(const EncoderParams& params, const std::string& text,
                                 TaskClass task_class, EncodeCache* cache,
                                 Dropout dropout) {
    int tower_index = 0;
    int marker_row = -1;
    if (params.variant == Variant::task_specific)
        tower_index = static_cast<int>(task_class);
    else if (params.variant == Variant::task_markers)
        marker_row = static_cast<int>(task_class);
    return encode_impl(params, text, tower_index, marker_row, cache, dropout);
}

std::vector<double> encode_passage(const EncoderParams& params, const std::string& text,
                                   EncodeCache* cache, Dropout dropout) {
    return encode_impl(params, text, -1, -1, cache, dropout);
}

void encode_backward(const EncoderParams& params, const EncodeCache& cache,
                     const std::vector<double>& dout, EncoderParams& grads) {
    std::size_t dim = params.dim;
    const Tower& tower = cache.tower_index < 0
                             ? params.passage
                             : params.query.at(static_cast<std::size_t>(cache.tower_index));
    Tower& gtower = cache.tower_index < 0
                        ? grads.passage
                        : grads.query.at(static_cast<std::size_t>(cache.tower_index));

    // out = w2 h1 + b2
    std::vector<double> dh1(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        kernels::axpy_f64(dout[i], cache.h1.data(), gtower.w2.row(i), dim);
        gtower.b2.v[i] += dout[i];
        kernels::axpy_f64(dout[i], tower.w2.row(i), dh1.data(), dim);
    }

    // h1 = tanh(w1 pooled + b1)
    std::vector<double> dz1(dim);
    for (std::size_t i = 0; i < dim; ++i)
        dz1[i] = dh1[i] * (1.0 - cache.h1[i] * cache.h1[i]);
    std::vector<double> dpooled(dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        kernels::axpy_f64(dz1[i], cache.pooled.data(), gtower.w1.row(i), dim);
        gtower.b1.v[i] += dz1[i];
        kernels::axpy_f64(dz1[i], tower.w1.row(i), dpooled.data(), dim);
    }

    if (!cache.mask.empty())
        for (std::size_t i = 0; i < dim; ++i) dpooled[i] *= cache.mask[i];

    for (std::size_t r : cache.rows)
        kernels::axpy_f64(cache.inv_count, dpooled.data(), gtower.emb.row(r), dim);
    if (cache.marker_row >= 0)
        kernels::axpy_f64(cache.inv_count, dpooled.data(),
                          grads.markers.row(static_cast<std::size_t>(cache.marker_row)), dim);
}

double similarity(const std::vector<double>& q, const std::vector<double>& p) {
    if (q.size() != p.size())
        throw std::runtime_error("similarity: dimension mismatch (" +
                                 std::to_string(q.size()) + " vs " +
                                 std::to_string(p.size()) + ")");
    return kernels::dot_f64(q.data(), p.data(), q.size());
}

}  // namespace uret
