#pragma once
// Dense passage index: exact flat MIPS and an IVF (coarse-quantized)
// approximation. Vectors are stored as f32; scores accumulate in f64 via the
// fixed-order dot kernel, so results are identical across save/load and
// kernel backends.

#include <cstdint>
#include <string>
#include <vector>

#include "uret/bm25.hpp"
#include "uret/corpus.hpp"
#include "uret/encoder.hpp"

namespace uret {

struct FlatIndex {
    std::size_t dim = 0;
    std::vector<std::string> ids;
    std::vector<float> vectors;  // row-major, ids.size() x dim

    std::size_t size() const { return ids.size(); }
    const float* row(std::size_t i) const { return vectors.data() + i * dim; }
};

struct IvfIndex {
    FlatIndex base;
    std::size_t centroid_count = 0;
    std::vector<float> centroids;                       // C x dim
    std::vector<std::vector<std::uint32_t>> assignments;  // partition of rows
    std::size_t default_nprobe = 1;
};

// One vector per passage via encode_passage, order preserved. `threads`
// bounds the fan-out; output is independent of it.
FlatIndex embed_corpus(const EncoderParams& params, const std::vector<Passage>& passages,
                       std::size_t threads = 1);

// Exact top-k by inner product, score desc, ties by passage_id asc.
std::vector<ScoredPassage> mips_search_flat(const FlatIndex& index,
                                            const std::vector<double>& query,
                                            std::size_t k);

// Spherical k-means-style clustering (20 iterations, assignment by inner
// product against L2-normalized centroids).
IvfIndex build_ivf(FlatIndex base, std::size_t centroid_count, std::uint64_t seed,
                   std::size_t default_nprobe = 1);

// Scans the nprobe cells whose normalized centroids score highest against the
// query; exact scoring inside scanned cells.
std::vector<ScoredPassage> mips_search_ivf(const IvfIndex& index,
                                           const std::vector<double>& query,
                                           std::size_t k, std::size_t nprobe);

void save_flat(const FlatIndex& index, const std::string& path);
void save_ivf(const IvfIndex& index, const std::string& path);

// Loads either form; exactly one output pointer is filled, flag says which.
struct LoadedIndex {
    bool is_ivf = false;
    FlatIndex flat;  // valid when !is_ivf
    IvfIndex ivf;    // valid when is_ivf
};
LoadedIndex load_index(const std::string& path);

}  // namespace uret
