#include "uret/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "uret/io.hpp"
#include "uret/kernels.hpp"

namespace uret {

namespace {

std::vector<float> to_f32(const std::vector<double>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

// score desc, ties by passage_id asc, truncate to k
std::vector<ScoredPassage> rank_candidates(const FlatIndex& index,
                                           const std::vector<std::uint32_t>& rows,
                                           const std::vector<float>& qf, std::size_t k) {
    std::vector<std::pair<double, std::uint32_t>> scored;
    scored.reserve(rows.size());
    for (std::uint32_t r : rows)
        scored.emplace_back(kernels::dot_f32(qf.data(), index.row(r), index.dim), r);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return index.ids[a.second] < index.ids[b.second];
    });
    if (scored.size() > k) scored.resize(k);
    std::vector<ScoredPassage> out;
    out.reserve(scored.size());
    for (const auto& [s, r] : scored) out.push_back({index.ids[r], s});
    return out;
}

void check_query(const FlatIndex& index, const std::vector<double>& query, std::size_t k) {
    if (k < 1) throw std::runtime_error("mips: k must be >= 1");
    if (query.size() != index.dim)
        throw std::runtime_error("mips: query dim " + std::to_string(query.size()) +
                                 " != index dim " + std::to_string(index.dim));
}

}  // namespace

FlatIndex embed_corpus(const EncoderParams& params, const std::vector<Passage>& passages,
                       std::size_t threads) {
    FlatIndex index;
    index.dim = params.dim;
    index.ids.reserve(passages.size());
    for (const auto& p : passages) index.ids.push_back(p.passage_id);
    index.vectors.resize(passages.size() * params.dim);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::vector<double> v = encode_passage(params, passages[i].text);
            float* row = index.vectors.data() + i * params.dim;
            for (std::size_t d = 0; d < params.dim; ++d) row[d] = static_cast<float>(v[d]);
        }
    };
    threads = std::max<std::size_t>(1, std::min(threads, passages.size()));
    if (threads == 1) {
        work(0, passages.size());
    } else {
        std::vector<std::thread> pool;
        std::size_t per = (passages.size() + threads - 1) / threads;
        for (std::size_t t = 0; t < threads; ++t) {
            std::size_t begin = t * per;
            std::size_t end = std::min(begin + per, passages.size());
            if (begin < end) pool.emplace_back(work, begin, end);
        }
        for (auto& th : pool) th.join();
    }
    return index;
}

std::vector<ScoredPassage> mips_search_flat(const FlatIndex& index,
                                            const std::vector<double>& query,
                                            std::size_t k) {
    check_query(index, query, k);
    std::vector<std::uint32_t> all(index.size());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    return rank_candidates(index, all, to_f32(query), k);
}

IvfIndex build_ivf(FlatIndex base, std::size_t centroid_count, std::uint64_t seed,
                   std::size_t default_nprobe) {
    std::size_t n = base.size();
    std::size_t dim = base.dim;
    if (centroid_count < 1 || centroid_count > n)
        throw std::runtime_error("ivf: need 1 <= C <= N, got C=" +
                                 std::to_string(centroid_count) + " N=" + std::to_string(n));

    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> order(n);
    for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> centroids(centroid_count * dim);
    for (std::size_t c = 0; c < centroid_count; ++c) {
        const float* row = base.row(order[c]);
        for (std::size_t d = 0; d < dim; ++d) centroids[c * dim + d] = row[d];
    }

    std::vector<float> cnorm(centroid_count * dim);
    auto normalize = [&] {
        for (std::size_t c = 0; c < centroid_count; ++c) {
            const double* src = centroids.data() + c * dim;
            double norm = std::sqrt(kernels::dot_f64(src, src, dim));
            double inv = norm > 0.0 ? 1.0 / norm : 1.0;
            for (std::size_t d = 0; d < dim; ++d)
                cnorm[c * dim + d] = static_cast<float>(src[d] * inv);
        }
    };
    auto assign_row = [&](std::size_t i) {
        const float* row = base.row(i);
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centroid_count; ++c) {
            double s = kernels::dot_f32(row, cnorm.data() + c * dim, dim);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        return best;
    };

    std::vector<std::vector<std::uint32_t>> cells;
    for (int iter = 0; iter < 20; ++iter) {
        normalize();
        cells.assign(centroid_count, {});
        for (std::size_t i = 0; i < n; ++i)
            cells[assign_row(i)].push_back(static_cast<std::uint32_t>(i));
        for (std::size_t c = 0; c < centroid_count; ++c) {
            double* dst = centroids.data() + c * dim;
            if (cells[c].empty()) {
                // reseed dead cell from a random data row
                std::uint32_t r = static_cast<std::uint32_t>(rng() % n);
                const float* row = base.row(r);
                for (std::size_t d = 0; d < dim; ++d) dst[d] = row[d];
                continue;
            }
            std::fill(dst, dst + dim, 0.0);
            for (std::uint32_t i : cells[c]) {
                const float* row = base.row(i);
                for (std::size_t d = 0; d < dim; ++d) dst[d] += row[d];
            }
            double inv = 1.0 / static_cast<double>(cells[c].size());
            for (std::size_t d = 0; d < dim; ++d) dst[d] *= inv;
        }
    }
    normalize();
    cells.assign(centroid_count, {});
    for (std::size_t i = 0; i < n; ++i)
        cells[assign_row(i)].push_back(static_cast<std::uint32_t>(i));

    IvfIndex index;
    index.base = std::move(base);
    index.centroid_count = centroid_count;
    index.centroids = std::move(cnorm);
    index.assignments = std::move(cells);
    index.default_nprobe = std::min(std::max<std::size_t>(1, default_nprobe), centroid_count);
    return index;
}

std::vector<ScoredPassage> mips_search_ivf(const IvfIndex& index,
                                           const std::vector<double>& query,
                                           std::size_t k, std::size_t nprobe) {
    check_query(index.base, query, k);
    if (nprobe < 1 || nprobe > index.centroid_count)
        throw std::runtime_error("ivf: need 1 <= nprobe <= C");
    std::vector<float> qf = to_f32(query);
    std::size_t dim = index.base.dim;

    std::vector<std::pair<double, std::uint32_t>> cell_scores;
    cell_scores.reserve(index.centroid_count);
    for (std::uint32_t c = 0; c < index.centroid_count; ++c)
        cell_scores.emplace_back(
            kernels::dot_f32(qf.data(), index.centroids.data() + c * dim, dim), c);
    std::sort(cell_scores.begin(), cell_scores.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });

    std::vector<std::uint32_t> candidates;
    for (std::size_t i = 0; i < nprobe; ++i) {
        const auto& cell = index.assignments[cell_scores[i].second];
        candidates.insert(candidates.end(), cell.begin(), cell.end());
    }
    return rank_candidates(index.base, candidates, qf, k);
}

namespace {

constexpr std::uint8_t kFlagFlat = 0;
constexpr std::uint8_t kFlagIvf = 1;

void write_base(io::Writer& w, const FlatIndex& index, std::uint8_t flags) {
    w.magic("UIVX");
    w.u8(1);  // version
    w.u8(flags);
    w.u32(static_cast<std::uint32_t>(index.dim));
    w.u64(index.size());
    for (const auto& id : index.ids) w.str(id);
    w.f32_array(index.vectors.data(), index.vectors.size());
}

FlatIndex read_base(io::Reader& r, std::uint8_t* flags) {
    r.expect_magic("UIVX");
    std::uint8_t version = r.u8();
    if (version != 1) throw std::runtime_error("index: unsupported version");
    *flags = r.u8();
    FlatIndex index;
    index.dim = r.u32();
    std::uint64_t n = r.u64();
    index.ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) index.ids.push_back(r.str());
    index.vectors.resize(n * index.dim);
    r.f32_array(index.vectors.data(), index.vectors.size());
    return index;
}

}  // namespace

void save_flat(const FlatIndex& index, const std::string& path) {
    io::Writer w;
    write_base(w, index, kFlagFlat);
    w.save(path);
}

void save_ivf(const IvfIndex& index, const std::string& path) {
    io::Writer w;
    write_base(w, index.base, kFlagIvf);
    w.u32(static_cast<std::uint32_t>(index.centroid_count));
    w.u32(static_cast<std::uint32_t>(index.default_nprobe));
    w.f32_array(index.centroids.data(), index.centroids.size());
    for (const auto& cell : index.assignments) {
        w.u64(cell.size());
        for (std::uint32_t i : cell) w.u32(i);
    }
    w.save(path);
}

LoadedIndex load_index(const std::string& path) {
    io::Reader r = io::Reader::from_file(path);
    std::uint8_t flags = 0;
    FlatIndex base = read_base(r, &flags);
    LoadedIndex out;
    if (flags == kFlagFlat) {
        out.is_ivf = false;
        out.flat = std::move(base);
        return out;
    }
    if (flags != kFlagIvf) throw std::runtime_error("index: unknown flags in " + path);
    out.is_ivf = true;
    IvfIndex& ivf = out.ivf;
    ivf.base = std::move(base);
    ivf.centroid_count = r.u32();
    ivf.default_nprobe = r.u32();
    ivf.centroids.resize(ivf.centroid_count * ivf.base.dim);
    r.f32_array(ivf.centroids.data(), ivf.centroids.size());
    ivf.assignments.resize(ivf.centroid_count);
    for (auto& cell : ivf.assignments) {
        std::uint64_t c = r.u64();
        cell.resize(c);
        for (std::uint64_t i = 0; i < c; ++i) cell[i] = r.u32();
    }
    return out;
}

}  // namespace uret
