#include "uret/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "uret/io.hpp"

namespace uret {

Bm25Index Bm25Index::build(const std::vector<Passage>& passages, double k1, double b) {
    if (passages.empty()) throw std::runtime_error("bm25: nothing to index");
    Bm25Index idx;
    idx.k1_ = k1;
    idx.b_ = b;

    std::vector<const Passage*> sorted;
    sorted.reserve(passages.size());
    for (const auto& p : passages) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const Passage* a, const Passage* b) { return a->passage_id < b->passage_id; });
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        if (sorted[i]->passage_id == sorted[i + 1]->passage_id)
            throw std::runtime_error("bm25: duplicate passage_id: " + sorted[i]->passage_id);
    }

    double total_len = 0.0;
    for (std::uint32_t doc = 0; doc < sorted.size(); ++doc) {
        const Passage& p = *sorted[doc];
        idx.ids_.push_back(p.passage_id);
        idx.lengths_.push_back(static_cast<std::uint32_t>(p.tokens.size()));
        total_len += static_cast<double>(p.tokens.size());
        std::unordered_map<std::string, std::uint32_t> tf;
        for (const auto& t : p.tokens) ++tf[t];
        for (const auto& [term, count] : tf) idx.postings_[term].push_back({doc, count});
    }
    idx.avg_len_ = total_len / static_cast<double>(sorted.size());
    return idx;
}

double Bm25Index::idf(std::size_t df) const {
    double n = static_cast<double>(ids_.size());
    double d = static_cast<double>(df);
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double Bm25Index::score(const Tokens& query_tokens, const std::string& passage_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), passage_id);
    if (it == ids_.end() || *it != passage_id)
        throw std::runtime_error("bm25: unknown passage_id: " + passage_id);
    std::uint32_t doc = static_cast<std::uint32_t>(it - ids_.begin());

    std::set<std::string> unique(query_tokens.begin(), query_tokens.end());
    double len = static_cast<double>(lengths_[doc]);
    double norm = k1_ * (1.0 - b_ + b_ * len / avg_len_);
    double total = 0.0;
    for (const auto& term : unique) {
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        const auto& plist = pit->second;
        auto dit = std::lower_bound(plist.begin(), plist.end(), doc,
                                    [](const Posting& p, std::uint32_t d) { return p.doc < d; });
        if (dit == plist.end() || dit->doc != doc) continue;
        double tf = static_cast<double>(dit->tf);
        total += idf(plist.size()) * tf * (k1_ + 1.0) / (tf + norm);
    }
    return total;
}

std::vector<std::pair<std::uint32_t, double>> Bm25Index::score_all(const Tokens& query) const {
    std::set<std::string> unique(query.begin(), query.end());
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& term : unique) {
        auto pit = postings_.find(term);
        if (pit == postings_.end()) continue;
        double w = idf(pit->second.size());
        for (const Posting& p : pit->second) {
            double len = static_cast<double>(lengths_[p.doc]);
            double norm = k1_ * (1.0 - b_ + b_ * len / avg_len_);
            double tf = static_cast<double>(p.tf);
            acc[p.doc] += w * tf * (k1_ + 1.0) / (tf + norm);
        }
    }
    std::vector<std::pair<std::uint32_t, double>> out(acc.begin(), acc.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;  // ids_ is sorted, so doc order == id order
    });
    return out;
}

std::vector<ScoredPassage> Bm25Index::search(const Tokens& query_tokens,
                                             std::size_t k) const {
    if (k < 1) throw std::runtime_error("bm25: k must be >= 1");
    auto scored = score_all(query_tokens);
    std::vector<ScoredPassage> out;
    for (const auto& [doc, s] : scored) {
        if (s <= 0.0) continue;
        if (out.size() == k) break;
        out.push_back({ids_[doc], s});
    }
    return out;
}

std::optional<std::string> Bm25Index::mine_confounder(
    const QueryRecord& query, const std::set<std::string>& exclude) const {
    auto scored = score_all(tokenize(query.text));
    for (const auto& [doc, s] : scored) {
        if (s <= 0.0) break;
        if (!exclude.count(ids_[doc])) return ids_[doc];
    }
    return std::nullopt;
}

void Bm25Index::save(const std::string& path) const {
    io::Writer w;
    w.magic("UBM1");
    w.f64(k1_);
    w.f64(b_);
    w.f64(avg_len_);
    w.u64(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        w.str(ids_[i]);
        w.u32(lengths_[i]);
    }
    w.u64(postings_.size());
    for (const auto& [term, plist] : postings_) {
        w.str(term);
        w.u32(static_cast<std::uint32_t>(plist.size()));
        for (const Posting& p : plist) {
            w.u32(p.doc);
            w.u32(p.tf);
        }
    }
    w.save(path);
}

Bm25Index Bm25Index::load(const std::string& path) {
    io::Reader r = io::Reader::from_file(path);
    r.expect_magic("UBM1");
    Bm25Index idx;
    idx.k1_ = r.f64();
    idx.b_ = r.f64();
    idx.avg_len_ = r.f64();
    std::uint64_t n = r.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        idx.ids_.push_back(r.str());
        idx.lengths_.push_back(r.u32());
    }
    std::uint64_t terms = r.u64();
    for (std::uint64_t i = 0; i < terms; ++i) {
        std::string term = r.str();
        std::uint32_t cnt = r.u32();
        auto& plist = idx.postings_[term];
        plist.resize(cnt);
        for (std::uint32_t j = 0; j < cnt; ++j) {
            plist[j].doc = r.u32();
            plist[j].tf = r.u32();
        }
    }
    return idx;
}

}  // namespace uret
