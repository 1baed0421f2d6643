#pragma once
// Okapi BM25 inverted index: retrieval baseline and hard-confounder source.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uret/corpus.hpp"

namespace uret {

struct ScoredPassage {
    std::string passage_id;
    double score = 0.0;
};

class Bm25Index {
public:
    // Query terms are deduplicated before scoring;
    // idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
    static Bm25Index build(const std::vector<Passage>& passages, double k1 = 1.2,
                           double b = 0.75);

    double score(const Tokens& query_tokens, const std::string& passage_id) const;

    // Top-k by score desc, ties by passage_id asc; zero-score passages dropped.
    std::vector<ScoredPassage> search(const Tokens& query_tokens, std::size_t k) const;

    // Highest-scoring passage not in `exclude`; absent if none scores > 0.
    std::optional<std::string> mine_confounder(const QueryRecord& query,
                                               const std::set<std::string>& exclude) const;

    std::size_t size() const { return ids_.size(); }
    double avg_doc_length() const { return avg_len_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    const std::vector<std::string>& passage_ids() const { return ids_; }

    void save(const std::string& path) const;
    static Bm25Index load(const std::string& path);

    // Exposed for oracle tests.
    struct Posting {
        std::uint32_t doc = 0;  // index into ids_
        std::uint32_t tf = 0;
    };
    const std::map<std::string, std::vector<Posting>>& postings() const {
        return postings_;
    }
    std::uint32_t doc_length(std::uint32_t doc) const { return lengths_[doc]; }

private:
    // Accumulates per-document scores for the unique query terms.
    std::vector<std::pair<std::uint32_t, double>> score_all(const Tokens& query) const;
    double idf(std::size_t df) const;

    std::vector<std::string> ids_;  // sorted ascending
    std::vector<std::uint32_t> lengths_;
    std::map<std::string, std::vector<Posting>> postings_;
    double avg_len_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
};

}  // namespace uret
