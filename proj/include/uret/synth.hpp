#pragma once
// Deterministic synthetic benchmark: ~2,000 passages and three tasks.
//
//   kwqa      keyword QA; queries name content words of the gold passage and
//             carry the page title as the answer string (answer-bearing).
//   parqa     paraphrase QA; query vocabulary is disjoint from the corpus,
//             so lexical retrieval scores ~0 and only a trained encoder can
//             learn the query-word -> passage-word alignment.
//   slotfill  title-prefixed slot filling; query = page title + relation.

#include <cstdint>
#include <vector>

#include "uret/corpus.hpp"

namespace uret {

struct SynthData {
    std::vector<Document> documents;
    std::vector<Passage> passages;
    std::vector<QueryRecord> train_queries;
    std::vector<QueryRecord> val_queries;
};

struct SynthOptions {
    std::uint64_t seed = 0;
    std::size_t pages = 400;
    std::size_t passages_per_page = 5;
    std::size_t train_per_task = 300;
    std::size_t val_per_task = 100;
};

SynthData make_synthetic(const SynthOptions& options = {});

}  // namespace uret
