#pragma once
// Page- and passage-level R-precision and cross-run comparison tables.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "uret/bm25.hpp"
#include "uret/corpus.hpp"
#include "uret/dense.hpp"
#include "uret/encoder.hpp"

namespace uret {

struct QueryRanking {
    std::string query_id;
    std::vector<ScoredPassage> ranked;
};

struct RetrievalRun {
    std::string model_id;
    std::string corpus_id;
    std::vector<QueryRanking> rankings;
};

struct DatasetMetrics {
    double page_rprec = 0.0;
    double passage_rprec = 0.0;
    std::size_t query_count = 0;
};

struct MetricReport {
    std::string model_id;
    std::map<std::string, DatasetMetrics> per_dataset;
    double macro_page_rprec = 0.0;
    double macro_passage_rprec = 0.0;

    void save_json(const std::string& path) const;
    static MetricReport load_json(const std::string& path);
};

// Passage ranking -> page ranking: first occurrence kept, order preserved.
std::vector<std::string> rank_to_pages(const std::vector<ScoredPassage>& ranked,
                                       const std::map<std::string, std::string>& passage_to_page);

// r/R with R = |gold|; rankings shorter than R treat missing slots as misses.
double r_precision(const std::vector<std::string>& ranked_ids,
                   const std::set<std::string>& gold);

// Scores one run against gold provenance. Queries whose gold is empty at a
// level count as misses at that level.
MetricReport score_run(const RetrievalRun& run, const std::vector<QueryRecord>& queries,
                       const std::map<std::string, std::string>& passage_to_page);

// Dense-model evaluation: retrieve top-k per query from the flat index.
MetricReport evaluate_dense(const EncoderParams& params, const FlatIndex& index,
                            const std::vector<QueryRecord>& queries,
                            const std::map<std::string, std::string>& passage_to_page,
                            std::size_t k, const std::string& model_id = "dense");

// BM25 baseline evaluation over the same queries.
MetricReport evaluate_bm25(const Bm25Index& index, const std::vector<QueryRecord>& queries,
                           const std::map<std::string, std::string>& passage_to_page,
                           std::size_t k, const std::string& model_id = "bm25");

// Plain-text table; per dataset+level column the best value is wrapped in
// *stars* and the second best in _underscores_.
std::string compare_runs(const std::vector<MetricReport>& reports);
std::string compare_runs_csv(const std::vector<MetricReport>& reports);

std::map<std::string, std::string> build_passage_to_page(const std::vector<Passage>& passages);

}  // namespace uret
