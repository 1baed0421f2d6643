#pragma once
// Adversarial confounder selection: a trained retriever mines its own
// high-ranking non-relevant passages as additional hard negatives, and a
// fresh model is trained on the augmented data.

#include <map>
#include <string>
#include <vector>

#include "uret/dense.hpp"
#include "uret/trainer.hpp"

namespace uret {

// True iff any answer, tokenized the same way as passages, appears as a
// contiguous token subsequence of the passage.
bool answer_present(const Passage& passage, const std::vector<std::string>& answers);

struct MinedConfounderSet {
    std::map<std::string, std::vector<std::string>> by_query;  // query_id -> passage ids
    std::string model_id;
    int round = 2;

    void save_jsonl(const std::string& path) const;
    static MinedConfounderSet load_jsonl(const std::string& path);
};

struct MiningOptions {
    std::size_t per_query = 1;       // confounders mined per query
    std::size_t search_k = 100;      // retrieval depth to filter from
    bool page_level_exclusion = true;  // also skip all passages of gold pages
};

// Top-ranked retrieved passages skipping gold passages, gold pages (when
// page_level_exclusion), and answer-bearing passages for answer-style tasks.
std::vector<std::string> mine_adversarial_confounders(
    const EncoderParams& params, const FlatIndex& index,
    const std::map<std::string, const Passage*>& passages, const QueryRecord& query,
    const MiningOptions& options = {});

MinedConfounderSet mine_for_queries(const EncoderParams& params, const FlatIndex& index,
                                    const std::vector<Passage>& corpus,
                                    const std::vector<QueryRecord>& queries,
                                    const std::vector<std::string>& target_datasets,
                                    const MiningOptions& options = {});

struct AdversarialRoundResult {
    MinedConfounderSet mined;
    TrainResult round2;
    std::vector<TrainingExample> augmented_examples;
};

// Steps: mine with the round-1 model, append mined confounders to the
// affected examples, and train a new model (from scratch unless
// from_checkpoint) on the augmented set.
AdversarialRoundResult adversarial_round(
    const TrainConfig& config, const EncoderParams& round1,
    const std::vector<Passage>& corpus, const std::vector<QueryRecord>& train_queries,
    const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25,
    const std::vector<std::string>& target_datasets, const MiningOptions& options = {},
    bool from_checkpoint = false);

}  // namespace uret
