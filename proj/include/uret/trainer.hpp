#pragma once
// Contrastive training: training-set construction (BLEU filter, BM25 hard
// confounders, per-dataset downsampling), batch assembly with in-batch
// negatives, NLL loss with manual gradients, Adam with warmup + linear
// decay, and checkpoint selection by validation page-level R-precision.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uret/bm25.hpp"
#include "uret/corpus.hpp"
#include "uret/encoder.hpp"
#include "uret/eval.hpp"

namespace uret {

struct TrainingExample {
    QueryRecord query;
    std::string positive;
    std::vector<std::string> hard_confounders;
};

struct TrainConfig {
    // dataset id -> optional downsampling cap; empty map = all datasets.
    std::map<std::string, std::optional<std::size_t>> datasets;
    std::size_t batch_size = 16;
    std::size_t epochs = 10;
    double lr = 1e-3;
    std::size_t warmup_steps = 0;  // 0 = 10% of total steps
    double dropout = 0.1;
    std::size_t eval_interval = 0;  // steps; 0 = once per epoch
    std::uint64_t seed = 0;
    Variant variant = Variant::shared;
    std::optional<std::size_t> few_shot_size;

    // "desk" (toy-encoder defaults) or "paper" (the published recipe).
    static TrainConfig profile(const std::string& name);
    static TrainConfig from_json_file(const std::string& path);
    void save_json(const std::string& path) const;
};

// Filters (mapping BLEU >= 0.5, positive present in the index), attaches one
// BM25 hard confounder where one exists, and downsamples capped datasets.
// Throws if a requested dataset retains zero queries.
std::vector<TrainingExample> build_training_set(
    const std::vector<QueryRecord>& queries, const Bm25Index& bm25,
    const std::map<std::string, std::optional<std::size_t>>& caps, std::uint64_t seed);

struct Batch {
    std::vector<std::vector<double>> queries;     // B x dim
    std::vector<std::vector<double>> candidates;  // (B + total confounders) x dim
    std::vector<std::size_t> positive_index;      // positive_index[i] == i
    std::vector<EncodeCache> query_caches;
    std::vector<EncodeCache> candidate_caches;
};

// Candidates = all B positives followed by every hard confounder in the
// batch. Requires B >= 2 and pairwise-distinct positives.
Batch assemble_batch(const std::vector<TrainingExample>& examples,
                     const std::map<std::string, const Passage*>& passages,
                     const EncoderParams& params, Dropout dropout = {});

// Mean over queries of -log softmax(sim(q, positive) | all candidates), with
// max-score subtraction. Accumulates parameter gradients into `grads`
// (caller zeroes). Throws on non-finite scores.
double contrastive_loss_and_grads(const Batch& batch, const EncoderParams& params,
                                  EncoderParams& grads);

// Exposed for the score-gradient identity tests: d(mean NLL)/d(scores) for
// one query's score row = (softmax(scores) - onehot(positive)) / batch_size.
std::vector<double> nll_score_gradient(const std::vector<double>& scores,
                                       std::size_t positive, std::size_t batch_size);

struct AdamState {
    std::vector<double> m, v;
    static AdamState for_params(const EncoderParams& p);
};

struct AdamConfig {
    double lr = 1e-3;
    std::size_t warmup = 1;
    std::size_t total_steps = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// base * min(t/warmup, (T-t)/(T-warmup)), clamped to [0, base]; t is 1-based.
double lr_at(std::size_t step, const AdamConfig& cfg);

void optimizer_step(EncoderParams& params, const EncoderParams& grads, AdamState& state,
                    std::size_t step, const AdamConfig& cfg);

struct TrainLogEntry {
    std::size_t step = 0;
    double loss = 0.0;
    std::map<std::string, double> per_dataset_page_rprec;
    bool selected = false;
};

struct TrainResult {
    EncoderParams best;
    double best_metric = 0.0;  // macro page-level R-precision at selection
    std::vector<TrainLogEntry> log;
};

// Deterministic in (config, data, dim, vocab). `init_from` continues from a
// checkpoint (few-shot fine-tuning, ablations); `examples_override` replaces
// build_training_set output (adversarial rounds).
TrainResult train(const TrainConfig& config, const std::vector<Passage>& corpus,
                  const std::vector<QueryRecord>& train_queries,
                  const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25,
                  std::size_t dim, std::size_t vocab,
                  const EncoderParams* init_from = nullptr,
                  const std::vector<TrainingExample>* examples_override = nullptr);

// Same hyperparameters, held-out dataset removed. Throws if unknown.
TrainConfig make_leave_one_out_plan(const TrainConfig& config,
                                    const std::vector<std::string>& datasets,
                                    const std::string& held_out);

// Seeded uniform sample without replacement, original order preserved.
std::vector<QueryRecord> sample_queries(const std::vector<QueryRecord>& queries,
                                        std::size_t n, std::uint64_t seed);

// Continues training from `checkpoint` on only the few-shot examples.
TrainResult finetune(const EncoderParams& checkpoint, const TrainConfig& config,
                     const std::vector<Passage>& corpus,
                     const std::vector<QueryRecord>& few_shot_queries,
                     const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25);

void save_log_jsonl(const std::string& path, const std::vector<TrainLogEntry>& log);

}  // namespace uret
