#include "uret/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"
#include "uret/kernels.hpp"

namespace uret {

using json = nlohmann::ordered_json;

TrainConfig TrainConfig::profile(const std::string& name) {
    TrainConfig c;
    if (name == "desk") {
        c.batch_size = 32;
        c.epochs = 120;
        c.lr = 1e-2;
        c.dropout = 0.1;
        c.eval_interval = 0;
    } else if (name == "paper") {
        c.batch_size = 128;
        c.epochs = 80;
        c.lr = 2e-5;
        c.dropout = 0.1;
        c.eval_interval = 500;
    } else {
        throw std::runtime_error("unknown profile: " + name);
    }
    return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j = json::parse(f);
    static const std::set<std::string> known = {
        "datasets",      "batch_size", "epochs", "lr",      "warmup_steps",
        "dropout",       "eval_interval", "seed", "variant", "few_shot_size"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw std::runtime_error("config: unknown key: " + key);

    TrainConfig c;
    if (j.contains("datasets")) {
        for (const auto& d : j["datasets"]) {
            std::string id = d.at("id").get<std::string>();
            std::optional<std::size_t> cap;
            if (d.contains("cap")) {
                cap = d["cap"].get<std::size_t>();
                if (*cap == 0) throw std::runtime_error("config: cap must be positive");
            }
            c.datasets[id] = cap;
        }
    }
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (c.batch_size < 2) throw std::runtime_error("config: batch_size must be >= 2");
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("warmup_steps")) c.warmup_steps = j["warmup_steps"].get<std::size_t>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("eval_interval")) c.eval_interval = j["eval_interval"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
    if (j.contains("few_shot_size")) c.few_shot_size = j["few_shot_size"].get<std::size_t>();
    return c;
}

void TrainConfig::save_json(const std::string& path) const {
    json j;
    json ds = json::array();
    for (const auto& [id, cap] : datasets) {
        json d;
        d["id"] = id;
        if (cap) d["cap"] = *cap;
        ds.push_back(d);
    }
    j["datasets"] = ds;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["lr"] = lr;
    j["warmup_steps"] = warmup_steps;
    j["dropout"] = dropout;
    j["eval_interval"] = eval_interval;
    j["seed"] = seed;
    j["variant"] = to_string(variant);
    if (few_shot_size) j["few_shot_size"] = *few_shot_size;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

std::vector<TrainingExample> build_training_set(
    const std::vector<QueryRecord>& queries, const Bm25Index& bm25,
    const std::map<std::string, std::optional<std::size_t>>& caps, std::uint64_t seed) {
    std::set<std::string> indexed(bm25.passage_ids().begin(), bm25.passage_ids().end());

    std::map<std::string, std::vector<TrainingExample>> by_dataset;
    for (const auto& q : queries) {
        if (!caps.empty() && !caps.count(q.dataset_id)) continue;
        if (q.mapping_score && *q.mapping_score < 0.5) continue;  // noisy mapping
        if (q.gold_passages.empty()) continue;
        std::string positive;
        for (const auto& g : q.gold_passages) {  // std::set: lowest id first
            if (indexed.count(g)) {
                positive = g;
                break;
            }
        }
        if (positive.empty()) continue;
        TrainingExample ex;
        ex.query = q;
        ex.positive = positive;
        if (auto conf = bm25.mine_confounder(q, q.gold_passages))
            ex.hard_confounders.push_back(*conf);
        by_dataset[q.dataset_id].push_back(std::move(ex));
    }

    for (const auto& [id, cap] : caps) {
        auto it = by_dataset.find(id);
        if (it == by_dataset.end() || it->second.empty())
            throw std::runtime_error("training set: dataset '" + id + "' has no usable queries");
    }

    std::vector<TrainingExample> out;
    for (auto& [id, examples] : by_dataset) {
        std::optional<std::size_t> cap;
        if (auto it = caps.find(id); it != caps.end()) cap = it->second;
        if (cap && examples.size() > *cap) {
            std::vector<std::size_t> idx(examples.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::mt19937_64 rng(seed ^ std::hash<std::string>{}(id));
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(*cap);
            std::sort(idx.begin(), idx.end());
            std::vector<TrainingExample> kept;
            kept.reserve(*cap);
            for (std::size_t i : idx) kept.push_back(std::move(examples[i]));
            examples = std::move(kept);
        }
        for (auto& ex : examples) out.push_back(std::move(ex));
    }
    return out;
}

Batch assemble_batch(const std::vector<TrainingExample>& examples,
                     const std::map<std::string, const Passage*>& passages,
                     const EncoderParams& params, Dropout dropout) {
    if (examples.size() < 2)
        throw std::runtime_error("assemble_batch: need at least 2 examples");
    {
        std::set<std::string> positives;
        for (const auto& ex : examples)
            if (!positives.insert(ex.positive).second)
                throw std::runtime_error("assemble_batch: duplicate positive " + ex.positive);
    }
    auto passage_text = [&](const std::string& id) -> const std::string& {
        auto it = passages.find(id);
        if (it == passages.end())
            throw std::runtime_error("assemble_batch: unknown passage " + id);
        return it->second->text;
    };

    Batch batch;
    for (const auto& ex : examples) {
        EncodeCache cache;
        batch.queries.push_back(
            encode_query(params, ex.query.text, ex.query.task_class, &cache, dropout));
        batch.query_caches.push_back(std::move(cache));
    }
    for (std::size_t i = 0; i < examples.size(); ++i) {
        EncodeCache cache;
        batch.candidates.push_back(
            encode_passage(params, passage_text(examples[i].positive), &cache, dropout));
        batch.candidate_caches.push_back(std::move(cache));
        batch.positive_index.push_back(i);
    }
    for (const auto& ex : examples) {
        for (const auto& conf : ex.hard_confounders) {
            EncodeCache cache;
            batch.candidates.push_back(
                encode_passage(params, passage_text(conf), &cache, dropout));
            batch.candidate_caches.push_back(std::move(cache));
        }
    }
    return batch;
}

std::vector<double> nll_score_gradient(const std::vector<double>& scores,
                                       std::size_t positive, std::size_t batch_size) {
    double max_score = *std::max_element(scores.begin(), scores.end());
    std::vector<double> grad(scores.size());
    double denom = 0.0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
        grad[j] = std::exp(scores[j] - max_score);
        denom += grad[j];
    }
    double inv_batch = 1.0 / static_cast<double>(batch_size);
    for (std::size_t j = 0; j < scores.size(); ++j) grad[j] = grad[j] / denom * inv_batch;
    grad[positive] -= inv_batch;
    return grad;
}

double contrastive_loss_and_grads(const Batch& batch, const EncoderParams& params,
                                  EncoderParams& grads) {
    std::size_t b = batch.queries.size();
    std::size_t m = batch.candidates.size();
    std::size_t dim = params.dim;

    double loss = 0.0;
    std::vector<std::vector<double>> dscores(b);
    for (std::size_t i = 0; i < b; ++i) {
        std::vector<double> scores(m);
        for (std::size_t j = 0; j < m; ++j)
            scores[j] = similarity(batch.queries[i], batch.candidates[j]);
        for (double s : scores)
            if (!std::isfinite(s))
                throw std::runtime_error("contrastive loss: non-finite similarity score");
        double max_score = *std::max_element(scores.begin(), scores.end());
        double denom = 0.0;
        for (double s : scores) denom += std::exp(s - max_score);
        std::size_t pos = batch.positive_index[i];
        loss += -(scores[pos] - max_score - std::log(denom));
        dscores[i] = nll_score_gradient(scores, pos, b);
    }
    loss /= static_cast<double>(b);

    std::vector<double> dvec(dim);
    for (std::size_t i = 0; i < b; ++i) {
        std::fill(dvec.begin(), dvec.end(), 0.0);
        for (std::size_t j = 0; j < m; ++j)
            kernels::axpy_f64(dscores[i][j], batch.candidates[j].data(), dvec.data(), dim);
        encode_backward(params, batch.query_caches[i], dvec, grads);
    }
    for (std::size_t j = 0; j < m; ++j) {
        std::fill(dvec.begin(), dvec.end(), 0.0);
        for (std::size_t i = 0; i < b; ++i)
            kernels::axpy_f64(dscores[i][j], batch.queries[i].data(), dvec.data(), dim);
        encode_backward(params, batch.candidate_caches[j], dvec, grads);
    }
    return loss;
}

AdamState AdamState::for_params(const EncoderParams& p) {
    AdamState s;
    s.m.assign(p.param_count(), 0.0);
    s.v.assign(p.param_count(), 0.0);
    return s;
}

double lr_at(std::size_t step, const AdamConfig& cfg) {
    double t = static_cast<double>(step);
    double w = static_cast<double>(std::max<std::size_t>(1, cfg.warmup));
    double total = static_cast<double>(cfg.total_steps);
    double factor;
    if (total <= w) {
        factor = std::min(1.0, t / w);
    } else {
        factor = std::min(t / w, (total - t) / (total - w));
    }
    factor = std::clamp(factor, 0.0, 1.0);
    return cfg.lr * factor;
}

void optimizer_step(EncoderParams& params, const EncoderParams& grads, AdamState& state,
                    std::size_t step, const AdamConfig& cfg) {
    double lr = lr_at(step, cfg);
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));

    auto ptensors = params.tensors();
    auto gtensors = grads.tensors();
    std::size_t offset = 0;
    for (std::size_t t = 0; t < ptensors.size(); ++t) {
        Tensor& p = *ptensors[t];
        const Tensor& g = *gtensors[t];
        if (p.size() != g.size())
            throw std::runtime_error("optimizer: gradient shape mismatch for " + p.name);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double& m = state.m[offset + i];
            double& v = state.v[offset + i];
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g.v[i];
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
            double mhat = m / bc1;
            double vhat = v / bc2;
            p.v[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        offset += p.size();
    }
}

namespace {

std::vector<QueryRecord> filter_datasets(
    const std::vector<QueryRecord>& queries,
    const std::map<std::string, std::optional<std::size_t>>& datasets) {
    if (datasets.empty()) return queries;
    std::vector<QueryRecord> out;
    for (const auto& q : queries)
        if (datasets.count(q.dataset_id)) out.push_back(q);
    return out;
}

// Greedy batching over a shuffled epoch: an example whose positive collides
// with one already in the current batch is deferred to a later batch.
std::vector<std::vector<std::size_t>> plan_batches(std::size_t n, std::size_t batch_size,
                                                   const std::vector<TrainingExample>& examples,
                                                   std::mt19937_64& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<std::vector<std::size_t>> batches;
    std::vector<std::size_t> pending(order.begin(), order.end());
    while (!pending.empty()) {
        std::vector<std::size_t> batch;
        std::set<std::string> positives;
        std::vector<std::size_t> deferred;
        for (std::size_t idx : pending) {
            if (batch.size() < batch_size && positives.insert(examples[idx].positive).second) {
                batch.push_back(idx);
            } else {
                deferred.push_back(idx);
            }
        }
        if (batch.size() < 2) break;  // leftovers cannot form a valid batch
        batches.push_back(std::move(batch));
        pending = std::move(deferred);
    }
    return batches;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<Passage>& corpus,
                  const std::vector<QueryRecord>& train_queries,
                  const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25,
                  std::size_t dim, std::size_t vocab, const EncoderParams* init_from,
                  const std::vector<TrainingExample>* examples_override) {
    std::vector<TrainingExample> examples =
        examples_override
            ? *examples_override
            : build_training_set(filter_datasets(train_queries, config.datasets), bm25,
                                 config.datasets, config.seed);
    if (examples.size() < 2)
        throw std::runtime_error("train: need at least 2 training examples, have " +
                                 std::to_string(examples.size()));
    std::vector<QueryRecord> val = filter_datasets(val_queries, config.datasets);

    std::map<std::string, const Passage*> lookup;
    for (const auto& p : corpus) lookup[p.passage_id] = &p;
    auto passage_to_page = build_passage_to_page(corpus);

    EncoderParams params = init_from
                               ? *init_from
                               : EncoderParams::init(config.variant, dim, vocab, config.seed);
    EncoderParams grads = params.zeros_like();
    AdamState adam_state = AdamState::for_params(params);

    std::size_t nominal_batches =
        examples.size() / config.batch_size +
        (examples.size() % config.batch_size >= 2 ? 1 : 0);
    AdamConfig adam;
    adam.lr = config.lr;
    adam.total_steps = std::max<std::size_t>(1, config.epochs * nominal_batches);
    adam.warmup = config.warmup_steps ? config.warmup_steps
                                      : std::max<std::size_t>(1, adam.total_steps / 10);

    std::size_t eval_k = 10;
    for (const auto& q : val)
        eval_k = std::max({eval_k, q.gold_pages.size(), q.gold_passages.size()});

    TrainResult result{params, -1.0, {}};
    std::mt19937_64 shuffle_rng(config.seed * 0x9e3779b97f4a7c15ull + 1);
    std::mt19937_64 dropout_rng(config.seed * 0x9e3779b97f4a7c15ull + 2);

    auto run_eval = [&](std::size_t step, double loss) {
        FlatIndex index = embed_corpus(params, corpus);
        MetricReport report = evaluate_dense(params, index, val, passage_to_page, eval_k);
        TrainLogEntry entry;
        entry.step = step;
        entry.loss = loss;
        for (const auto& [ds, m] : report.per_dataset)
            entry.per_dataset_page_rprec[ds] = m.page_rprec;
        if (report.macro_page_rprec > result.best_metric) {
            result.best_metric = report.macro_page_rprec;
            result.best = params;
            entry.selected = true;
        }
        result.log.push_back(std::move(entry));
    };

    std::size_t step = 0;
    double last_loss = 0.0;
    bool evaluated_at_step = false;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto batches = plan_batches(examples.size(), config.batch_size, examples, shuffle_rng);
        for (const auto& batch_indices : batches) {
            std::vector<TrainingExample> batch_examples;
            batch_examples.reserve(batch_indices.size());
            for (std::size_t i : batch_indices) batch_examples.push_back(examples[i]);

            Dropout dropout{config.dropout, config.dropout > 0.0 ? &dropout_rng : nullptr};
            Batch batch = assemble_batch(batch_examples, lookup, params, dropout);
            for (Tensor* t : grads.tensors()) std::fill(t->v.begin(), t->v.end(), 0.0);
            double loss;
            try {
                loss = contrastive_loss_and_grads(batch, params, grads);
            } catch (const std::exception& e) {
                throw std::runtime_error("train: diverged at step " + std::to_string(step + 1) +
                                         ": " + e.what());
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("train: diverged at step " + std::to_string(step + 1));
            ++step;
            last_loss = loss;
            optimizer_step(params, grads, adam_state, step, adam);

            evaluated_at_step = false;
            if (config.eval_interval && step % config.eval_interval == 0) {
                run_eval(step, loss);
                evaluated_at_step = true;
            }
        }
        if (!config.eval_interval && !val.empty()) {
            run_eval(step, last_loss);
            evaluated_at_step = true;
        }
    }
    if (!evaluated_at_step) run_eval(step, last_loss);
    return result;
}

TrainConfig make_leave_one_out_plan(const TrainConfig& config,
                                    const std::vector<std::string>& datasets,
                                    const std::string& held_out) {
    if (std::find(datasets.begin(), datasets.end(), held_out) == datasets.end())
        throw std::runtime_error("leave-one-out: unknown dataset: " + held_out);
    TrainConfig plan = config;
    plan.datasets.clear();
    for (const auto& d : datasets) {
        if (d == held_out) continue;
        std::optional<std::size_t> cap;
        if (auto it = config.datasets.find(d); it != config.datasets.end()) cap = it->second;
        plan.datasets[d] = cap;
    }
    return plan;
}

std::vector<QueryRecord> sample_queries(const std::vector<QueryRecord>& queries,
                                        std::size_t n, std::uint64_t seed) {
    if (n >= queries.size()) return queries;
    std::vector<std::size_t> idx(queries.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<QueryRecord> out;
    out.reserve(n);
    for (std::size_t i : idx) out.push_back(queries[i]);
    return out;
}

TrainResult finetune(const EncoderParams& checkpoint, const TrainConfig& config,
                     const std::vector<Passage>& corpus,
                     const std::vector<QueryRecord>& few_shot_queries,
                     const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25) {
    if (few_shot_queries.empty()) throw std::runtime_error("finetune: empty few-shot set");
    if (config.few_shot_size && few_shot_queries.size() != *config.few_shot_size)
        throw std::runtime_error("finetune: expected " + std::to_string(*config.few_shot_size) +
                                 " examples, got " + std::to_string(few_shot_queries.size()));
    TrainConfig ft = config;
    ft.datasets.clear();  // the few-shot set defines its own scope
    if (ft.epochs == 0) {
        // 0-step fine-tune: checkpoint passes through unchanged
        return TrainResult{checkpoint, 0.0, {}};
    }
    return train(ft, corpus, few_shot_queries, val_queries, bm25, checkpoint.dim,
                 checkpoint.vocab, &checkpoint);
}

void save_log_jsonl(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& e : log) {
        json j;
        j["step"] = e.step;
        j["loss"] = e.loss;
        json per = json::object();
        for (const auto& [ds, v] : e.per_dataset_page_rprec) per[ds] = v;
        j["page_rprec"] = per;
        j["selected"] = e.selected;
        f << j.dump() << "\n";
    }
}

}  // namespace uret
