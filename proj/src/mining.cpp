#include "uret/mining.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace uret {

using json = nlohmann::ordered_json;

bool answer_present(const Passage& passage, const std::vector<std::string>& answers) {
    if (answers.empty()) throw std::runtime_error("answer_present: no answers given");
    for (const auto& answer : answers) {
        Tokens needle = tokenize(answer);
        if (needle.empty()) continue;
        if (needle.size() > passage.tokens.size()) continue;
        for (std::size_t i = 0; i + needle.size() <= passage.tokens.size(); ++i) {
            bool match = true;
            for (std::size_t j = 0; j < needle.size(); ++j) {
                if (passage.tokens[i + j] != needle[j]) {
                    match = false;
                    break;
                }
            }
            if (match) return true;
        }
    }
    return false;
}

std::vector<std::string> mine_adversarial_confounders(
    const EncoderParams& params, const FlatIndex& index,
    const std::map<std::string, const Passage*>& passages, const QueryRecord& query,
    const MiningOptions& options) {
    std::vector<double> qv = encode_query(params, query.text, query.task_class);
    auto ranked = mips_search_flat(index, qv, options.search_k);

    std::vector<std::string> mined;
    for (const auto& sp : ranked) {
        if (mined.size() == options.per_query) break;
        if (query.gold_passages.count(sp.passage_id)) continue;
        auto it = passages.find(sp.passage_id);
        if (it == passages.end())
            throw std::runtime_error("mining: unknown passage " + sp.passage_id);
        const Passage& p = *it->second;
        if (options.page_level_exclusion && query.gold_pages.count(p.page_id)) continue;
        if (!query.answers.empty() && answer_present(p, query.answers)) continue;
        mined.push_back(sp.passage_id);
    }
    return mined;
}

MinedConfounderSet mine_for_queries(const EncoderParams& params, const FlatIndex& index,
                                    const std::vector<Passage>& corpus,
                                    const std::vector<QueryRecord>& queries,
                                    const std::vector<std::string>& target_datasets,
                                    const MiningOptions& options) {
    std::map<std::string, const Passage*> lookup;
    for (const auto& p : corpus) lookup[p.passage_id] = &p;
    std::set<std::string> targets(target_datasets.begin(), target_datasets.end());

    MinedConfounderSet out;
    for (const auto& q : queries) {
        if (!targets.empty() && !targets.count(q.dataset_id)) continue;
        auto mined = mine_adversarial_confounders(params, index, lookup, q, options);
        if (!mined.empty()) out.by_query[q.query_id] = std::move(mined);
    }
    return out;
}

AdversarialRoundResult adversarial_round(
    const TrainConfig& config, const EncoderParams& round1,
    const std::vector<Passage>& corpus, const std::vector<QueryRecord>& train_queries,
    const std::vector<QueryRecord>& val_queries, const Bm25Index& bm25,
    const std::vector<std::string>& target_datasets, const MiningOptions& options,
    bool from_checkpoint) {
    FlatIndex index = embed_corpus(round1, corpus);
    AdversarialRoundResult result;
    result.mined = mine_for_queries(round1, index, corpus, train_queries, target_datasets,
                                    options);
    if (result.mined.by_query.empty())
        throw std::runtime_error("adversarial round: mining produced no confounders");

    // Same queries and caps as round 1; mined confounders appended, never
    // replacing the BM25 ones.
    std::vector<QueryRecord> scoped = train_queries;
    if (!config.datasets.empty()) {
        scoped.clear();
        for (const auto& q : train_queries)
            if (config.datasets.count(q.dataset_id)) scoped.push_back(q);
    }
    result.augmented_examples =
        build_training_set(scoped, bm25, config.datasets, config.seed);
    for (auto& ex : result.augmented_examples) {
        auto it = result.mined.by_query.find(ex.query.query_id);
        if (it == result.mined.by_query.end()) continue;
        for (const auto& pid : it->second) ex.hard_confounders.push_back(pid);
    }

    result.round2 = train(config, corpus, scoped, val_queries, bm25, round1.dim,
                          round1.vocab, from_checkpoint ? &round1 : nullptr,
                          &result.augmented_examples);
    return result;
}

void MinedConfounderSet::save_jsonl(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& [query_id, mined] : by_query) {
        json j;
        j["query_id"] = query_id;
        j["mined"] = mined;
        j["round"] = round;
        j["model_id"] = model_id;
        f << j.dump() << "\n";
    }
}

MinedConfounderSet MinedConfounderSet::load_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    MinedConfounderSet out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        out.by_query[j.at("query_id").get<std::string>()] =
            j.at("mined").get<std::vector<std::string>>();
        out.round = j.value("round", 2);
        out.model_id = j.value("model_id", "");
    }
    return out;
}

}  // namespace uret
