#include "uret/corpus.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace uret {

using json = nlohmann::ordered_json;

TaskClass task_class_from_string(const std::string& s) {
    if (s == "fact_checking") return TaskClass::fact_checking;
    if (s == "entity_linking") return TaskClass::entity_linking;
    if (s == "slot_filling") return TaskClass::slot_filling;
    if (s == "qa") return TaskClass::qa;
    if (s == "dialogue") return TaskClass::dialogue;
    throw std::runtime_error("unknown task_class: " + s);
}

std::string to_string(TaskClass c) {
    switch (c) {
        case TaskClass::fact_checking: return "fact_checking";
        case TaskClass::entity_linking: return "entity_linking";
        case TaskClass::slot_filling: return "slot_filling";
        case TaskClass::qa: return "qa";
        case TaskClass::dialogue: return "dialogue";
    }
    return "?";
}

std::vector<Passage> chunk_document(const Document& doc, std::size_t chunk_size) {
    if (chunk_size < 1) throw std::runtime_error("chunk_size must be >= 1");
    Tokens all = tokenize(doc.body);
    std::vector<Passage> out;
    for (std::size_t start = 0; start < all.size(); start += chunk_size) {
        std::size_t end = std::min(start + chunk_size, all.size());
        Passage p;
        p.page_id = doc.page_id;
        p.index_in_page = out.size();
        p.passage_id = doc.page_id + "::" + std::to_string(p.index_in_page);
        p.tokens.assign(all.begin() + start, all.begin() + end);
        p.text = join_tokens(p.tokens);
        out.push_back(std::move(p));
    }
    return out;
}

std::optional<ProvenanceMatch> map_provenance(const std::string& gold_text,
                                              const std::vector<Passage>& passages,
                                              double threshold) {
    if (passages.empty()) throw std::runtime_error("map_provenance: no passages");
    Tokens gold = tokenize(gold_text);
    const Passage* best = nullptr;
    double best_score = -1.0;
    for (const auto& p : passages) {
        double s = bleu(gold, p.tokens);
        bool better = s > best_score;
        if (!better && s == best_score && best != nullptr) {
            better = p.index_in_page < best->index_in_page ||
                     (p.index_in_page == best->index_in_page && p.page_id < best->page_id);
        }
        if (better) {
            best = &p;
            best_score = s;
        }
    }
    if (best == nullptr || best_score < threshold) return std::nullopt;
    return ProvenanceMatch{best->passage_id, best_score};
}

namespace {

// Applies fn to each parsed JSON line; rethrows with the 1-based line number.
template <typename Fn>
void for_each_jsonl(const std::string& path, Fn&& fn) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed JSON: " + e.what());
        }
        try {
            fn(j);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<Document> load_corpus_jsonl(const std::string& path) {
    std::vector<Document> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& j) {
        Document d;
        d.page_id = j.at("page_id").get<std::string>();
        d.title = j.at("title").get<std::string>();
        d.body = j.at("body").get<std::string>();
        if (!seen.insert(d.page_id).second)
            throw std::runtime_error("duplicate page_id: " + d.page_id);
        out.push_back(std::move(d));
    });
    return out;
}

std::vector<QueryRecord> load_queries_jsonl(const std::string& path) {
    std::vector<QueryRecord> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& j) {
        QueryRecord q;
        q.query_id = j.at("query_id").get<std::string>();
        q.dataset_id = j.at("dataset_id").get<std::string>();
        q.task_class = task_class_from_string(j.at("task_class").get<std::string>());
        q.text = j.at("text").get<std::string>();
        for (const auto& p : j.at("gold_pages")) q.gold_pages.insert(p.get<std::string>());
        for (const auto& p : j.at("gold_passages"))
            q.gold_passages.insert(p.get<std::string>());
        if (j.contains("answers"))
            for (const auto& a : j["answers"]) q.answers.push_back(a.get<std::string>());
        if (j.contains("mapping_score")) q.mapping_score = j["mapping_score"].get<double>();
        if (!seen.insert(q.query_id).second)
            throw std::runtime_error("duplicate query_id: " + q.query_id);
        out.push_back(std::move(q));
    });
    return out;
}

std::vector<Passage> load_passages_jsonl(const std::string& path) {
    std::vector<Passage> out;
    std::unordered_set<std::string> seen;
    for_each_jsonl(path, [&](const json& j) {
        Passage p;
        p.passage_id = j.at("passage_id").get<std::string>();
        p.page_id = j.at("page_id").get<std::string>();
        p.index_in_page = j.at("index_in_page").get<std::size_t>();
        p.text = j.at("text").get<std::string>();
        p.tokens = tokenize(p.text);
        if (!seen.insert(p.passage_id).second)
            throw std::runtime_error("duplicate passage_id: " + p.passage_id);
        out.push_back(std::move(p));
    });
    return out;
}

void save_passages_jsonl(const std::string& path, const std::vector<Passage>& passages) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& p : passages) {
        json j;
        j["passage_id"] = p.passage_id;
        j["page_id"] = p.page_id;
        j["index_in_page"] = p.index_in_page;
        j["text"] = p.text;
        f << j.dump() << "\n";
    }
}

void save_queries_jsonl(const std::string& path, const std::vector<QueryRecord>& queries) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    for (const auto& q : queries) {
        json j;
        j["query_id"] = q.query_id;
        j["dataset_id"] = q.dataset_id;
        j["task_class"] = to_string(q.task_class);
        j["text"] = q.text;
        j["gold_pages"] = q.gold_pages;
        j["gold_passages"] = q.gold_passages;
        if (!q.answers.empty()) j["answers"] = q.answers;
        if (q.mapping_score) j["mapping_score"] = *q.mapping_score;
        f << j.dump() << "\n";
    }
}

}  // namespace uret
