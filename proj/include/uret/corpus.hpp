#pragma once
// Document/query ingestion, chunking, and BLEU-based provenance mapping.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "uret/text.hpp"

namespace uret {

struct Document {
    std::string page_id;
    std::string title;
    std::string body;
};

struct Passage {
    std::string passage_id;  // page_id + "::" + index_in_page
    std::string page_id;
    std::size_t index_in_page = 0;
    Tokens tokens;
    std::string text;
};

enum class TaskClass { fact_checking, entity_linking, slot_filling, qa, dialogue };

TaskClass task_class_from_string(const std::string& s);
std::string to_string(TaskClass c);
inline constexpr int kTaskClassCount = 5;

struct QueryRecord {
    std::string query_id;
    std::string dataset_id;
    TaskClass task_class = TaskClass::qa;
    std::string text;
    std::set<std::string> gold_pages;
    std::set<std::string> gold_passages;
    std::vector<std::string> answers;
    std::optional<double> mapping_score;
};

// Splits a document's token stream into ordered disjoint chunks. All chunks
// have exactly chunk_size tokens except possibly the last.
std::vector<Passage> chunk_document(const Document& doc, std::size_t chunk_size = 100);

struct ProvenanceMatch {
    std::string passage_id;
    double score = 0.0;
};

// Argmax-BLEU passage for a gold span; absent below threshold. Ties broken by
// lowest index_in_page, then page_id.
std::optional<ProvenanceMatch> map_provenance(const std::string& gold_text,
                                              const std::vector<Passage>& passages,
                                              double threshold = 0.5);

// JSONL loaders; throw with the offending line number / duplicate id.
std::vector<Document> load_corpus_jsonl(const std::string& path);
std::vector<QueryRecord> load_queries_jsonl(const std::string& path);
std::vector<Passage> load_passages_jsonl(const std::string& path);
void save_passages_jsonl(const std::string& path, const std::vector<Passage>& passages);
void save_queries_jsonl(const std::string& path, const std::vector<QueryRecord>& queries);

}  // namespace uret
