#include "uret/synth.hpp"

#include <random>
#include <stdexcept>

namespace uret {

namespace {

constexpr std::size_t kChunkSize = 20;
constexpr std::size_t kFillerPool = 20;

std::string concept_word(std::size_t c) { return "w" + std::to_string(c); }
std::string concept_paraphrase(std::size_t c) { return "v" + std::to_string(c); }
std::string title_word(std::size_t page) { return "ttl" + std::to_string(page); }
std::string relation_word(std::size_t slot) { return "rel" + std::to_string(slot); }
std::string page_id(std::size_t page) { return "pg" + std::to_string(page); }

}  // namespace

SynthData make_synthetic(const SynthOptions& options) {
    std::size_t slots = options.pages * options.passages_per_page;
    if (options.train_per_task > slots || options.val_per_task > options.train_per_task)
        throw std::runtime_error("synth: need val_per_task <= train_per_task <= passage count");

    SynthData data;
    std::mt19937_64 rng(options.seed * 0x9e3779b97f4a7c15ull + 17);

    // Two concepts per passage slot, globally unique, so a concept pair
    // identifies exactly one passage.
    auto slot_concepts = [&](std::size_t slot) {
        return std::pair<std::size_t, std::size_t>{2 * slot, 2 * slot + 1};
    };

    for (std::size_t e = 0; e < options.pages; ++e) {
        Document doc;
        doc.page_id = page_id(e);
        doc.title = title_word(e);
        Tokens body;
        for (std::size_t j = 0; j < options.passages_per_page; ++j) {
            std::size_t slot = e * options.passages_per_page + j;
            auto [c1, c2] = slot_concepts(slot);
            Tokens chunk;
            chunk.push_back(title_word(e));
            chunk.push_back(relation_word(j));
            for (int r = 0; r < 4; ++r) chunk.push_back(concept_word(c1));
            for (int r = 0; r < 4; ++r) chunk.push_back(concept_word(c2));
            while (chunk.size() < kChunkSize)
                chunk.push_back("f" + std::to_string(rng() % kFillerPool));
            body.insert(body.end(), chunk.begin(), chunk.end());
        }
        doc.body = join_tokens(body);
        data.documents.push_back(doc);
        auto passages = chunk_document(doc, kChunkSize);
        data.passages.insert(data.passages.end(), passages.begin(), passages.end());
    }

    // Per task: a task-seeded shuffle of passage slots. The first
    // train_per_task slots get training queries; validation queries re-ask
    // the first val_per_task of those slots with a different surface
    // template (the gold association is shared, the wording is not).
    struct TaskSpec {
        const char* dataset;
        TaskClass task_class;
    };
    const TaskSpec tasks[] = {{"kwqa", TaskClass::qa},
                              {"parqa", TaskClass::qa},
                              {"slotfill", TaskClass::slot_filling}};

    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<std::size_t> order(slots);
        for (std::size_t i = 0; i < slots; ++i) order[i] = i;
        std::mt19937_64 task_rng(options.seed * 0x9e3779b97f4a7c15ull + 101 + t);
        std::shuffle(order.begin(), order.end(), task_rng);

        for (std::size_t i = 0; i < options.train_per_task + options.val_per_task; ++i) {
            bool is_val = i >= options.train_per_task;
            std::size_t slot = order[is_val ? i - options.train_per_task : i];
            std::size_t e = slot / options.passages_per_page;
            std::size_t j = slot % options.passages_per_page;
            auto [c1, c2] = slot_concepts(slot);

            QueryRecord q;
            q.dataset_id = tasks[t].dataset;
            q.task_class = tasks[t].task_class;
            q.query_id = std::string(tasks[t].dataset) + (is_val ? "-val-" : "-") +
                         std::to_string(is_val ? i - options.train_per_task : i);
            q.gold_pages = {page_id(e)};
            q.gold_passages = {page_id(e) + "::" + std::to_string(j)};
            q.mapping_score = 1.0;
            // Two templates per task. A validation query re-asks the slot of
            // the corresponding training query; retrieval over the full
            // corpus is what is being measured, not wording generalization.
            std::size_t variant = i % 2;
            if (t == 0) {
                q.text = variant ? "find the page that talks about " + concept_word(c1) +
                                       " " + concept_word(c2)
                                 : "which page mentions " + concept_word(c1) + " and " +
                                       concept_word(c2);
                q.answers = {title_word(e)};
            } else if (t == 1) {
                q.text = variant ? "entry concerning " + concept_paraphrase(c1) + " " +
                                       concept_paraphrase(c2)
                                 : "locate the article covering " + concept_paraphrase(c1) +
                                       " " + concept_paraphrase(c2);
            } else {
                q.text = variant ? title_word(e) + " " + relation_word(j) + " info"
                                 : title_word(e) + " : " + relation_word(j);
            }
            if (is_val)
                data.val_queries.push_back(std::move(q));
            else
                data.train_queries.push_back(std::move(q));
        }
    }
    return data;
}

}  // namespace uret
