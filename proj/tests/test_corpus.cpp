#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "uret/corpus.hpp"

using namespace uret;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::trunc);
    f << content;
}

Document make_doc(const std::string& id, std::size_t tokens) {
    Document d;
    d.page_id = id;
    d.title = id;
    std::string body;
    for (std::size_t i = 0; i < tokens; ++i) body += "tok" + std::to_string(i) + " ";
    d.body = body;
    return d;
}

}  // namespace

TEST_CASE("chunk_document splits 250 tokens into 100/100/50") {
    Document d = make_doc("p1", 250);
    auto chunks = chunk_document(d, 100);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].tokens.size() == 100);
    CHECK(chunks[1].tokens.size() == 100);
    CHECK(chunks[2].tokens.size() == 50);
    CHECK(chunks[0].passage_id == "p1::0");
    CHECK(chunks[1].passage_id == "p1::1");
    CHECK(chunks[2].passage_id == "p1::2");
    CHECK(chunks[2].index_in_page == 2);
    CHECK(chunks[0].tokens[0] == "tok0");
    CHECK(chunks[1].tokens[0] == "tok100");
    CHECK(chunks[2].tokens[49] == "tok249");
}

TEST_CASE("chunk concatenation reproduces the tokenized document") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        Document d = make_doc("p", rng() % 400);
        std::size_t chunk = 1 + rng() % 120;
        auto chunks = chunk_document(d, chunk);
        Tokens all;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            CHECK(chunks[i].index_in_page == i);
            if (i + 1 < chunks.size()) CHECK(chunks[i].tokens.size() == chunk);
            all.insert(all.end(), chunks[i].tokens.begin(), chunks[i].tokens.end());
        }
        CHECK(all == tokenize(d.body));
    }
    CHECK(chunk_document(make_doc("e", 0), 10).empty());
    CHECK_THROWS(chunk_document(make_doc("e", 5), 0));
}

TEST_CASE("map_provenance picks the argmax passage and applies the threshold") {
    Document d;
    d.page_id = "pg";
    d.body =
        "alpha beta gamma delta epsilon zeta "
        "the bermuda triangle is a region of the atlantic ocean "
        "unrelated filler words occupy this final chunk entirely";
    auto passages = chunk_document(d, 6);
    REQUIRE(passages.size() == 4);

    auto m = map_provenance("the bermuda triangle is a region", passages);
    REQUIRE(m.has_value());
    CHECK(m->passage_id == "pg::1");
    CHECK(m->score > 0.5);

    // Exact match scores 1.
    auto exact = map_provenance(passages[3].text, passages);
    REQUIRE(exact.has_value());
    CHECK(exact->passage_id == "pg::3");
    CHECK(exact->score == doctest::Approx(1.0).epsilon(1e-12));

    // Nothing clears the default threshold.
    CHECK(!map_provenance("completely different wording here", passages).has_value());
    // Lower threshold admits the best weak match.
    auto weak = map_provenance("alpha beta", passages, 0.0);
    REQUIRE(weak.has_value());
    CHECK(weak->passage_id == "pg::0");

    CHECK_THROWS(map_provenance("x", {}));
}

TEST_CASE("map_provenance breaks exact ties by lowest index then page_id") {
    // Two identical passages on different pages: same BLEU, the tie must go
    // to the lexicographically smaller page at equal index.
    Passage a, b;
    a.page_id = "pgB";
    a.index_in_page = 0;
    a.passage_id = "pgB::0";
    a.tokens = tokenize("identical passage content");
    a.text = "identical passage content";
    b = a;
    b.page_id = "pgA";
    b.passage_id = "pgA::0";
    auto m = map_provenance("identical passage content", {a, b});
    REQUIRE(m.has_value());
    CHECK(m->passage_id == "pgA::0");

    // Same page, different index: lower index wins.
    Passage c = a;
    c.index_in_page = 1;
    c.passage_id = "pgB::1";
    auto m2 = map_provenance("identical passage content", {c, a});
    REQUIRE(m2.has_value());
    CHECK(m2->passage_id == "pgB::0");
}

TEST_CASE("corpus jsonl round trip and error reporting") {
    std::string path = temp_path("uret_corpus_test.jsonl");

    write_text(path,
               R"({"page_id":"p1","title":"T1","body":"hello world"})"
               "\n\n"
               R"({"page_id":"p2","title":"T2","body":"second page"})"
               "\n");
    auto docs = load_corpus_jsonl(path);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].page_id == "p1");
    CHECK(docs[1].body == "second page");

    write_text(path, "{\"page_id\":\"p1\",\"title\":\"T\",\"body\":\"x\"}\nnot json\n");
    CHECK_THROWS_WITH_AS(load_corpus_jsonl(path),
                         doctest::Contains(":2"), std::runtime_error);

    write_text(path,
               "{\"page_id\":\"dup\",\"title\":\"a\",\"body\":\"x\"}\n"
               "{\"page_id\":\"dup\",\"title\":\"b\",\"body\":\"y\"}\n");
    CHECK_THROWS_WITH_AS(load_corpus_jsonl(path),
                         doctest::Contains("duplicate page_id: dup"), std::runtime_error);

    write_text(path, "{\"title\":\"missing id\",\"body\":\"x\"}\n");
    CHECK_THROWS_AS(load_corpus_jsonl(path), std::runtime_error);
    CHECK_THROWS(load_corpus_jsonl(temp_path("uret_no_such_file.jsonl")));
    std::remove(path.c_str());
}

TEST_CASE("query jsonl round trip preserves every field") {
    std::string path = temp_path("uret_queries_test.jsonl");
    QueryRecord q1;
    q1.query_id = "q1";
    q1.dataset_id = "nq";
    q1.task_class = TaskClass::qa;
    q1.text = "who wrote it?";
    q1.gold_pages = {"pgA", "pgB"};
    q1.gold_passages = {"pgA::0"};
    q1.answers = {"Ann Author", "A. Author"};
    q1.mapping_score = 0.75;
    QueryRecord q2;
    q2.query_id = "q2";
    q2.dataset_id = "fever";
    q2.task_class = TaskClass::fact_checking;
    q2.text = "claim text";
    q2.gold_pages = {"pgC"};

    save_queries_jsonl(path, {q1, q2});
    auto loaded = load_queries_jsonl(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].query_id == "q1");
    CHECK(loaded[0].dataset_id == "nq");
    CHECK(loaded[0].task_class == TaskClass::qa);
    CHECK(loaded[0].gold_pages == q1.gold_pages);
    CHECK(loaded[0].gold_passages == q1.gold_passages);
    CHECK(loaded[0].answers == q1.answers);
    REQUIRE(loaded[0].mapping_score.has_value());
    CHECK(*loaded[0].mapping_score == doctest::Approx(0.75));
    CHECK(loaded[1].task_class == TaskClass::fact_checking);
    CHECK(!loaded[1].mapping_score.has_value());
    CHECK(loaded[1].answers.empty());

    write_text(path,
               "{\"query_id\":\"d\",\"dataset_id\":\"x\",\"task_class\":\"qa\","
               "\"text\":\"t\",\"gold_pages\":[],\"gold_passages\":[]}\n"
               "{\"query_id\":\"d\",\"dataset_id\":\"x\",\"task_class\":\"qa\","
               "\"text\":\"t\",\"gold_pages\":[],\"gold_passages\":[]}\n");
    CHECK_THROWS_WITH_AS(load_queries_jsonl(path),
                         doctest::Contains("duplicate query_id: d"), std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("passage jsonl round trip retokenizes text") {
    std::string path = temp_path("uret_passages_test.jsonl");
    Document d = make_doc("pg9", 25);
    auto passages = chunk_document(d, 10);
    save_passages_jsonl(path, passages);
    auto loaded = load_passages_jsonl(path);
    REQUIRE(loaded.size() == passages.size());
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].passage_id == passages[i].passage_id);
        CHECK(loaded[i].page_id == passages[i].page_id);
        CHECK(loaded[i].index_in_page == passages[i].index_in_page);
        CHECK(loaded[i].tokens == passages[i].tokens);
        CHECK(loaded[i].text == passages[i].text);
    }
    std::remove(path.c_str());
}

TEST_CASE("task class names round trip") {
    for (auto c : {TaskClass::fact_checking, TaskClass::entity_linking,
                   TaskClass::slot_filling, TaskClass::qa, TaskClass::dialogue})
        CHECK(task_class_from_string(to_string(c)) == c);
    CHECK_THROWS(task_class_from_string("summarization"));
}
