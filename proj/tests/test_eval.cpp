#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "uret/eval.hpp"

using namespace uret;

namespace {

ScoredPassage sp(const std::string& id, double score) { return {id, score}; }

// Independent per-query R-precision: count gold ids among the first R ranked
// ids, divided by R.
double naive_rprec(const std::vector<std::string>& ranked, const std::set<std::string>& gold) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size() && i < gold.size(); ++i)
        if (gold.count(ranked[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(gold.size());
}

std::map<std::string, std::string> grid_pages(int pages, int per_page) {
    std::map<std::string, std::string> out;
    for (int p = 0; p < pages; ++p)
        for (int i = 0; i < per_page; ++i)
            out["pg" + std::to_string(p) + "::" + std::to_string(i)] = "pg" + std::to_string(p);
    return out;
}

}  // namespace

TEST_CASE("rank_to_pages deduplicates pages preserving first-hit order") {
    auto p2p = grid_pages(3, 3);
    std::vector<ScoredPassage> ranked = {sp("pg1::2", 9), sp("pg0::0", 8), sp("pg1::0", 7),
                                         sp("pg2::1", 6), sp("pg0::2", 5)};
    auto pages = rank_to_pages(ranked, p2p);
    CHECK(pages == std::vector<std::string>{"pg1", "pg0", "pg2"});
    CHECK(rank_to_pages({}, p2p).empty());
    CHECK_THROWS(rank_to_pages({sp("missing::0", 1)}, p2p));
}

TEST_CASE("r_precision basics") {
    // |gold| = 1: equals precision at 1.
    CHECK(r_precision({"a", "b"}, {"a"}) == 1.0);
    CHECK(r_precision({"b", "a"}, {"a"}) == 0.0);
    // |gold| = 2, one hit in the top 2: 0.5.
    CHECK(r_precision({"a", "x", "b"}, {"a", "b"}) == 0.5);
    CHECK(r_precision({"a", "b", "x"}, {"a", "b"}) == 1.0);
    // Ranking shorter than R: missing slots are misses.
    CHECK(r_precision({"a"}, {"a", "b", "c"}) == doctest::Approx(1.0 / 3.0));
    CHECK(r_precision({}, {"a"}) == 0.0);
    CHECK_THROWS(r_precision({"a"}, {}));
}

TEST_CASE("score_run matches a brute-force scorer on random runs") {
    std::mt19937_64 rng(17);
    auto p2p = grid_pages(12, 4);
    std::vector<std::string> all_passages;
    for (const auto& [id, _] : p2p) all_passages.push_back(id);

    for (int trial = 0; trial < 50; ++trial) {
        std::vector<QueryRecord> queries;
        RetrievalRun run;
        run.model_id = "m";
        int nq = 2 + static_cast<int>(rng() % 12);
        for (int i = 0; i < nq; ++i) {
            QueryRecord q;
            q.query_id = "q" + std::to_string(i);
            q.dataset_id = "ds" + std::to_string(rng() % 3);
            std::size_t ngold = rng() % 4;  // possibly empty
            while (q.gold_passages.size() < ngold) {
                const std::string& pid = all_passages[rng() % all_passages.size()];
                q.gold_passages.insert(pid);
                q.gold_pages.insert(p2p.at(pid));
            }
            queries.push_back(q);

            QueryRanking ranking;
            ranking.query_id = q.query_id;
            std::size_t depth = rng() % 15;
            std::set<std::string> used;
            while (ranking.ranked.size() < depth) {
                const std::string& pid = all_passages[rng() % all_passages.size()];
                if (used.insert(pid).second)
                    ranking.ranked.push_back(sp(pid, 100.0 - ranking.ranked.size()));
            }
            run.rankings.push_back(ranking);
        }

        auto report = score_run(run, queries, p2p);

        // Brute force: per-dataset means, then unweighted macro average.
        std::map<std::string, std::vector<std::pair<double, double>>> want;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const auto& q = queries[i];
            std::vector<std::string> pids;
            for (const auto& s : run.rankings[i].ranked) pids.push_back(s.passage_id);
            double ps = q.gold_passages.empty() ? 0.0 : naive_rprec(pids, q.gold_passages);
            std::vector<std::string> pages, seen;
            for (const auto& pid : pids) {
                const auto& page = p2p.at(pid);
                if (std::find(seen.begin(), seen.end(), page) == seen.end()) {
                    seen.push_back(page);
                    pages.push_back(page);
                }
            }
            double pg = q.gold_pages.empty() ? 0.0 : naive_rprec(pages, q.gold_pages);
            want[q.dataset_id].push_back({pg, ps});
        }
        double macro_pg = 0.0, macro_ps = 0.0;
        for (const auto& [ds, values] : want) {
            double spg = 0.0, sps = 0.0;
            for (auto [a, b] : values) {
                spg += a;
                sps += b;
            }
            spg /= values.size();
            sps /= values.size();
            REQUIRE(report.per_dataset.count(ds) == 1);
            CHECK(report.per_dataset.at(ds).page_rprec == doctest::Approx(spg).epsilon(1e-12));
            CHECK(report.per_dataset.at(ds).passage_rprec ==
                  doctest::Approx(sps).epsilon(1e-12));
            CHECK(report.per_dataset.at(ds).query_count == values.size());
            macro_pg += spg;
            macro_ps += sps;
        }
        CHECK(report.macro_page_rprec ==
              doctest::Approx(macro_pg / want.size()).epsilon(1e-12));
        CHECK(report.macro_passage_rprec ==
              doctest::Approx(macro_ps / want.size()).epsilon(1e-12));
    }
}

TEST_CASE("score_run rejects rankings for unknown queries") {
    RetrievalRun run;
    run.model_id = "m";
    run.rankings.push_back({"ghost", {}});
    CHECK_THROWS(score_run(run, {}, {}));
}

TEST_CASE("evaluate_bm25 finds exact lexical matches") {
    std::vector<Passage> corpus;
    for (int i = 0; i < 6; ++i) {
        Passage p;
        p.page_id = "pg" + std::to_string(i);
        p.index_in_page = 0;
        p.passage_id = p.page_id + "::0";
        p.text = "unique" + std::to_string(i) + " shared filler text";
        p.tokens = tokenize(p.text);
        corpus.push_back(p);
    }
    auto idx = Bm25Index::build(corpus);
    auto p2p = build_passage_to_page(corpus);
    std::vector<QueryRecord> queries;
    for (int i = 0; i < 6; ++i) {
        QueryRecord q;
        q.query_id = "q" + std::to_string(i);
        q.dataset_id = "lex";
        q.text = "unique" + std::to_string(i);
        q.gold_pages = {"pg" + std::to_string(i)};
        q.gold_passages = {"pg" + std::to_string(i) + "::0"};
        queries.push_back(q);
    }
    auto report = evaluate_bm25(idx, queries, p2p, 5);
    CHECK(report.macro_page_rprec == doctest::Approx(1.0));
    CHECK(report.macro_passage_rprec == doctest::Approx(1.0));
    CHECK(report.per_dataset.at("lex").query_count == 6);
}

TEST_CASE("metric report json round trip") {
    MetricReport r;
    r.model_id = "model-x";
    r.per_dataset["alpha"] = {0.25, 0.125, 8};
    r.per_dataset["beta"] = {0.75, 0.5, 4};
    r.macro_page_rprec = 0.5;
    r.macro_passage_rprec = 0.3125;
    std::string path =
        (std::filesystem::temp_directory_path() / "uret_report_roundtrip.json").string();
    r.save_json(path);
    auto loaded = MetricReport::load_json(path);
    CHECK(loaded.model_id == "model-x");
    CHECK(loaded.per_dataset.size() == 2);
    CHECK(loaded.per_dataset.at("alpha").page_rprec == doctest::Approx(0.25));
    CHECK(loaded.per_dataset.at("alpha").query_count == 8);
    CHECK(loaded.per_dataset.at("beta").passage_rprec == doctest::Approx(0.5));
    CHECK(loaded.macro_page_rprec == doctest::Approx(0.5));
    CHECK(loaded.macro_passage_rprec == doctest::Approx(0.3125));
    std::remove(path.c_str());
}

TEST_CASE("compare_runs stars the best and underscores the second best") {
    MetricReport a, b, c;
    a.model_id = "alpha";
    b.model_id = "beta";
    c.model_id = "gamma";
    a.per_dataset["ds"] = {0.9, 0.8, 10};
    b.per_dataset["ds"] = {0.7, 0.85, 10};
    c.per_dataset["ds"] = {0.5, 0.85, 10};
    std::string table = compare_runs({a, b, c});
    CHECK(table.find("*0.9000*") != std::string::npos);  // best page column
    CHECK(table.find("_0.7000_") != std::string::npos);  // second page column
    CHECK(table.find(" 0.5000") != std::string::npos);   // unmarked
    CHECK(table.find("*0.8500*") != std::string::npos);  // tied best passage value
    CHECK(table.find("_0.8000_") != std::string::npos);  // next distinct value
    CHECK(table.find("alpha") != std::string::npos);
    CHECK(table.find("ds/pg") != std::string::npos);

    std::string csv = compare_runs_csv({a, b, c});
    CHECK(csv.find("model,ds_page,ds_passage") == 0);
    CHECK(csv.find("alpha,0.900000,0.800000") != std::string::npos);

    MetricReport mismatched;
    mismatched.model_id = "other";
    mismatched.per_dataset["different"] = {0.1, 0.1, 1};
    CHECK_THROWS(compare_runs({a, mismatched}));
    CHECK_THROWS(compare_runs({}));
}
