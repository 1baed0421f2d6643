#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return URET_CLI_PATH; }

int run(const std::string& args, const std::string& log) {
    std::string cmd = std::string(cli_path()) + " " + args + " >" + log + " 2>&1";
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    return std::string(std::istreambuf_iterator<char>(f),
                       std::istreambuf_iterator<char>());
}

struct Workspace {
    fs::path dir;
    Workspace() {
        dir = fs::temp_directory_path() / ("uret_cli_ws_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

void write_fixture(const Workspace& ws) {
    std::ofstream corpus(ws.path("corpus.jsonl"));
    for (int i = 0; i < 6; ++i) {
        corpus << R"({"page_id":"pg)" << i << R"(","title":"T)" << i
               << R"(","body":"special)" << i << " body words number " << i << R"("})"
               << "\n";
    }
    std::ofstream queries(ws.path("queries.jsonl"));
    for (int i = 0; i < 6; ++i) {
        queries << R"({"query_id":"q)" << i << R"(","dataset_id":"ds","task_class":"qa",)"
                << R"("text":"special)" << i << R"(","gold_pages":["pg)" << i
                << R"("],"gold_passages":["pg)" << i << R"(::0"],"answers":["special)" << i
                << R"("]})" << "\n";
    }
    std::ofstream cfg(ws.path("config.json"));
    cfg << R"({"batch_size":3,"epochs":3,"lr":0.01,"dropout":0.0,"seed":7})";
}

}  // namespace

TEST_CASE("help exits zero, bad invocations exit two") {
    Workspace ws;
    std::string log = ws.path("log.txt");
    CHECK(run("--help", log) == 0);
    CHECK(slurp(log).find("ingest") != std::string::npos);
    CHECK(run("train --help", log) == 0);
    CHECK(run("no-such-command", log) == 2);
    CHECK(run("", log) == 2);  // a subcommand is required
    CHECK(run("ingest --corpus x.jsonl --no-such-flag", log) == 2);
    CHECK(slurp(log).find("--corpus") != std::string::npos);  // help text printed
    CHECK(run("ingest", log) == 2);  // missing required option
}

TEST_CASE("missing input files exit one with an error message") {
    Workspace ws;
    std::string log = ws.path("log.txt");
    CHECK(run("ingest --corpus " + ws.path("missing.jsonl") + " --out " + ws.path("out"),
              log) == 1);
    CHECK(slurp(log).find("error:") != std::string::npos);
}

TEST_CASE("full pipeline produces indexes, checkpoints, reports, manifests") {
    Workspace ws;
    write_fixture(ws);
    std::string log = ws.path("log.txt");
    std::string out = ws.path("out");

    REQUIRE(run("ingest --corpus " + ws.path("corpus.jsonl") + " --chunk-size 4 --out " + out,
                log) == 0);
    REQUIRE(fs::exists(out + "/passages.jsonl"));
    REQUIRE(fs::exists(out + "/manifest.json"));
    CHECK(slurp(out + "/manifest.json").find("\"run_id\"") != std::string::npos);

    REQUIRE(run("bm25-build --passages " + out + "/passages.jsonl --out " + out, log) == 0);
    REQUIRE(fs::exists(out + "/bm25.bin"));

    REQUIRE(run("train --config " + ws.path("config.json") + " --passages " + out +
                    "/passages.jsonl --queries " + ws.path("queries.jsonl") +
                    " --dim 8 --vocab 64 --out " + out,
                log) == 0);
    REQUIRE(fs::exists(out + "/checkpoint.bin"));
    REQUIRE(fs::exists(out + "/train_log.jsonl"));
    REQUIRE(fs::exists(out + "/config_resolved.json"));

    REQUIRE(run("embed --checkpoint " + out + "/checkpoint.bin --passages " + out +
                    "/passages.jsonl --out " + out,
                log) == 0);
    REQUIRE(fs::exists(out + "/index.flat"));

    REQUIRE(run("index-build --index " + out + "/index.flat --centroids 3 --seed 1 --out " +
                    out,
                log) == 0);
    REQUIRE(fs::exists(out + "/index.ivf"));

    CHECK(run("search --index " + out + "/bm25.bin --query special2 --k 3", log) == 0);
    CHECK(slurp(log).find("pg2::0") != std::string::npos);
    CHECK(run("search --index " + out + "/index.flat --checkpoint " + out +
                  "/checkpoint.bin --query special2 --k 3",
              log) == 0);
    CHECK(run("search --index " + out + "/index.ivf --checkpoint " + out +
                  "/checkpoint.bin --query special2 --k 3 --nprobe 2",
              log) == 0);
    // Dense search without a checkpoint is a runtime error.
    CHECK(run("search --index " + out + "/index.flat --query x", log) == 1);

    std::string eval_bm25 = ws.path("eval_bm25");
    REQUIRE(run("eval --index " + out + "/bm25.bin --passages " + out +
                    "/passages.jsonl --queries " + ws.path("queries.jsonl") + " --out " +
                    eval_bm25,
                log) == 0);
    REQUIRE(fs::exists(eval_bm25 + "/report.json"));
    // The lexical fixture is easy: BM25 should get everything right.
    CHECK(slurp(eval_bm25 + "/report.json").find("\"macro_page_rprec\": 1.0") !=
          std::string::npos);

    std::string eval_dense = ws.path("eval_dense");
    REQUIRE(run("eval --index " + out + "/index.flat --checkpoint " + out +
                    "/checkpoint.bin --passages " + out + "/passages.jsonl --queries " +
                    ws.path("queries.jsonl") + " --out " + eval_dense,
                log) == 0);
    REQUIRE(fs::exists(eval_dense + "/report.json"));

    REQUIRE(run("mine --checkpoint " + out + "/checkpoint.bin --index " + out +
                    "/index.flat --passages " + out + "/passages.jsonl --queries " +
                    ws.path("queries.jsonl") + " --per-query 2 --out " + out,
                log) == 0);
    REQUIRE(fs::exists(out + "/mined.jsonl"));

    // Round-2 training with mined confounders appended.
    std::string adv = ws.path("adv");
    REQUIRE(run("train --config " + ws.path("config.json") + " --passages " + out +
                    "/passages.jsonl --queries " + ws.path("queries.jsonl") +
                    " --dim 8 --vocab 64 --mined " + out + "/mined.jsonl --out " + adv,
                log) == 0);
    REQUIRE(fs::exists(adv + "/checkpoint.bin"));

    std::string cmp = ws.path("cmp");
    REQUIRE(run("compare --reports " + eval_bm25 + "/report.json " + eval_dense +
                    "/report.json --out " + cmp,
                log) == 0);
    CHECK(fs::exists(cmp + "/comparison.txt"));
    CHECK(fs::exists(cmp + "/comparison.csv"));
    CHECK(slurp(cmp + "/comparison.csv").find("model,ds_page,ds_passage") == 0);

    std::string ft = ws.path("ft");
    REQUIRE(run("finetune --config " + ws.path("config.json") + " --checkpoint " + out +
                    "/checkpoint.bin --passages " + out + "/passages.jsonl --queries " +
                    ws.path("queries.jsonl") + " --few-shot-size 4 --out " + ft,
                log) == 0);
    REQUIRE(fs::exists(ft + "/checkpoint.bin"));
}

TEST_CASE("repeated runs with the same seed write identical artifacts") {
    Workspace ws;
    write_fixture(ws);
    std::string log = ws.path("log.txt");
    std::string out = ws.path("out");
    REQUIRE(run("ingest --corpus " + ws.path("corpus.jsonl") + " --chunk-size 4 --out " + out,
                log) == 0);
    for (const char* rep : {"r1", "r2"}) {
        REQUIRE(run("train --config " + ws.path("config.json") + " --passages " + out +
                        "/passages.jsonl --queries " + ws.path("queries.jsonl") +
                        " --dim 8 --vocab 64 --out " + ws.path(rep),
                    log) == 0);
    }
    CHECK(slurp(ws.path("r1") + "/checkpoint.bin") == slurp(ws.path("r2") + "/checkpoint.bin"));
    CHECK(slurp(ws.path("r1") + "/train_log.jsonl") == slurp(ws.path("r2") + "/train_log.jsonl"));
}
