// Pipeline command line: ingest -> bm25-build -> train -> embed ->
// index-build -> search / mine / eval / compare. Every subcommand is
// standalone given its input files and writes a run manifest next to its
// outputs.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uret/bm25.hpp"
#include "uret/corpus.hpp"
#include "uret/dense.hpp"
#include "uret/encoder.hpp"
#include "uret/eval.hpp"
#include "uret/io.hpp"
#include "uret/mining.hpp"
#include "uret/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    std::map<std::string, std::string> inputs;   // path -> content hash
    std::map<std::string, std::string> outputs;  // path -> content hash
    std::uint64_t seed = 0;

    void add_input(const std::string& path) { inputs[path] = uret::io::hash_file(path); }
    void add_output(const std::string& path) { outputs[path] = uret::io::hash_file(path); }

    void write(const std::string& out_dir) const {
        json j;
        std::string blob = command;
        for (const auto& a : argv) blob += " " + a;
        for (const auto& [p, h] : inputs) blob += h;
        j["run_id"] = uret::io::fnv1a64_hex(
            std::vector<std::uint8_t>(blob.begin(), blob.end()));
        j["command"] = command;
        j["argv"] = argv;
        j["seed"] = seed;
        json in = json::object(), out = json::object();
        for (const auto& [p, h] : inputs) in[p] = h;
        for (const auto& [p, h] : outputs) out[p] = h;
        j["inputs"] = in;
        j["outputs"] = out;
        std::ofstream f(out_dir + "/manifest.json", std::ios::trunc);
        f << j.dump(2) << "\n";
    }
};

std::string read_magic(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    char m[4] = {0, 0, 0, 0};
    f.read(m, 4);
    return std::string(m, 4);
}

uret::TrainConfig resolve_config(const std::string& config_path, const std::string& profile,
                                 std::int64_t seed_override) {
    uret::TrainConfig config = config_path.empty() ? uret::TrainConfig::profile(profile)
                                                   : uret::TrainConfig::from_json_file(config_path);
    if (!config_path.empty() && !profile.empty()) {
        // profile supplies defaults only when no config file is given
    }
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"universal retriever pipeline"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string corpus_path, passages_path, queries_path, val_queries_path, config_path;
    std::string index_path, checkpoint_path, bm25_path, out_dir = "out", profile = "desk";
    std::string query_text, task_class_name = "qa", datasets_csv, mined_path;
    std::vector<std::string> report_paths;
    std::int64_t seed = -1;
    std::size_t threads = 1, chunk_size = 100, k = 10, dim = 128, vocab = 8192;
    std::size_t centroids = 64, nprobe = 0, per_query = 1, search_k = 100;
    std::size_t few_shot = 0;
    double bm25_k1 = 1.2, bm25_b = 0.75;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "seed (overrides config)");
        cmd->add_option("--threads", threads, "worker threads");
    };

    auto* ingest = app.add_subcommand("ingest", "chunk a corpus into passages");
    ingest->add_option("--corpus", corpus_path, "corpus JSONL")->required();
    ingest->add_option("--chunk-size", chunk_size, "tokens per passage");
    add_common(ingest);

    auto* bm25_build = app.add_subcommand("bm25-build", "build the BM25 inverted index");
    bm25_build->add_option("--passages", passages_path)->required();
    bm25_build->add_option("--k1", bm25_k1);
    bm25_build->add_option("--b", bm25_b);
    add_common(bm25_build);

    auto* train_cmd = app.add_subcommand("train", "train a bi-encoder");
    train_cmd->add_option("--config", config_path, "TrainConfig JSON");
    train_cmd->add_option("--profile", profile, "desk|paper (when no --config)");
    train_cmd->add_option("--passages", passages_path)->required();
    train_cmd->add_option("--queries", queries_path)->required();
    train_cmd->add_option("--val-queries", val_queries_path, "defaults to --queries");
    train_cmd->add_option("--dim", dim, "embedding dimension");
    train_cmd->add_option("--vocab", vocab, "hashed vocabulary size");
    train_cmd->add_option("--mined", mined_path,
                          "mined confounders JSONL, appended to BM25 confounders");
    add_common(train_cmd);

    auto* finetune_cmd = app.add_subcommand("finetune", "few-shot fine-tune a checkpoint");
    finetune_cmd->add_option("--config", config_path);
    finetune_cmd->add_option("--profile", profile);
    finetune_cmd->add_option("--checkpoint", checkpoint_path)->required();
    finetune_cmd->add_option("--passages", passages_path)->required();
    finetune_cmd->add_option("--queries", queries_path, "few-shot pool")->required();
    finetune_cmd->add_option("--val-queries", val_queries_path);
    finetune_cmd->add_option("--few-shot-size", few_shot,
                             "sample size from the pool (0 = whole pool)");
    add_common(finetune_cmd);

    auto* embed = app.add_subcommand("embed", "embed passages into a flat index");
    embed->add_option("--checkpoint", checkpoint_path)->required();
    embed->add_option("--passages", passages_path)->required();
    add_common(embed);

    auto* index_build = app.add_subcommand("index-build", "coarse-quantize a flat index");
    index_build->add_option("--index", index_path, "flat index file")->required();
    index_build->add_option("--centroids", centroids);
    index_build->add_option("--nprobe", nprobe, "default nprobe (0 = sqrt(C))");
    add_common(index_build);

    auto* search = app.add_subcommand("search", "query an index");
    search->add_option("--index", index_path, "dense or BM25 index")->required();
    search->add_option("--checkpoint", checkpoint_path, "required for dense indices");
    search->add_option("--query", query_text)->required();
    search->add_option("--task-class", task_class_name);
    search->add_option("--k", k);
    search->add_option("--nprobe", nprobe, "IVF cells to probe (0 = index default)");
    add_common(search);

    auto* mine = app.add_subcommand("mine", "mine adversarial confounders");
    mine->add_option("--checkpoint", checkpoint_path)->required();
    mine->add_option("--index", index_path, "flat dense index")->required();
    mine->add_option("--passages", passages_path)->required();
    mine->add_option("--queries", queries_path)->required();
    mine->add_option("--datasets", datasets_csv, "comma-separated dataset ids (empty = all)");
    mine->add_option("--per-query", per_query);
    mine->add_option("--search-k", search_k);
    add_common(mine);

    auto* eval_cmd = app.add_subcommand("eval", "R-precision evaluation");
    eval_cmd->add_option("--index", index_path, "dense flat or BM25 index")->required();
    eval_cmd->add_option("--checkpoint", checkpoint_path, "required for dense indices");
    eval_cmd->add_option("--passages", passages_path)->required();
    eval_cmd->add_option("--queries", queries_path)->required();
    eval_cmd->add_option("--k", k, "retrieval depth (>= max gold set size)");
    add_common(eval_cmd);

    auto* compare = app.add_subcommand("compare", "align metric reports");
    compare->add_option("--reports", report_paths, "MetricReport JSON files")
        ->required()
        ->expected(-1);
    add_common(compare);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << std::flush;
        return 2;
    }

    try {
        fs::create_directories(out_dir);
        Manifest manifest;
        for (int i = 1; i < argc; ++i) manifest.argv.push_back(argv[i]);
        manifest.seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : 0;

        if (*ingest) {
            manifest.command = "ingest";
            manifest.add_input(corpus_path);
            auto docs = uret::load_corpus_jsonl(corpus_path);
            std::vector<uret::Passage> passages;
            for (const auto& d : docs) {
                auto chunks = uret::chunk_document(d, chunk_size);
                passages.insert(passages.end(), chunks.begin(), chunks.end());
            }
            std::string out = out_dir + "/passages.jsonl";
            uret::save_passages_jsonl(out, passages);
            manifest.add_output(out);
            std::printf("ingest: %zu documents -> %zu passages\n", docs.size(),
                        passages.size());
        } else if (*bm25_build) {
            manifest.command = "bm25-build";
            manifest.add_input(passages_path);
            auto passages = uret::load_passages_jsonl(passages_path);
            auto index = uret::Bm25Index::build(passages, bm25_k1, bm25_b);
            std::string out = out_dir + "/bm25.bin";
            index.save(out);
            manifest.add_output(out);
            std::printf("bm25-build: %zu passages, avg length %.3f\n", index.size(),
                        index.avg_doc_length());
        } else if (*train_cmd) {
            manifest.command = "train";
            auto config = resolve_config(config_path, profile, seed);
            manifest.seed = config.seed;
            manifest.add_input(passages_path);
            manifest.add_input(queries_path);
            if (!config_path.empty()) manifest.add_input(config_path);
            auto passages = uret::load_passages_jsonl(passages_path);
            auto train_queries = uret::load_queries_jsonl(queries_path);
            auto val_queries = val_queries_path.empty()
                                   ? train_queries
                                   : uret::load_queries_jsonl(val_queries_path);
            if (!val_queries_path.empty()) manifest.add_input(val_queries_path);
            auto bm25 = uret::Bm25Index::build(passages);
            uret::TrainResult result;
            if (!mined_path.empty()) {
                manifest.add_input(mined_path);
                auto mined = uret::MinedConfounderSet::load_jsonl(mined_path);
                std::vector<uret::QueryRecord> scoped;
                for (const auto& q : train_queries)
                    if (config.datasets.empty() || config.datasets.count(q.dataset_id))
                        scoped.push_back(q);
                auto examples =
                    uret::build_training_set(scoped, bm25, config.datasets, config.seed);
                for (auto& ex : examples) {
                    auto it = mined.by_query.find(ex.query.query_id);
                    if (it == mined.by_query.end()) continue;
                    for (const auto& pid : it->second) ex.hard_confounders.push_back(pid);
                }
                result = uret::train(config, passages, scoped, val_queries, bm25, dim,
                                     vocab, nullptr, &examples);
            } else {
                result = uret::train(config, passages, train_queries, val_queries, bm25,
                                     dim, vocab);
            }
            std::string ckpt = out_dir + "/checkpoint.bin";
            std::string log = out_dir + "/train_log.jsonl";
            std::string cfg = out_dir + "/config_resolved.json";
            result.best.save(ckpt);
            uret::save_log_jsonl(log, result.log);
            config.save_json(cfg);
            manifest.add_output(ckpt);
            manifest.add_output(log);
            manifest.add_output(cfg);
            std::printf("train: best macro page R-precision %.4f\n", result.best_metric);
        } else if (*finetune_cmd) {
            manifest.command = "finetune";
            auto config = resolve_config(config_path, profile, seed);
            manifest.seed = config.seed;
            manifest.add_input(checkpoint_path);
            manifest.add_input(passages_path);
            manifest.add_input(queries_path);
            auto checkpoint = uret::EncoderParams::load(checkpoint_path);
            auto passages = uret::load_passages_jsonl(passages_path);
            auto pool = uret::load_queries_jsonl(queries_path);
            auto val_queries =
                val_queries_path.empty() ? pool : uret::load_queries_jsonl(val_queries_path);
            if (!val_queries_path.empty()) manifest.add_input(val_queries_path);
            auto few = few_shot ? uret::sample_queries(pool, few_shot, config.seed) : pool;
            if (few_shot) config.few_shot_size = few_shot;
            auto bm25 = uret::Bm25Index::build(passages);
            auto result = uret::finetune(checkpoint, config, passages, few, val_queries, bm25);
            std::string ckpt = out_dir + "/checkpoint.bin";
            std::string log = out_dir + "/train_log.jsonl";
            result.best.save(ckpt);
            uret::save_log_jsonl(log, result.log);
            manifest.add_output(ckpt);
            manifest.add_output(log);
            std::printf("finetune: %zu examples, best macro page R-precision %.4f\n",
                        few.size(), result.best_metric);
        } else if (*embed) {
            manifest.command = "embed";
            manifest.add_input(checkpoint_path);
            manifest.add_input(passages_path);
            auto params = uret::EncoderParams::load(checkpoint_path);
            auto passages = uret::load_passages_jsonl(passages_path);
            auto index = uret::embed_corpus(params, passages, threads);
            std::string out = out_dir + "/index.flat";
            uret::save_flat(index, out);
            manifest.add_output(out);
            std::printf("embed: %zu vectors of dim %zu\n", index.size(), index.dim);
        } else if (*index_build) {
            manifest.command = "index-build";
            manifest.add_input(index_path);
            auto loaded = uret::load_index(index_path);
            if (loaded.is_ivf) throw std::runtime_error("index-build: input is already IVF");
            std::size_t np = nprobe ? nprobe
                                    : std::max<std::size_t>(
                                          1, static_cast<std::size_t>(std::sqrt(
                                                 static_cast<double>(centroids))));
            auto ivf = uret::build_ivf(std::move(loaded.flat), centroids,
                                       seed >= 0 ? static_cast<std::uint64_t>(seed) : 0, np);
            std::string out = out_dir + "/index.ivf";
            uret::save_ivf(ivf, out);
            manifest.add_output(out);
            std::printf("index-build: C=%zu default nprobe=%zu\n", ivf.centroid_count,
                        ivf.default_nprobe);
        } else if (*search) {
            manifest.command = "search";
            manifest.add_input(index_path);
            std::vector<uret::ScoredPassage> results;
            if (read_magic(index_path) == "UBM1") {
                auto index = uret::Bm25Index::load(index_path);
                results = index.search(uret::tokenize(query_text), k);
            } else {
                if (checkpoint_path.empty())
                    throw std::runtime_error("search: dense index needs --checkpoint");
                manifest.add_input(checkpoint_path);
                auto params = uret::EncoderParams::load(checkpoint_path);
                auto qv = uret::encode_query(params, query_text,
                                             uret::task_class_from_string(task_class_name));
                auto loaded = uret::load_index(index_path);
                results = loaded.is_ivf
                              ? uret::mips_search_ivf(
                                    loaded.ivf, qv, k,
                                    nprobe ? nprobe : loaded.ivf.default_nprobe)
                              : uret::mips_search_flat(loaded.flat, qv, k);
            }
            for (std::size_t i = 0; i < results.size(); ++i)
                std::printf("%zu\t%s\t%.6f\n", i + 1, results[i].passage_id.c_str(),
                            results[i].score);
        } else if (*mine) {
            manifest.command = "mine";
            manifest.add_input(checkpoint_path);
            manifest.add_input(index_path);
            manifest.add_input(passages_path);
            manifest.add_input(queries_path);
            auto params = uret::EncoderParams::load(checkpoint_path);
            auto loaded = uret::load_index(index_path);
            if (loaded.is_ivf) throw std::runtime_error("mine: need a flat index");
            auto passages = uret::load_passages_jsonl(passages_path);
            auto queries = uret::load_queries_jsonl(queries_path);
            std::vector<std::string> datasets;
            if (!datasets_csv.empty()) {
                std::stringstream ss(datasets_csv);
                std::string item;
                while (std::getline(ss, item, ',')) datasets.push_back(item);
            }
            uret::MiningOptions options;
            options.per_query = per_query;
            options.search_k = search_k;
            auto mined = uret::mine_for_queries(params, loaded.flat, passages, queries,
                                                datasets, options);
            mined.model_id = uret::io::hash_file(checkpoint_path);
            std::string out = out_dir + "/mined.jsonl";
            mined.save_jsonl(out);
            manifest.add_output(out);
            std::printf("mine: confounders for %zu queries\n", mined.by_query.size());
        } else if (*eval_cmd) {
            manifest.command = "eval";
            manifest.add_input(index_path);
            manifest.add_input(passages_path);
            manifest.add_input(queries_path);
            auto passages = uret::load_passages_jsonl(passages_path);
            auto queries = uret::load_queries_jsonl(queries_path);
            auto passage_to_page = uret::build_passage_to_page(passages);
            uret::MetricReport report;
            if (read_magic(index_path) == "UBM1") {
                auto index = uret::Bm25Index::load(index_path);
                report = uret::evaluate_bm25(index, queries, passage_to_page, k);
            } else {
                if (checkpoint_path.empty())
                    throw std::runtime_error("eval: dense index needs --checkpoint");
                manifest.add_input(checkpoint_path);
                auto params = uret::EncoderParams::load(checkpoint_path);
                auto loaded = uret::load_index(index_path);
                if (loaded.is_ivf) throw std::runtime_error("eval: need a flat index");
                report = uret::evaluate_dense(params, loaded.flat, queries, passage_to_page, k);
            }
            std::string out = out_dir + "/report.json";
            report.save_json(out);
            manifest.add_output(out);
            std::printf("%s", uret::compare_runs({report}).c_str());
        } else if (*compare) {
            manifest.command = "compare";
            std::vector<uret::MetricReport> reports;
            for (const auto& p : report_paths) {
                manifest.add_input(p);
                reports.push_back(uret::MetricReport::load_json(p));
            }
            std::string table = uret::compare_runs(reports);
            std::string csv = uret::compare_runs_csv(reports);
            std::ofstream(out_dir + "/comparison.txt", std::ios::trunc) << table;
            std::ofstream(out_dir + "/comparison.csv", std::ios::trunc) << csv;
            manifest.add_output(out_dir + "/comparison.txt");
            manifest.add_output(out_dir + "/comparison.csv");
            std::printf("%s", table.c_str());
        }

        manifest.write(out_dir);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
