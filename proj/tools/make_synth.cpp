// Writes the bundled synthetic benchmark corpus and query sets as JSONL.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "uret/corpus.hpp"
#include "uret/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"synthetic benchmark generator"};
    std::string out_dir = "data/synthetic";
    std::uint64_t seed = 0;
    std::size_t pages = 400;
    std::size_t train_per_task = 300;
    std::size_t val_per_task = 100;
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--pages", pages, "number of pages");
    app.add_option("--train-per-task", train_per_task, "training queries per task");
    app.add_option("--val-per-task", val_per_task, "validation queries per task");
    CLI11_PARSE(app, argc, argv);

    uret::SynthOptions options;
    options.seed = seed;
    options.pages = pages;
    options.train_per_task = train_per_task;
    options.val_per_task = val_per_task;
    uret::SynthData data = uret::make_synthetic(options);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir + "/corpus.jsonl", std::ios::trunc);
        for (const auto& d : data.documents) {
            nlohmann::ordered_json j;
            j["page_id"] = d.page_id;
            j["title"] = d.title;
            j["body"] = d.body;
            f << j.dump() << "\n";
        }
    }
    uret::save_queries_jsonl(out_dir + "/queries_train.jsonl", data.train_queries);
    uret::save_queries_jsonl(out_dir + "/queries_val.jsonl", data.val_queries);
    std::printf("wrote %zu documents, %zu train queries, %zu val queries to %s\n",
                data.documents.size(), data.train_queries.size(), data.val_queries.size(),
                out_dir.c_str());
    return 0;
}
