#include "uret/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace uret {

using json = nlohmann::ordered_json;

std::map<std::string, std::string> build_passage_to_page(const std::vector<Passage>& passages) {
    std::map<std::string, std::string> out;
    for (const auto& p : passages) out[p.passage_id] = p.page_id;
    return out;
}

std::vector<std::string> rank_to_pages(
    const std::vector<ScoredPassage>& ranked,
    const std::map<std::string, std::string>& passage_to_page) {
    std::vector<std::string> pages;
    std::unordered_set<std::string> seen;
    for (const auto& sp : ranked) {
        auto it = passage_to_page.find(sp.passage_id);
        if (it == passage_to_page.end())
            throw std::runtime_error("rank_to_pages: unknown passage_id: " + sp.passage_id);
        if (seen.insert(it->second).second) pages.push_back(it->second);
    }
    return pages;
}

double r_precision(const std::vector<std::string>& ranked_ids,
                   const std::set<std::string>& gold) {
    if (gold.empty()) throw std::runtime_error("r_precision: empty gold set");
    std::size_t r_cap = gold.size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked_ids.size() && i < r_cap; ++i)
        if (gold.count(ranked_ids[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(r_cap);
}

namespace {

void finalize(MetricReport& report,
              std::map<std::string, std::vector<std::pair<double, double>>>& per_query) {
    double page_sum = 0.0, passage_sum = 0.0;
    std::size_t datasets = 0;
    for (auto& [dataset, values] : per_query) {
        DatasetMetrics m;
        m.query_count = values.size();
        for (const auto& [pg, ps] : values) {
            m.page_rprec += pg;
            m.passage_rprec += ps;
        }
        if (!values.empty()) {
            m.page_rprec /= static_cast<double>(values.size());
            m.passage_rprec /= static_cast<double>(values.size());
        }
        report.per_dataset[dataset] = m;
        page_sum += m.page_rprec;
        passage_sum += m.passage_rprec;
        ++datasets;
    }
    if (datasets) {
        report.macro_page_rprec = page_sum / static_cast<double>(datasets);
        report.macro_passage_rprec = passage_sum / static_cast<double>(datasets);
    }
}

}  // namespace

MetricReport score_run(const RetrievalRun& run, const std::vector<QueryRecord>& queries,
                       const std::map<std::string, std::string>& passage_to_page) {
    std::map<std::string, const QueryRecord*> by_id;
    for (const auto& q : queries) by_id[q.query_id] = &q;

    MetricReport report;
    report.model_id = run.model_id;
    std::map<std::string, std::vector<std::pair<double, double>>> per_query;
    for (const auto& ranking : run.rankings) {
        auto it = by_id.find(ranking.query_id);
        if (it == by_id.end())
            throw std::runtime_error("score_run: unknown query_id: " + ranking.query_id);
        const QueryRecord& q = *it->second;

        std::vector<std::string> passage_ids;
        passage_ids.reserve(ranking.ranked.size());
        for (const auto& sp : ranking.ranked) passage_ids.push_back(sp.passage_id);

        // Empty gold at a level means the provenance could not be mapped into
        // this corpus; scored as a miss so averages stay comparable.
        double passage_score =
            q.gold_passages.empty() ? 0.0 : r_precision(passage_ids, q.gold_passages);
        double page_score =
            q.gold_pages.empty()
                ? 0.0
                : r_precision(rank_to_pages(ranking.ranked, passage_to_page), q.gold_pages);
        per_query[q.dataset_id].emplace_back(page_score, passage_score);
    }
    finalize(report, per_query);
    return report;
}

MetricReport evaluate_dense(const EncoderParams& params, const FlatIndex& index,
                            const std::vector<QueryRecord>& queries,
                            const std::map<std::string, std::string>& passage_to_page,
                            std::size_t k, const std::string& model_id) {
    RetrievalRun run;
    run.model_id = model_id;
    for (const auto& q : queries) {
        std::vector<double> qv = encode_query(params, q.text, q.task_class);
        run.rankings.push_back({q.query_id, mips_search_flat(index, qv, k)});
    }
    return score_run(run, queries, passage_to_page);
}

MetricReport evaluate_bm25(const Bm25Index& index, const std::vector<QueryRecord>& queries,
                           const std::map<std::string, std::string>& passage_to_page,
                           std::size_t k, const std::string& model_id) {
    RetrievalRun run;
    run.model_id = model_id;
    for (const auto& q : queries)
        run.rankings.push_back({q.query_id, index.search(tokenize(q.text), k)});
    return score_run(run, queries, passage_to_page);
}

void MetricReport::save_json(const std::string& path) const {
    json j;
    j["model_id"] = model_id;
    json datasets = json::object();
    for (const auto& [name, m] : per_dataset) {
        datasets[name] = {{"page_rprec", m.page_rprec},
                          {"passage_rprec", m.passage_rprec},
                          {"query_count", m.query_count}};
    }
    j["per_dataset"] = datasets;
    j["macro_page_rprec"] = macro_page_rprec;
    j["macro_passage_rprec"] = macro_passage_rprec;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << "\n";
}

MetricReport MetricReport::load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j = json::parse(f);
    MetricReport r;
    r.model_id = j.at("model_id").get<std::string>();
    for (const auto& [name, m] : j.at("per_dataset").items()) {
        DatasetMetrics dm;
        dm.page_rprec = m.at("page_rprec").get<double>();
        dm.passage_rprec = m.at("passage_rprec").get<double>();
        dm.query_count = m.at("query_count").get<std::size_t>();
        r.per_dataset[name] = dm;
    }
    r.macro_page_rprec = j.at("macro_page_rprec").get<double>();
    r.macro_passage_rprec = j.at("macro_passage_rprec").get<double>();
    return r;
}

namespace {

std::vector<std::string> common_datasets(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw std::runtime_error("compare_runs: no reports");
    std::vector<std::string> datasets;
    for (const auto& [name, _] : reports.front().per_dataset) datasets.push_back(name);
    for (const auto& r : reports) {
        std::vector<std::string> theirs;
        for (const auto& [name, _] : r.per_dataset) theirs.push_back(name);
        if (theirs != datasets) {
            std::string msg = "compare_runs: dataset mismatch between '" +
                              reports.front().model_id + "' and '" + r.model_id + "':";
            for (const auto& d : datasets)
                if (!r.per_dataset.count(d)) msg += " -" + d;
            for (const auto& d : theirs)
                if (!reports.front().per_dataset.count(d)) msg += " +" + d;
            throw std::runtime_error(msg);
        }
    }
    return datasets;
}

// rank 0 = best, 1 = second best (strictly lower value than best)
std::string mark(double value, const std::vector<double>& column) {
    double best = *std::max_element(column.begin(), column.end());
    double second = -1.0;
    for (double v : column)
        if (v < best) second = std::max(second, v);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", value);
    if (value == best) return "*" + std::string(buf) + "*";
    if (second >= 0.0 && value == second) return "_" + std::string(buf) + "_";
    return " " + std::string(buf) + " ";
}

}  // namespace

std::string compare_runs(const std::vector<MetricReport>& reports) {
    auto datasets = common_datasets(reports);
    std::ostringstream out;
    out << std::left;
    std::size_t name_width = 8;
    for (const auto& r : reports) name_width = std::max(name_width, r.model_id.size() + 2);

    out.width(name_width);
    out << "model";
    for (const auto& d : datasets) {
        out.width(12);
        out << d + "/pg";
        out.width(12);
        out << d + "/ps";
    }
    out << "\n";

    for (const auto& r : reports) {
        out.width(name_width);
        out << r.model_id;
        for (const auto& d : datasets) {
            std::vector<double> page_col, passage_col;
            for (const auto& rr : reports) {
                page_col.push_back(rr.per_dataset.at(d).page_rprec);
                passage_col.push_back(rr.per_dataset.at(d).passage_rprec);
            }
            out.width(12);
            out << mark(r.per_dataset.at(d).page_rprec, page_col);
            out.width(12);
            out << mark(r.per_dataset.at(d).passage_rprec, passage_col);
        }
        out << "\n";
    }
    return out.str();
}

std::string compare_runs_csv(const std::vector<MetricReport>& reports) {
    auto datasets = common_datasets(reports);
    std::ostringstream out;
    out << "model";
    for (const auto& d : datasets) out << "," << d << "_page," << d << "_passage";
    out << "\n";
    for (const auto& r : reports) {
        out << r.model_id;
        for (const auto& d : datasets) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%.6f,%.6f", r.per_dataset.at(d).page_rprec,
                          r.per_dataset.at(d).passage_rprec);
            out << buf;
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace uret
