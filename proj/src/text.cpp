#include "uret/text.hpp"

#include <cctype>
#include <cmath>
#include <map>

namespace uret {

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char c : text) {
        if (c >= 0x80 || std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            if (!std::isspace(c) && c >= 0x21) out.emplace_back(1, static_cast<char>(c));
        }
    }
    flush();
    return out;
}

std::string join_tokens(const Tokens& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

namespace {

// Counts of all n-grams of a fixed order.
std::map<std::vector<std::string_view>, int> ngram_counts(const Tokens& t, int n) {
    std::map<std::vector<std::string_view>, int> counts;
    if (static_cast<int>(t.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= t.size(); ++i) {
        std::vector<std::string_view> gram(t.begin() + i, t.begin() + i + n);
        ++counts[gram];
    }
    return counts;
}

}  // namespace

double bleu(const Tokens& candidate, const Tokens& reference) {
    if (candidate.empty() || reference.empty()) return 0.0;

    double log_precision_sum = 0.0;
    for (int n = 1; n <= 4; ++n) {
        auto cand = ngram_counts(candidate, n);
        auto ref = ngram_counts(reference, n);
        long total = 0, matched = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        double p;
        if (n == 1) {
            if (matched == 0) return 0.0;
            p = static_cast<double>(matched) / static_cast<double>(total);
        } else {
            p = static_cast<double>(matched + 1) / static_cast<double>(total + 1);
        }
        log_precision_sum += std::log(p);
    }

    double brevity = 1.0;
    if (candidate.size() < reference.size()) {
        brevity = std::exp(1.0 - static_cast<double>(reference.size()) /
                                     static_cast<double>(candidate.size()));
    }
    return brevity * std::exp(log_precision_sum / 4.0);
}

}  // namespace uret
