#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "uret/text.hpp"

using namespace uret;

TEST_CASE("tokenize lowercases and splits punctuation") {
    CHECK(tokenize("The Bermuda Triangle.") ==
          Tokens{"the", "bermuda", "triangle", "."});
    CHECK(tokenize("a,b") == Tokens{"a", ",", "b"});
    CHECK(tokenize("  spaced   out  ") == Tokens{"spaced", "out"});
    CHECK(tokenize("") == Tokens{});
    CHECK(tokenize("   \t\n ") == Tokens{});
    CHECK(tokenize("X2 mk-III") == Tokens{"x2", "mk", "-", "iii"});
    CHECK(tokenize("(1984)") == Tokens{"(", "1984", ")"});
    CHECK(tokenize("don't") == Tokens{"don", "'", "t"});
}

TEST_CASE("tokenize keeps multi-byte sequences whole") {
    CHECK(tokenize("caf\xc3\xa9 bar") == Tokens{"caf\xc3\xa9", "bar"});
    CHECK(tokenize("\xe6\x97\xa5\xe6\x9c\xac") == Tokens{"\xe6\x97\xa5\xe6\x9c\xac"});
}

TEST_CASE("tokenize never emits empty tokens and is idempotent under join") {
    std::mt19937_64 rng(42);
    const std::string alphabet = "abcXYZ019 .,!?-'()\t\n\xc3\xa9";
    for (int trial = 0; trial < 200; ++trial) {
        std::string s;
        std::size_t len = rng() % 60;
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        Tokens once = tokenize(s);
        for (const auto& t : once) CHECK(!t.empty());
        CHECK(tokenize(join_tokens(once)) == once);
    }
}

TEST_CASE("join_tokens single-space joins") {
    CHECK(join_tokens({}) == "");
    CHECK(join_tokens({"one"}) == "one");
    CHECK(join_tokens({"a", "b", "c"}) == "a b c");
}

TEST_CASE("bleu identity and disjoint cases") {
    Tokens a = tokenize("the cat sat on the mat");
    CHECK(bleu(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu(tokenize("x y"), tokenize("a b")) == 0.0);
    CHECK(bleu({}, a) == 0.0);
    CHECK(bleu(a, {}) == 0.0);
}

TEST_CASE("bleu matches frozen hand-computed values") {
    Tokens cand = tokenize("the cat sat on the mat");
    Tokens ref = tokenize("the cat is on the mat");
    CHECK(bleu(cand, ref) == doctest::Approx(0.48549177170732344).epsilon(1e-12));

    // Short candidate: all smoothed precisions are 1, only the brevity
    // penalty exp(1 - 6/2) remains.
    CHECK(bleu(tokenize("the cat"), cand) ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

    // No brevity penalty when the candidate is longer.
    Tokens longer = tokenize("the cat sat on the mat quietly today");
    Tokens shorter = tokenize("the cat sat on the mat");
    double got = bleu(longer, shorter);
    // p1=6/8, p2=(5+1)/(7+1), p3=(4+1)/(6+1), p4=(3+1)/(5+1).
    double want = std::exp((std::log(6.0 / 8.0) + std::log(6.0 / 8.0) +
                            std::log(5.0 / 7.0) + std::log(4.0 / 6.0)) /
                           4.0);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("bleu is symmetric only through its own lens on long text") {
    // A ~1000-char passage with a paraphrased variant: score must be strictly
    // between 0 and 1 and higher than against unrelated text.
    std::string base;
    for (int i = 0; i < 90; ++i)
        base += "sentence " + std::to_string(i) + " about topic " +
                std::to_string(i % 7) + " ";
    REQUIRE(base.size() > 1000);
    std::string variant = base;
    variant.replace(variant.find("topic 3"), 7, "theme 3");
    Tokens b = tokenize(base), v = tokenize(variant);
    double close = bleu(v, b);
    CHECK(close > 0.5);
    CHECK(close < 1.0);
    std::string unrelated;
    for (int i = 0; i < 90; ++i) unrelated += "word" + std::to_string(1000 + i) + " ";
    CHECK(bleu(tokenize(unrelated), b) == 0.0);
    CHECK(close > bleu(tokenize("sentence 1 about"), b));
}
