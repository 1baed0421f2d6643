#pragma once
// Tokenization and sentence-level BLEU.

#include <string>
#include <string_view>
#include <vector>

namespace uret {

using Tokens = std::vector<std::string>;

// Deterministic lowercasing word/punctuation splitter. ASCII letters and
// digits (and any byte >= 0x80, so UTF-8 sequences stay whole) form words;
// every other printable character becomes its own token. Never emits empty
// tokens.
Tokens tokenize(std::string_view text);

std::string join_tokens(const Tokens& tokens);

// Sentence BLEU, n-grams up to 4, add-one smoothing on the n>=2 precisions,
// multiplicative brevity penalty. Empty candidate or reference -> 0.
double bleu(const Tokens& candidate, const Tokens& reference);

}  // namespace uret
