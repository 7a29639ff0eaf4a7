#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace matrag::text {

std::string fold_case(std::string_view s);
std::string_view trim(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Case-fold, strip ASCII punctuation, collapse whitespace, trim. Used for
// entity linking.
std::string normalize_label(std::string_view s);

// Case-fold, collapse whitespace, trim. Punctuation is kept so "sci-fi" stays
// distinct from "scifi". Used for attribute keys and values.
std::string normalize_attribute(std::string_view s);

// Maximal runs of ASCII alphanumerics (and non-ASCII bytes), case-folded.
std::vector<std::string> word_tokens(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

// Whitespace tokenization after case folding.
std::vector<std::string> whitespace_tokens(std::string_view s);

// Sentence segmentation: a sentence ends at '.', '!' or '?' that sits outside
// square brackets and is followed by whitespace or end of text. Runs of
// terminators stay together. Results are trimmed; empties are dropped. A
// trailing fragment without a terminator is returned as its own sentence.
std::vector<std::string> split_sentences(std::string_view s);

bool ends_with_terminator(std::string_view sentence);

// Evidence tags of the form [E:<id>] with id in [A-Za-z0-9_-]+.
std::string format_tag(std::string_view id);
// Unique ids in order of first appearance.
std::vector<std::string> extract_tags(std::string_view s);
// Removes every tag and collapses the whitespace left behind.
std::string strip_tags(std::string_view s);
// Removes tags whose id is not in `allowed`; returns the ids removed.
std::string keep_tags(std::string_view s, const std::vector<std::string>& allowed,
                      std::vector<std::string>* removed);

std::string format_fixed(double value, int decimals);
// Shortest representation that round-trips.
std::string format_shortest(double value);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int64(std::string_view s);
// First decimal number appearing anywhere in `s` ("preference: 0.83").
std::optional<double> find_number(std::string_view s);

std::uint64_t hash64(std::string_view s, std::uint64_t seed);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace matrag::text
