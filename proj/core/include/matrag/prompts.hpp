#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrag/backend.hpp"

// Default prompt templates for each agent role, plus the section accessors the
// mock backend uses to read them back. A prompt is a role line, then blocks of
// "Header:" lines followed by one entry per line, separated by blank lines.
namespace matrag::prompts {

enum class Kind { user_modeling, item_rerank, preference_score, explanation, coherence, claims,
                  unknown };
Kind classify(std::string_view prompt);

std::string user_modeling(std::span<const std::string> review_texts);

std::string rerank(std::span<const std::string> profile_lines, std::string_view query,
                   std::span<const std::string> candidate_lines);

// Reply contract: "preference: <number in [0,1]>".
std::string preference_score(std::span<const std::string> profile_lines, std::string_view item,
                             std::span<const std::string> knowledge_lines);

struct ExplanationInputs {
  ExplanationMode mode = ExplanationMode::detailed;
  std::string item;
  std::vector<std::string> profile_lines;
  std::vector<std::string> chain_lines;      // "- <statement> [E:..]"
  std::vector<std::string> knowledge_lines;  // "[E:t3] head relation tail"
  std::optional<std::string> alternative_item;
  std::vector<std::string> alternative_chain_lines;
};
std::string explanation(const ExplanationInputs& in);

// Reply contract: "score: <integer 1-5>".
std::string coherence(std::string_view explanation, ExplanationMode mode);

// Reply contract: one claim per line.
std::string claims(std::string_view explanation);

// Entries under a block header, up to the next blank line. "(none)" markers
// are dropped.
std::vector<std::string> section_lines(std::string_view prompt, std::string_view header);
// Everything after the header line, trimmed.
std::string section_tail(std::string_view prompt, std::string_view header);
// Value of an inline "Label: value" line.
std::optional<std::string> field(std::string_view prompt, std::string_view label);

}  // namespace matrag::prompts
