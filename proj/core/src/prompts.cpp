#include "matrag/prompts.hpp"

#include "matrag/text.hpp"

namespace matrag::prompts {
namespace {

constexpr std::string_view kUserModelingRole = "You are a User Modeling Agent.";
constexpr std::string_view kItemAnalysisRole = "You are an Item Analysis Agent.";
constexpr std::string_view kReasoningRole = "You are a Reasoning Agent.";
constexpr std::string_view kExplanationRole = "You are an Explanation Agent.";
constexpr std::string_view kCoherenceRole = "You are a Coherence Judge.";
constexpr std::string_view kClaimsRole = "You are a Claim Extractor.";

void block(std::string& out, std::string_view header, std::span<const std::string> lines) {
  out.append(header);
  out.append(":\n");
  if (lines.empty()) out.append("(none)\n");
  for (const auto& l : lines) {
    out.append(l);
    out.push_back('\n');
  }
  out.push_back('\n');
}

std::vector<std::string_view> lines_of(std::string_view s) {
  auto v = text::split(s, '\n');
  for (auto& l : v) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return v;
}

}  // namespace

Kind classify(std::string_view prompt) {
  if (prompt.starts_with(kUserModelingRole)) return Kind::user_modeling;
  if (prompt.starts_with(kItemAnalysisRole)) return Kind::item_rerank;
  if (prompt.starts_with(kReasoningRole)) return Kind::preference_score;
  if (prompt.starts_with(kExplanationRole)) return Kind::explanation;
  if (prompt.starts_with(kCoherenceRole)) return Kind::coherence;
  if (prompt.starts_with(kClaimsRole)) return Kind::claims;
  return Kind::unknown;
}

std::string user_modeling(std::span<const std::string> review_texts) {
  std::string out(kUserModelingRole);
  out.append(
      " Analyze the user's interaction history and extract structured preference signals.\n\n");
  std::vector<std::string> lines;
  lines.reserve(review_texts.size());
  for (const auto& t : review_texts) lines.push_back("- " + text::collapse_whitespace(t));
  block(out, "User History", lines);
  out.append(
      "Extract:\n"
      "1. Explicit preferences (stated likes/dislikes)\n"
      "2. Implicit preferences (inferred from behavior)\n"
      "3. Contextual factors (time, device, session)\n"
      "4. Preference evolution (temporal patterns)\n\n"
      "Output as structured JSON, or as one key=value line per preference.\n");
  return out;
}

std::string rerank(std::span<const std::string> profile_lines, std::string_view query,
                   std::span<const std::string> candidate_lines) {
  std::string out(kItemAnalysisRole);
  out.append(
      " Re-rank the retrieved knowledge subgraphs by how useful they are for judging this "
      "user's interest in the item.\n\n");
  block(out, "User Profile", profile_lines);
  out.append("Query: ");
  out.append(query.empty() ? "(none)" : query);
  out.append("\n\n");
  std::vector<std::string> numbered;
  numbered.reserve(candidate_lines.size());
  for (std::size_t i = 0; i < candidate_lines.size(); ++i) {
    numbered.push_back(std::to_string(i + 1) + ". " + candidate_lines[i]);
  }
  block(out, "Candidates", numbered);
  out.append("Reply with every candidate number, most useful first, comma-separated.\n");
  return out;
}

std::string preference_score(std::span<const std::string> profile_lines, std::string_view item,
                             std::span<const std::string> knowledge_lines) {
  std::string out(kReasoningRole);
  out.append(
      " Estimate how strongly the user would prefer the candidate item, using the profile "
      "and the retrieved knowledge.\n\n");
  block(out, "User Profile", profile_lines);
  out.append("Candidate Item: ");
  out.append(item);
  out.append("\n\n");
  block(out, "Retrieved Knowledge", knowledge_lines);
  out.append("Reply with \"preference: <number between 0 and 1>\".\n");
  return out;
}

std::string explanation(const ExplanationInputs& in) {
  std::string out(kExplanationRole);
  out.append(" Generate a transparent, grounded explanation for the recommendation.\n\n");
  out.append("Mode: ");
  out.append(to_string(in.mode));
  out.append("\nRecommended Item: ");
  out.append(in.item);
  out.append("\n\n");
  block(out, "User Profile", in.profile_lines);
  block(out, "Reasoning Chain", in.chain_lines);
  block(out, "Retrieved Knowledge", in.knowledge_lines);
  if (in.alternative_item) {
    out.append("Alternative Item: ");
    out.append(*in.alternative_item);
    out.append("\n\n");
    block(out, "Alternative Reasoning Chain", in.alternative_chain_lines);
  }
  out.append(
      "Generate an explanation that:\n"
      "1. Cites specific evidence from knowledge\n"
      "2. Connects to user preferences explicitly\n"
      "3. Is honest about recommendation rationale\n"
      "4. Uses natural, accessible language\n");
  switch (in.mode) {
    case ExplanationMode::concise:
      out.append("Write exactly one sentence.\n");
      break;
    case ExplanationMode::detailed:
      out.append("Write one sentence per reasoning step.\n");
      break;
    case ExplanationMode::comparative:
      out.append("Contrast the recommended item with the alternative.\n");
      break;
  }
  out.append("Cite each piece of evidence with its [E:<id>] tag.\n");
  return out;
}

std::string coherence(std::string_view explanation, ExplanationMode mode) {
  std::string out(kCoherenceRole);
  out.append(
      " Rate from 1 to 5 whether the explanation keeps consistent logic, avoids "
      "contradictions and presents information in a comprehensible sequence.\n\n");
  out.append("Mode: ");
  out.append(to_string(mode));
  out.append("\nReply with \"score: <integer>\".\n\nExplanation:\n");
  out.append(explanation);
  out.push_back('\n');
  return out;
}

std::string claims(std::string_view explanation) {
  std::string out(kClaimsRole);
  out.append(
      " List every factual claim made by the explanation, one per line, copied verbatim.\n\n"
      "Explanation:\n");
  out.append(explanation);
  out.push_back('\n');
  return out;
}

std::vector<std::string> section_lines(std::string_view prompt, std::string_view header) {
  std::vector<std::string> out;
  bool inside = false;
  for (auto line : lines_of(prompt)) {
    if (!inside) {
      inside = line.size() == header.size() + 1 && line.starts_with(header) && line.back() == ':';
      continue;
    }
    if (text::trim(line).empty()) break;
    if (line == "(none)") continue;
    out.emplace_back(line);
  }
  return out;
}

std::string section_tail(std::string_view prompt, std::string_view header) {
  std::size_t offset = 0;
  for (auto line : lines_of(prompt)) {
    offset += line.size() + 1;
    if (line.size() == header.size() + 1 && line.starts_with(header) && line.back() == ':') {
      if (offset > prompt.size()) return {};
      return std::string(text::trim(prompt.substr(offset)));
    }
  }
  return {};
}

std::optional<std::string> field(std::string_view prompt, std::string_view label) {
  for (auto line : lines_of(prompt)) {
    if (line.size() > label.size() + 1 && line.starts_with(label) && line[label.size()] == ':') {
      return std::string(text::trim(line.substr(label.size() + 1)));
    }
  }
  return std::nullopt;
}

}  // namespace matrag::prompts
