#include "matrag/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace matrag::text {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

bool is_tag_id_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_' || c == '-';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of the tag starting at s[pos] ("[E:id]"), or 0.
std::size_t tag_length_at(std::string_view s, std::size_t pos) {
  if (s.compare(pos, 3, "[E:") != 0) return 0;
  std::size_t i = pos + 3;
  while (i < s.size() && is_tag_id_char(s[i])) ++i;
  if (i == pos + 3 || i >= s.size() || s[i] != ']') return 0;
  return i + 1 - pos;
}

}  // namespace

std::string fold_case(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending = true;
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::string normalize_label(std::string_view s) {
  std::string stripped;
  stripped.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u) != 0) continue;
    stripped.push_back(static_cast<char>(std::tolower(u)));
  }
  return collapse_whitespace(stripped);
}

std::string normalize_attribute(std::string_view s) {
  return collapse_whitespace(fold_case(s));
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_space(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  auto flush = [&](std::size_t b, std::size_t e) {
    auto piece = trim(s.substr(b, e - b));
    if (!piece.empty()) out.emplace_back(piece);
  };
  std::size_t start = 0;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '[') {
      ++depth;
    } else if (c == ']') {
      if (depth > 0) --depth;
    } else if (depth == 0 && is_terminator(c)) {
      std::size_t j = i;
      while (j + 1 < s.size() && is_terminator(s[j + 1])) ++j;
      if (j + 1 == s.size() || is_space(s[j + 1])) {
        flush(start, j + 1);
        start = j + 1;
      }
      i = j;
    }
  }
  if (start < s.size()) flush(start, s.size());
  return out;
}

bool ends_with_terminator(std::string_view sentence) {
  const auto t = trim(sentence);
  return !t.empty() && is_terminator(t.back());
}

std::string format_tag(std::string_view id) {
  std::string out = "[E:";
  out.append(id);
  out.push_back(']');
  return out;
}

std::vector<std::string> extract_tags(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '[') continue;
    const auto len = tag_length_at(s, i);
    if (len == 0) continue;
    std::string id(s.substr(i + 3, len - 4));
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
    i += len - 1;
  }
  return out;
}

std::string keep_tags(std::string_view s, const std::vector<std::string>& allowed,
                      std::vector<std::string>* removed) {
  std::string out;
  out.reserve(s.size());
  bool dropped_any = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto len = s[i] == '[' ? tag_length_at(s, i) : 0;
    if (len == 0) {
      out.push_back(s[i]);
      continue;
    }
    std::string_view id = s.substr(i + 3, len - 4);
    if (std::find(allowed.begin(), allowed.end(), id) != allowed.end()) {
      out.append(s.substr(i, len));
    } else {
      dropped_any = true;
      if (removed != nullptr &&
          std::find(removed->begin(), removed->end(), id) == removed->end()) {
        removed->emplace_back(id);
      }
    }
    i += len - 1;
  }
  if (!dropped_any) return out;
  // Tidy the gaps a removed tag leaves ("x  [E:a]." / "x ." -> "x [E:a]." / "x.").
  std::string tidy;
  tidy.reserve(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const char c = out[i];
    if (c == ' ' && !tidy.empty() && tidy.back() == ' ') continue;
    if ((is_terminator(c) || c == ',' || c == ';') && !tidy.empty() && tidy.back() == ' ') {
      tidy.pop_back();
    }
    tidy.push_back(c);
  }
  return std::string(trim(tidy));
}

std::string strip_tags(std::string_view s) {
  return collapse_whitespace(keep_tags(s, {}, nullptr));
}

std::string format_fixed(double value, int decimals) {
  if (value == 0.0) value = 0.0;  // no "-0.000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out(buf);
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string format_shortest(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::int64_t> parse_int64(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> find_number(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool digit = std::isdigit(static_cast<unsigned char>(s[i])) != 0;
    const bool dot_digit = s[i] == '.' && i + 1 < s.size() &&
                           std::isdigit(static_cast<unsigned char>(s[i + 1])) != 0;
    if (!digit && !dot_digit) continue;
    std::size_t b = i;
    if (b > 0 && s[b - 1] == '-') --b;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + s.size(), v);
    if (ec == std::errc()) return v;
  }
  return std::nullopt;
}

std::uint64_t hash64(std::string_view s, std::uint64_t seed) {
  // FNV-1a folded through splitmix64 so nearby seeds diverge.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = h;
  return splitmix64(state);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace matrag::text
