#pragma once

// Inline attribution markup.
//
//   Crane attended Syracuse University [Q206534, alma mater: Syracuse University].
//   He was born on July 8, 1596 [NA] in Rome [Q212657, place of birth: Rome].
//
// A bracket "[<id>, r1: v1, r2: v2]" expands to one triple citation per pair,
// all sharing <id>. "[NA]" marks a knowledge gap. Anything else in square
// brackets is kept as a Malformed citation so it can be scored as incorrect.
// The subject may also be written "qid: <id>"; a "qid" pair rebinds the
// subject and a "name" pair only echoes it, neither produces a triple.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kalma/kg_store.hpp"
#include "kalma/text.hpp"

namespace kalma {

struct NotApplicable {
  bool operator==(const NotApplicable&) const = default;
};

struct Malformed {
  std::string raw;
  bool operator==(const Malformed&) const = default;
};

using Citation = std::variant<KnowledgeTriple, NotApplicable, Malformed>;

inline bool is_triple(const Citation& c) {
  return std::holds_alternative<KnowledgeTriple>(c);
}
inline bool is_na(const Citation& c) {
  return std::holds_alternative<NotApplicable>(c);
}
inline bool is_malformed(const Citation& c) {
  return std::holds_alternative<Malformed>(c);
}

struct Sentence {
  std::string text;
  std::vector<Citation> citations;

  bool has_na() const {
    for (const auto& c : citations) {
      if (is_na(c)) return true;
    }
    return false;
  }

  bool operator==(const Sentence&) const = default;
};

struct AttributedAnswer {
  std::vector<Sentence> sentences;
  std::string raw;

  // Structural equality ignores `raw`.
  bool same_structure(const AttributedAnswer& other) const {
    return sentences == other.sentences;
  }

  std::vector<KnowledgeTriple> triples() const {
    std::vector<KnowledgeTriple> out;
    for (const auto& s : sentences) {
      for (const auto& c : s.citations) {
        if (auto* t = std::get_if<KnowledgeTriple>(&c)) out.push_back(*t);
      }
    }
    return out;
  }
};

struct Span {
  size_t begin = 0;
  size_t end = 0;
  bool operator==(const Span&) const = default;
};

struct SegmenterOptions {
  // Tokens (compared case-insensitively, including the final period) that
  // never end a sentence.
  std::vector<std::string> abbreviations = {
      "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "jr.", "sr.", "mt.",
      "vs.", "e.g.", "i.e.", "cf.", "no.", "vol.", "gen.", "col.", "lt.",
      "sgt.", "capt.", "rev.", "ft."};
  // Treat dotted initialisms such as "S.S." or "U.S.A." as abbreviations.
  bool protect_initialisms = true;
};

namespace detail {

struct BracketRegion {
  size_t begin;  // position of '['
  size_t end;    // one past the matching ']'
};

// Closed bracket groups, scanned left to right. An unmatched '[' is plain
// text. A '[' nested before the closing ']' stays inside the region and makes
// that bracket Malformed.
inline std::vector<BracketRegion> find_brackets(std::string_view s) {
  std::vector<BracketRegion> out;
  size_t i = 0;
  while (i < s.size()) {
    size_t open = s.find('[', i);
    if (open == std::string_view::npos) break;
    size_t close = s.find(']', open + 1);
    if (close == std::string_view::npos) break;
    out.push_back({open, close + 1});
    i = close + 1;
  }
  return out;
}

inline bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

// Length of a closing quote/paren sequence starting at `pos`.
inline size_t closer_length(std::string_view s, size_t pos) {
  if (pos >= s.size()) return 0;
  char c = s[pos];
  if (c == '"' || c == '\'' || c == ')') return 1;
  // U+201D and U+2019 in UTF-8
  if (s.size() - pos >= 3 &&
      static_cast<unsigned char>(s[pos]) == 0xE2 &&
      static_cast<unsigned char>(s[pos + 1]) == 0x80 &&
      (static_cast<unsigned char>(s[pos + 2]) == 0x9D ||
       static_cast<unsigned char>(s[pos + 2]) == 0x99)) {
    return 3;
  }
  return 0;
}

inline bool is_initialism(std::string_view tok) {
  if (tok.size() < 4 || tok.size() % 2 != 0) return false;
  for (size_t i = 0; i < tok.size(); i += 2) {
    char c = tok[i];
    bool letter = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (!letter || tok[i + 1] != '.') return false;
  }
  return true;
}

inline bool is_abbreviation(std::string_view s, size_t dot,
                            const SegmenterOptions& opt) {
  size_t b = dot;
  while (b > 0 && !text::is_space(s[b - 1])) --b;
  std::string_view tok = s.substr(b, dot + 1 - b);
  while (!tok.empty() && !text::is_word_char(tok.front())) tok.remove_prefix(1);
  if (tok.empty()) return false;
  for (const auto& a : opt.abbreviations) {
    if (text::iequals(tok, a)) return true;
  }
  return opt.protect_initialisms && is_initialism(tok);
}

inline bool valid_id_token(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (text::is_space(c) || c == ',' || c == ':' || c == '[' || c == ']') {
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Splits on '.', '!' or '?' (optionally followed by closing quotes) when the
// next character is whitespace or end of text. Terminators inside brackets
// and abbreviation periods never split. Spans tile [0, text.size()) exactly;
// inter-sentence whitespace belongs to the start of the following span.
inline std::vector<Span> segment_sentences(std::string_view s,
                                           const SegmenterOptions& opt = {}) {
  std::vector<Span> spans;
  if (text::trim_view(s).empty()) {
    if (!s.empty()) spans.push_back({0, s.size()});
    return spans;
  }
  auto brackets = detail::find_brackets(s);
  size_t br = 0;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    while (br < brackets.size() && brackets[br].end <= i) ++br;
    if (br < brackets.size() && brackets[br].begin <= i) {
      i = brackets[br].end - 1;
      continue;
    }
    if (!detail::is_terminator(s[i])) continue;
    if (i + 1 < s.size() && detail::is_terminator(s[i + 1])) continue;
    size_t j = i + 1;
    while (size_t n = detail::closer_length(s, j)) j += n;
    if (j < s.size() && !text::is_space(s[j])) continue;
    if (s[i] == '.' && detail::is_abbreviation(s, i, opt)) continue;
    spans.push_back({start, j});
    start = j;
    i = j - 1;
  }
  if (start < s.size()) {
    if (text::trim_view(s.substr(start)).empty() && !spans.empty()) {
      spans.back().end = s.size();
    } else {
      spans.push_back({start, s.size()});
    }
  }
  return spans;
}

// Parses the inside of one bracket group (without the brackets).
inline std::vector<Citation> parse_bracket(std::string_view inner) {
  std::string raw = "[" + std::string(inner) + "]";
  auto malformed = [&]() { return std::vector<Citation>{Malformed{raw}}; };
  if (text::trim_view(inner) == "NA") return {NotApplicable{}};
  if (inner.find('[') != std::string_view::npos) return malformed();

  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    size_t comma = inner.find(',', start);
    parts.push_back(text::trim_view(inner.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto p : parts) {
    if (p.empty()) return malformed();
  }

  std::string subject;
  bool qid_form = false;
  std::string_view head = parts.front();
  if (size_t colon = head.find(':'); colon != std::string_view::npos) {
    if (!text::iequals(text::trim_view(head.substr(0, colon)), "qid")) {
      return malformed();
    }
    subject = text::trim(head.substr(colon + 1));
    qid_form = true;
  } else {
    subject = std::string(head);
  }
  if (!detail::valid_id_token(subject)) return malformed();
  if (parts.size() == 1 && !qid_form) return malformed();

  std::vector<Citation> out;
  for (size_t i = 1; i < parts.size(); ++i) {
    size_t colon = parts[i].find(':');
    if (colon == std::string_view::npos) return malformed();
    auto relation = text::trim_view(parts[i].substr(0, colon));
    auto value = text::trim_view(parts[i].substr(colon + 1));
    if (relation.empty() || value.empty()) return malformed();
    if (text::iequals(relation, "qid")) {
      if (!detail::valid_id_token(value)) return malformed();
      subject = std::string(value);
      continue;
    }
    if (text::iequals(relation, "name")) continue;
    out.emplace_back(KnowledgeTriple(subject, relation, value));
  }
  return out;
}

namespace detail {

// Canonical sentence text: collapsed whitespace, no space before punctuation.
inline std::string canonical_text(std::string_view s) {
  std::string collapsed = text::collapse_whitespace(s);
  std::string out;
  out.reserve(collapsed.size());
  for (size_t i = 0; i < collapsed.size(); ++i) {
    char c = collapsed[i];
    if (c == ' ' && i + 1 < collapsed.size()) {
      char n = collapsed[i + 1];
      if (n == '.' || n == ',' || n == ';' || n == ':' || n == '!' || n == '?') {
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

// Never fails: anything that does not fit the grammar becomes Malformed.
inline AttributedAnswer parse_answer(std::string_view raw,
                                     const SegmenterOptions& opt = {}) {
  AttributedAnswer answer;
  answer.raw = std::string(raw);
  std::vector<Citation> orphans;  // citations from text-less leading spans
  for (const Span& span : segment_sentences(raw, opt)) {
    std::string_view piece = raw.substr(span.begin, span.end - span.begin);
    Sentence sentence;
    std::string stripped;
    size_t cursor = 0;
    for (const auto& b : detail::find_brackets(piece)) {
      stripped.append(piece.substr(cursor, b.begin - cursor));
      stripped.push_back(' ');
      for (auto& c : parse_bracket(piece.substr(b.begin + 1, b.end - b.begin - 2))) {
        sentence.citations.push_back(std::move(c));
      }
      cursor = b.end;
    }
    stripped.append(piece.substr(cursor));
    sentence.text = detail::canonical_text(stripped);

    if (sentence.text.empty()) {
      auto& sink = answer.sentences.empty() ? orphans
                                            : answer.sentences.back().citations;
      sink.insert(sink.end(), sentence.citations.begin(), sentence.citations.end());
      continue;
    }
    if (!orphans.empty()) {
      sentence.citations.insert(sentence.citations.begin(), orphans.begin(),
                                orphans.end());
      orphans.clear();
    }
    answer.sentences.push_back(std::move(sentence));
  }
  if (!orphans.empty()) answer.sentences.push_back({"", std::move(orphans)});
  return answer;
}

namespace detail {

inline void check_renderable(const KnowledgeTriple& t) {
  auto bad = [&](const std::string& why) {
    throw std::invalid_argument("triple " + t.subject().str() + "/" +
                                t.relation() + " cannot be rendered: " + why);
  };
  if (!valid_id_token(t.subject().str())) bad("subject id");
  for (char c : t.relation()) {
    if (c == ':' || c == ',' || c == '[' || c == ']') bad("relation characters");
  }
  if (text::iequals(t.relation(), "qid") || text::iequals(t.relation(), "name")) {
    bad("reserved relation");
  }
  for (char c : t.object()) {
    if (c == ',' || c == '[' || c == ']') bad("object characters");
  }
}

inline std::string render_citations(const std::vector<Citation>& cs) {
  std::string out;
  size_t i = 0;
  while (i < cs.size()) {
    if (!out.empty()) out.push_back(' ');
    if (is_na(cs[i])) {
      out += "[NA]";
      ++i;
      continue;
    }
    if (auto* m = std::get_if<Malformed>(&cs[i])) {
      throw std::invalid_argument("cannot render malformed citation " + m->raw);
    }
    const auto& first = std::get<KnowledgeTriple>(cs[i]);
    check_renderable(first);
    out += "[" + first.subject().str();
    while (i < cs.size()) {
      auto* t = std::get_if<KnowledgeTriple>(&cs[i]);
      if (!t || t->subject() != first.subject()) break;
      check_renderable(*t);
      out += ", " + t->relation() + ": " + t->object();
      ++i;
    }
    out += "]";
  }
  return out;
}

// Splits trailing terminator + closing quotes off a sentence.
inline size_t terminal_suffix_start(std::string_view s) {
  size_t e = s.size();
  while (e > 0) {
    if (e >= 3 && closer_length(s, e - 3) == 3) {
      e -= 3;
    } else if (closer_length(s, e - 1) == 1) {
      e -= 1;
    } else {
      break;
    }
  }
  if (e == 0 || !is_terminator(s[e - 1])) return s.size();
  while (e > 0 && is_terminator(s[e - 1])) --e;
  return e;
}

}  // namespace detail

// True when the triple can be written as a citation bracket and parsed back
// to the same triple.
inline bool citable(const KnowledgeTriple& t) {
  try {
    detail::check_renderable(t);
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

// Inverse of parse_answer on well-formed answers: citations are placed just
// before each sentence's terminator, consecutive same-subject triples share
// one bracket. Throws std::invalid_argument on Malformed citations or triples
// the grammar cannot express (commas in values, reserved relations).
inline std::string render_answer(const AttributedAnswer& answer) {
  std::string out;
  for (const auto& s : answer.sentences) {
    std::string cites = detail::render_citations(s.citations);
    std::string piece;
    if (cites.empty()) {
      piece = s.text;
    } else if (s.text.empty()) {
      piece = cites;
    } else {
      size_t cut = detail::terminal_suffix_start(s.text);
      piece = s.text.substr(0, cut) + " " + cites + s.text.substr(cut);
    }
    if (!out.empty() && !piece.empty()) out.push_back(' ');
    out += piece;
  }
  return out;
}

// Sentence texts only, citations dropped.
inline std::string render_plain(const AttributedAnswer& answer) {
  std::string out;
  for (const auto& s : answer.sentences) {
    if (s.text.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += s.text;
  }
  return out;
}

// Triple-citation text for a single sentence, e.g. "... is Rome [Q1, r: v]."
inline std::string render_sentence(const Sentence& s) {
  AttributedAnswer a;
  a.sentences.push_back(s);
  return render_answer(a);
}

}  // namespace kalma
