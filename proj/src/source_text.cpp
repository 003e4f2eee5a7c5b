#include "hft/source_text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "hft/tokenize.hpp"

namespace hft {

namespace {

std::string rstrip(const std::string& s) {
  size_t e = s.size();
  while (e > 0 && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(0, e);
}

std::string lstrip(const std::string& s) {
  size_t b = 0;
  while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  return s.substr(b);
}

// Splits a physical line into code and trailing comment. A '!' inside a
// character literal does not start a comment; lines whose first non-blank
// characters are a recognized sentinel are all code.
void split_comment(const std::string& text, std::string& code, std::optional<std::string>& comment) {
  if (is_sentinel_line(text)) {
    code = text;
    comment = std::nullopt;
    return;
  }
  char quote = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == '!') {
      code = text.substr(0, i);
      comment = text.substr(i);
      return;
    }
  }
  code = text;
  comment = std::nullopt;
}

void append_comment(std::optional<std::string>& dst, const std::optional<std::string>& src) {
  if (!src) return;
  if (!dst)
    dst = *src;
  else
    *dst += " " + *src;
}

} // namespace

bool is_sentinel_line(const std::string& text) {
  size_t b = 0;
  while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  return text.compare(b, 2, "!$") == 0;
}

std::vector<PhysicalLine> physical_lines_from_text(const std::string& file_id,
                                                   const std::string& text) {
  std::vector<PhysicalLine> out;
  std::string cur;
  int n = 1;
  for (char c : text) {
    if (c == '\n') {
      out.push_back({file_id, n++, cur});
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back({file_id, n, cur});
  return out;
}

std::vector<PhysicalLine> read_physical_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrKind::Io, "cannot open source file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return physical_lines_from_text(path, ss.str());
}

std::vector<LogicalLine> merge_continuations(const std::vector<PhysicalLine>& lines) {
  std::vector<LogicalLine> out;
  size_t i = 0;
  while (i < lines.size()) {
    const PhysicalLine& first = lines[i];
    LogicalLine logical;
    logical.spans.push_back({first.file, first.line_no});

    std::string code;
    split_comment(first.text, code, logical.trailing_comment);

    bool sentinel = is_sentinel_line(code);
    std::string trimmed = rstrip(code);
    bool continued = !trimmed.empty() && trimmed.back() == '&';
    logical.text = continued ? rstrip(trimmed.substr(0, trimmed.size() - 1)) : code;
    ++i;

    while (continued) {
      // Comment-only and blank lines may sit between continuations.
      const PhysicalLine* next = nullptr;
      while (i < lines.size()) {
        std::string ncode;
        std::optional<std::string> ncomment;
        split_comment(lines[i].text, ncode, ncomment);
        if (rstrip(ncode).empty()) {
          logical.spans.push_back({lines[i].file, lines[i].line_no});
          append_comment(logical.trailing_comment, ncomment);
          ++i;
          continue;
        }
        next = &lines[i];
        break;
      }
      if (!next) {
        const LineSpan& at = logical.spans.back();
        fail(ErrKind::Parse, "dangling continuation at end of file", {at.file, at.line_no});
      }

      std::string ncode;
      std::optional<std::string> ncomment;
      split_comment(next->text, ncode, ncomment);
      append_comment(logical.trailing_comment, ncomment);
      logical.spans.push_back({next->file, next->line_no});
      ++i;

      std::string fragment;
      if (sentinel) {
        // A continued sentinel line resumes after the "!$OMP&"/"!$acc&" prefix.
        std::string body = lstrip(ncode);
        size_t amp = body.find('&');
        if (body.compare(0, 2, "!$") != 0 || amp == std::string::npos)
          fail(ErrKind::Parse, "continued directive line must resume with a '!$...&' sentinel",
               {next->file, next->line_no});
        fragment = body.substr(amp + 1);
      } else {
        std::string body = lstrip(ncode);
        if (!body.empty() && body.front() == '&') {
          fragment = body.substr(1); // splice verbatim after the leading '&'
        } else {
          fragment = " " + body;
        }
      }

      std::string ftrim = rstrip(fragment);
      continued = !ftrim.empty() && ftrim.back() == '&';
      if (continued)
        logical.text += rstrip(ftrim.substr(0, ftrim.size() - 1));
      else
        logical.text += fragment;
    }
    logical.text = rstrip(logical.text);
    out.push_back(std::move(logical));
  }
  return out;
}

std::string collapse_whitespace(const std::string& s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space && !out.empty()) out += ' ';
    in_space = false;
    out += c;
  }
  return out;
}

std::vector<LogicalLine> sanitize(const std::vector<PhysicalLine>& lines) {
  std::vector<LogicalLine> merged = merge_continuations(lines);
  std::vector<LogicalLine> out;
  for (LogicalLine& l : merged) {
    std::string collapsed = collapse_whitespace(l.text);
    if (collapsed.empty()) continue;
    l.text = std::move(collapsed);
    l.trailing_comment = std::nullopt;
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<std::string> sanitize_text(const std::string& file_id, const std::string& text) {
  std::vector<std::string> out;
  for (const LogicalLine& l : sanitize(physical_lines_from_text(file_id, text)))
    out.push_back(l.text);
  return out;
}

CodeMetrics compute_metrics(const std::vector<PhysicalLine>& reference,
                            const std::vector<PhysicalLine>& ported) {
  CodeMetrics m;
  m.total_lines = static_cast<long>(reference.size());

  std::map<std::string, long> ref_counts, ported_counts;
  long ref_sanitized = 0;
  for (const LogicalLine& l : sanitize(reference)) {
    ++ref_counts[l.text];
    ++ref_sanitized;
  }
  long ported_sanitized = 0;
  for (const LogicalLine& l : sanitize(ported)) {
    ++ported_counts[l.text];
    ++ported_sanitized;
  }
  m.sanitized_lines = ref_sanitized;

  long unchanged = 0;
  for (const auto& [text, n] : ref_counts) {
    auto it = ported_counts.find(text);
    if (it != ported_counts.end()) unchanged += std::min(n, it->second);
  }
  m.unchanged_lines = unchanged;
  m.replaced_lines = ref_sanitized - unchanged;
  m.added_lines = ported_sanitized - unchanged;
  return m;
}

namespace {

// Token boundaries for line splitting: the dialect tokenizer, falling back
// to whitespace chunks for text it does not recognize.
std::vector<std::string> split_tokens(const std::string& line) {
  try {
    std::vector<std::string> out;
    for (const Token& t : tokenize(line, {})) out.push_back(t.text);
    return out;
  } catch (const Error&) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
  }
}

} // namespace

std::string split_lines(const std::string& text, int limit) {
  if (limit < 40) fail(ErrKind::Config, "column limit must be at least 40");
  std::ostringstream out;
  std::istringstream in(text);
  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (!first_line) out << '\n';
    first_line = false;
    if (static_cast<int>(line.size()) <= limit) {
      out << line;
      continue;
    }

    std::string indent;
    size_t b = 0;
    while (b < line.size() && (line[b] == ' ' || line[b] == '\t')) ++b;
    indent = line.substr(0, b);

    bool sentinel = is_sentinel_line(line);
    std::string sentinel_prefix;
    std::string payload = line.substr(b);
    if (sentinel) {
      size_t sp = payload.find_first_of(" \t");
      sentinel_prefix = payload.substr(0, sp == std::string::npos ? payload.size() : sp);
      payload = sp == std::string::npos ? "" : payload.substr(sp + 1);
    }

    std::string cont_lead = sentinel ? indent + sentinel_prefix + "& "
                                     : indent + "  & ";
    std::string cur = sentinel ? indent + sentinel_prefix + " " : indent;
    bool fresh = true;
    for (const std::string& tok : split_tokens(payload)) {
      std::string candidate = fresh ? cur + tok : cur + " " + tok;
      if (static_cast<int>(candidate.size()) + 2 <= limit) { // room for " &"
        cur = candidate;
        fresh = false;
        continue;
      }
      if (fresh)
        fail(ErrKind::Codegen, "token '" + tok.substr(0, 32) +
                                   "...' does not fit within the column limit");
      out << cur << " &" << '\n';
      cur = cont_lead + tok;
      if (static_cast<int>(cur.size()) + 2 > limit)
        fail(ErrKind::Codegen, "token '" + tok.substr(0, 32) +
                                   "...' does not fit within the column limit");
      fresh = false;
    }
    out << cur;
  }
  if (!text.empty() && text.back() == '\n') out << '\n';
  return out.str();
}

const char* err_kind_name(ErrKind k) {
  switch (k) {
    case ErrKind::Config: return "config";
    case ErrKind::Parse: return "parse";
    case ErrKind::Analyze: return "analyze";
    case ErrKind::Codegen: return "codegen";
    case ErrKind::Expand: return "expand";
    case ErrKind::Runtime: return "runtime";
    case ErrKind::Residency: return "residency";
    case ErrKind::Race: return "race";
    case ErrKind::Validation: return "validation";
    case ErrKind::Io: return "io";
  }
  return "error";
}

} // namespace hft
