#include "hft/tokenize.hpp"

#include <array>
#include <cctype>

namespace hft {

std::string to_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool same_ident(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  return true;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool is_dot_word(const std::string& w) {
  static const std::array<const char*, 13> words = {
      "gt", "lt", "ge", "le", "eq", "ne", "and", "or", "not", "true", "false", "eqv", "neqv"};
  std::string lw = to_lower(w);
  for (const char* k : words)
    if (lw == k) return true;
  return false;
}

} // namespace

std::vector<Token> tokenize(const std::string& line, SourceLoc loc) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = line.size();

  auto push = [&](Token::Kind k, std::string text, size_t col) {
    out.push_back({k, std::move(text), static_cast<int>(col)});
  };

  while (i < n) {
    char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }

    size_t start = i;

    if (ident_start(c)) {
      while (i < n && ident_char(line[i])) ++i;
      push(Token::Kind::Ident, line.substr(start, i - start), start);
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      bool real = false;
      if (i < n && line[i] == '.') {
        // "1.AND." keeps the dot with the operator, not the number.
        size_t j = i + 1;
        std::string word;
        while (j < n && std::isalpha(static_cast<unsigned char>(line[j]))) word += line[j++];
        bool dot_op = j < n && line[j] == '.' && !word.empty() && is_dot_word(word);
        if (!dot_op) {
          real = true;
          ++i;
          while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        }
      }
      if (i < n && (line[i] == 'e' || line[i] == 'E' || line[i] == 'd' || line[i] == 'D')) {
        size_t j = i + 1;
        if (j < n && (line[j] == '+' || line[j] == '-')) ++j;
        if (j < n && std::isdigit(static_cast<unsigned char>(line[j]))) {
          real = true;
          i = j;
          while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        }
      }
      if (i < n && line[i] == '_' && i + 1 < n && ident_start(line[i + 1])) {
        real = true; // kind suffix: only real literals carry one in this dialect
        ++i;
        while (i < n && ident_char(line[i])) ++i;
      }
      push(real ? Token::Kind::RealLit : Token::Kind::IntLit, line.substr(start, i - start), start);
      continue;
    }

    if (c == '.') {
      size_t j = i + 1;
      std::string word;
      while (j < n && std::isalpha(static_cast<unsigned char>(line[j]))) word += line[j++];
      if (j < n && line[j] == '.' && !word.empty() && is_dot_word(word)) {
        std::string text = line.substr(i, j - i + 1);
        std::string lw = to_lower(word);
        push(lw == "true" || lw == "false" ? Token::Kind::LogicalLit : Token::Kind::DotOp,
             text, start);
        i = j + 1;
        continue;
      }
      if (j < n && std::isdigit(static_cast<unsigned char>(line[j]))) {
        // .5 style literal
        i = j;
        while (i < n && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i < n && line[i] == '_' && i + 1 < n && ident_start(line[i + 1])) {
          ++i;
          while (i < n && ident_char(line[i])) ++i;
        }
        push(Token::Kind::RealLit, line.substr(start, i - start), start);
        continue;
      }
      fail(ErrKind::Parse, "unexpected '.' in '" + line + "'", loc);
    }

    if (c == '\'' || c == '"') {
      char q = c;
      ++i;
      while (i < n && line[i] != q) ++i;
      if (i >= n) fail(ErrKind::Parse, "unterminated character literal", loc);
      ++i;
      push(Token::Kind::StrLit, line.substr(start, i - start), start);
      continue;
    }

    auto try_sym = [&](const char* s) {
      size_t len = std::string(s).size();
      if (line.compare(i, len, s) == 0) {
        push(Token::Kind::Sym, s, start);
        i += len;
        return true;
      }
      return false;
    };

    if (try_sym("<<<") || try_sym(">>>") || try_sym("::") || try_sym("**") || try_sym("==") ||
        try_sym("/=") || try_sym("<=") || try_sym(">=") || try_sym("=>"))
      continue;

    static const std::string singles = "(){},:=+-*/%<>@&!$;";
    if (singles.find(c) != std::string::npos) {
      push(Token::Kind::Sym, std::string(1, c), start);
      ++i;
      continue;
    }

    fail(ErrKind::Parse, std::string("unexpected character '") + c + "' in '" + line + "'", loc);
  }

  push(Token::Kind::End, "", n);
  return out;
}

} // namespace hft
