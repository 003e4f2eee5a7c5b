#ifndef HFT_TOKENIZE_HPP
#define HFT_TOKENIZE_HPP

#include <string>
#include <vector>

#include "hft/diagnostics.hpp"

namespace hft {

struct Token {
  enum class Kind {
    Ident,
    IntLit,
    RealLit,  // includes kind-suffixed forms such as 0.0_r_size
    LogicalLit, // .true. / .false.
    DotOp,    // .GT. .AND. ...
    Sym,      // punctuation and operators, including ** == <<< >>>
    StrLit,
    End,
  };
  Kind kind = Kind::End;
  std::string text;
  int col = 0; // 0-based column in the logical line
};

// Tokenizes one logical line of the dialect. Keywords are plain identifiers;
// case is preserved in `text`.
std::vector<Token> tokenize(const std::string& line, SourceLoc loc);

std::string to_lower(const std::string& s);
bool same_ident(const std::string& a, const std::string& b);

} // namespace hft

#endif
