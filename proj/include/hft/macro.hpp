#ifndef HFT_MACRO_HPP
#define HFT_MACRO_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "hft/ast.hpp"

namespace hft::macro {

enum class PermKind { Identity, RotateLastToFront, Explicit };

struct PermSpec {
  PermKind kind = PermKind::Identity;
  std::vector<int> order; // Explicit: 1-based input index per output slot
};

// Per-target macro registry: ordering families (access + declaration macro
// sharing one permutation) and block-size values per template suffix.
class MacroTable {
public:
  MacroTable();

  void register_family(const std::string& acc_name, const std::string& dom_name);
  void set_order(const std::string& macro_name, PermSpec spec); // either family member
  void set_block_size(const std::string& template_suffix, std::array<int, 3> xyz);

  bool is_ordering_macro(const std::string& name) const;
  std::vector<int> permutation(const std::string& name, int arity, SourceLoc loc) const;
  std::array<int, 3> block_size(const std::string& template_suffix) const;

  // Distinct permutations of the same family member conflict.
  const PermSpec* order_for(const std::string& name) const;

private:
  std::map<std::string, std::string> family_of_; // member (lower) -> family id
  std::map<std::string, PermSpec> orders_;       // family id -> permutation
  std::map<std::string, std::array<int, 3>> blocks_; // template (lower), "" = default
};

// Single-pass expansion of ordering and block-size macros over source text.
// Continuations are merged first; the result is unsplit logical lines.
std::string expand(const std::string& text, const MacroTable& table,
                   const std::string& file_id = "<generated>");

// --- access wrapping --------------------------------------------------------

struct WrapEntry {
  std::string acc_macro;
  std::vector<std::string> ext_iterators; // prepended index expressions
};
using WrapPlan = std::map<std::string, WrapEntry>; // key: lower-case object name

// Rewrites accesses in place: a(args) -> a(MACRO(ext...,args)) and, for
// extended scalars, v -> v(MACRO(ext...)). Returns the rewrite count;
// rewritten statements lose their verbatim source text.
int wrap_accesses(std::vector<ast::StmtPtr>& body, const WrapPlan& plan);

// Declaration dim list text: "DOM(nx,ny,ntlm)" built from extension sizes
// and the declared dims (bounds kept as lo:hi).
std::string wrap_dim_list(const std::string& dom_macro, const std::vector<std::string>& ext_sizes,
                          const ast::VarDecl& decl);

std::string block_size_macro(char axis, const std::string& template_suffix);

} // namespace hft::macro

#endif
