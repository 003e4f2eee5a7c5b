#include "hft/macro.hpp"

#include <cctype>
#include <sstream>

#include "hft/source_text.hpp"
#include "hft/tokenize.hpp"

namespace hft::macro {

MacroTable::MacroTable() {
  register_family("AT", "DOM");
  blocks_[""] = {32, 4, 1};
}

void MacroTable::register_family(const std::string& acc_name, const std::string& dom_name) {
  std::string id = to_lower(acc_name);
  family_of_[to_lower(acc_name)] = id;
  family_of_[to_lower(dom_name)] = id;
  orders_.emplace(id, PermSpec{});
}

void MacroTable::set_order(const std::string& macro_name, PermSpec spec) {
  std::string lname = to_lower(macro_name);
  auto it = family_of_.find(lname);
  if (it == family_of_.end()) {
    // A macro configured before any spec names it forms its own family.
    family_of_[lname] = lname;
    orders_[lname] = std::move(spec);
    return;
  }
  orders_[it->second] = std::move(spec);
}

void MacroTable::set_block_size(const std::string& template_suffix, std::array<int, 3> xyz) {
  for (int v : xyz)
    if (v < 1) fail(ErrKind::Config, "block sizes must be positive");
  blocks_[to_lower(template_suffix)] = xyz;
}

bool MacroTable::is_ordering_macro(const std::string& name) const {
  return family_of_.count(to_lower(name)) > 0;
}

const PermSpec* MacroTable::order_for(const std::string& name) const {
  auto fit = family_of_.find(to_lower(name));
  if (fit == family_of_.end()) return nullptr;
  auto oit = orders_.find(fit->second);
  return oit == orders_.end() ? nullptr : &oit->second;
}

std::vector<int> MacroTable::permutation(const std::string& name, int arity,
                                         SourceLoc loc) const {
  const PermSpec* spec = order_for(name);
  if (!spec) fail(ErrKind::Expand, "undefined ordering macro '" + name + "'", loc);
  std::vector<int> out;
  switch (spec->kind) {
    case PermKind::Identity:
      for (int i = 1; i <= arity; ++i) out.push_back(i);
      return out;
    case PermKind::RotateLastToFront:
      out.push_back(arity);
      for (int i = 1; i < arity; ++i) out.push_back(i);
      return out;
    case PermKind::Explicit:
      if (static_cast<int>(spec->order.size()) != arity)
        fail(ErrKind::Expand,
             "macro '" + name + "' used with " + std::to_string(arity) +
                 " arguments but its permutation has " + std::to_string(spec->order.size()),
             loc);
      std::vector<bool> seen(arity, false);
      for (int idx : spec->order) {
        if (idx < 1 || idx > arity || seen[idx - 1])
          fail(ErrKind::Config, "permutation for '" + name + "' is not a bijection", loc);
        seen[idx - 1] = true;
      }
      return spec->order;
  }
  return out;
}

std::array<int, 3> MacroTable::block_size(const std::string& template_suffix) const {
  auto it = blocks_.find(to_lower(template_suffix));
  if (it != blocks_.end()) return it->second;
  return blocks_.at(""); // unconfigured templates use the defaults
}

std::string block_size_macro(char axis, const std::string& template_suffix) {
  std::string name = std::string("CUDA_BLOCKSIZE_") + axis;
  if (!template_suffix.empty()) name += "_" + template_suffix;
  return name;
}

namespace {

bool glue_left(const std::string& tok) {
  return tok == ")" || tok == "," || tok == "(" || tok == "%" || tok == ":";
}
bool glue_right(const std::string& tok) {
  return tok == "(" || tok == "%" || tok == ":" || tok == ",";
}

std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  std::string prev;
  for (const std::string& t : toks) {
    bool space = !out.empty();
    if (space && (glue_left(t) || glue_right(prev))) space = false;
    if (space && !prev.empty() &&
        (std::isalnum(static_cast<unsigned char>(prev.back())) || prev.back() == '_') &&
        t == "(")
      space = false;
    if (space) out += ' ';
    out += t;
    prev = t;
  }
  return out;
}

struct LineExpander {
  const MacroTable& table;
  SourceLoc loc;

  // Replaces block-size identifiers and ordering-macro calls in one token
  // span; ordering-macro argument lists are processed before permutation.
  std::vector<std::string> run(const std::vector<Token>& toks, size_t begin, size_t end) {
    std::vector<std::string> out;
    size_t i = begin;
    while (i < end) {
      const Token& t = toks[i];
      if (t.kind == Token::Kind::Ident && t.text.rfind("CUDA_BLOCKSIZE", 0) == 0) {
        out.push_back(expand_block_macro(t.text));
        ++i;
        continue;
      }
      if (t.kind == Token::Kind::Ident && table.is_ordering_macro(t.text) && i + 1 < end &&
          toks[i + 1].kind == Token::Kind::Sym && toks[i + 1].text == "(") {
        size_t close = matching_paren(toks, i + 1, end, t.text);
        std::vector<std::pair<size_t, size_t>> args = split_args(toks, i + 2, close);
        std::vector<std::string> arg_texts;
        for (auto [b, e] : args) arg_texts.push_back(join_tokens(run(toks, b, e)));
        std::vector<int> perm =
            table.permutation(t.text, static_cast<int>(arg_texts.size()), loc);
        for (size_t k = 0; k < perm.size(); ++k) {
          if (k) out.push_back(",");
          out.push_back(arg_texts[perm[k] - 1]);
        }
        i = close + 1;
        continue;
      }
      if (t.kind == Token::Kind::Ident && table.is_ordering_macro(t.text))
        fail(ErrKind::Expand, "ordering macro '" + t.text + "' used without an argument list",
             loc);
      out.push_back(t.text);
      ++i;
    }
    return out;
  }

  std::string expand_block_macro(const std::string& name) {
    // CUDA_BLOCKSIZE_<axis>[_<template>]
    std::string rest = name.substr(std::string("CUDA_BLOCKSIZE").size());
    if (rest.size() < 2 || rest[0] != '_')
      fail(ErrKind::Expand, "undefined macro '" + name + "'", loc);
    char axis = rest[1];
    std::string tpl = rest.size() > 2 ? rest.substr(3) : "";
    if (rest.size() > 2 && rest[2] != '_')
      fail(ErrKind::Expand, "undefined macro '" + name + "'", loc);
    std::array<int, 3> b = table.block_size(tpl);
    switch (axis) {
      case 'X': return std::to_string(b[0]);
      case 'Y': return std::to_string(b[1]);
      case 'Z': return std::to_string(b[2]);
      default: fail(ErrKind::Expand, "undefined macro '" + name + "'", loc);
    }
  }

  size_t matching_paren(const std::vector<Token>& toks, size_t open, size_t end,
                        const std::string& name) {
    int depth = 0;
    for (size_t i = open; i < end; ++i) {
      if (toks[i].kind != Token::Kind::Sym) continue;
      if (toks[i].text == "(") ++depth;
      if (toks[i].text == ")" && --depth == 0) return i;
    }
    fail(ErrKind::Expand, "unbalanced parentheses in macro '" + name + "'", loc);
  }

  std::vector<std::pair<size_t, size_t>> split_args(const std::vector<Token>& toks, size_t begin,
                                                    size_t end) {
    std::vector<std::pair<size_t, size_t>> out;
    int depth = 0;
    size_t start = begin;
    for (size_t i = begin; i < end; ++i) {
      if (toks[i].kind != Token::Kind::Sym) continue;
      if (toks[i].text == "(") ++depth;
      if (toks[i].text == ")") --depth;
      if (toks[i].text == "," && depth == 0) {
        out.emplace_back(start, i);
        start = i + 1;
      }
    }
    if (start < end || !out.empty()) out.emplace_back(start, end);
    return out;
  }
};

} // namespace

std::string expand(const std::string& text, const MacroTable& table, const std::string& file_id) {
  std::ostringstream os;
  for (const LogicalLine& l : merge_continuations(physical_lines_from_text(file_id, text))) {
    if (l.text.empty()) {
      if (l.trailing_comment) os << *l.trailing_comment;
      os << "\n";
      continue;
    }
    std::string payload = l.text;
    std::string prefix;
    if (is_sentinel_line(l.text)) {
      size_t b = l.text.find("!$");
      size_t sp = l.text.find_first_of(" \t", b);
      prefix = l.text.substr(0, sp == std::string::npos ? l.text.size() : sp);
      payload = sp == std::string::npos ? "" : l.text.substr(sp + 1);
    }
    LineExpander ex{table, l.loc()};
    std::vector<Token> toks = tokenize(payload, l.loc());
    if (!toks.empty() && toks.back().kind == Token::Kind::End) toks.pop_back();
    std::string rebuilt = join_tokens(ex.run(toks, 0, toks.size()));
    if (!prefix.empty())
      os << prefix << (rebuilt.empty() ? "" : " ") << rebuilt;
    else
      os << rebuilt;
    os << "\n";
  }
  return os.str();
}

namespace {

void wrap_expr(ast::Expr& e, const WrapPlan& plan, int& count) {
  for (ast::ExprPtr& a : e.args) wrap_expr(*a, plan, count);

  auto it = e.kind == ast::Expr::Kind::Ref || e.kind == ast::Expr::Kind::Var
                ? plan.find(to_lower(e.text))
                : plan.end();
  if (it == plan.end()) return;
  const WrapEntry& entry = it->second;

  if (e.kind == ast::Expr::Kind::Var && entry.ext_iterators.empty()) return;

  // Already wrapped: a single argument that is a call of the access macro.
  if (e.kind == ast::Expr::Kind::Ref && e.args.size() == 1 &&
      e.args[0]->kind == ast::Expr::Kind::Ref && same_ident(e.args[0]->text, entry.acc_macro))
    return;

  std::vector<ast::ExprPtr> macro_args;
  for (const std::string& ext : entry.ext_iterators) macro_args.push_back(ast::make_var(ext));
  for (ast::ExprPtr& a : e.args) macro_args.push_back(std::move(a));
  e.args.clear();
  e.args.push_back(ast::make_ref(entry.acc_macro, std::move(macro_args)));
  e.kind = ast::Expr::Kind::Ref;
  ++count;
}

} // namespace

int wrap_accesses(std::vector<ast::StmtPtr>& body, const WrapPlan& plan) {
  int count = 0;
  ast::walk_stmts(body, [&](ast::Stmt& s) {
    int before = count;
    auto visit = [&](ast::ExprPtr& e) {
      if (e) wrap_expr(*e, plan, count);
    };
    visit(s.lhs);
    visit(s.rhs);
    visit(s.lower);
    visit(s.upper);
    for (ast::ExprPtr& a : s.args) visit(a);
    for (ast::IfArm& arm : s.arms) visit(arm.cond);
    if (count != before) s.source_text.clear();
  });
  return count;
}

std::string wrap_dim_list(const std::string& dom_macro, const std::vector<std::string>& ext_sizes,
                          const ast::VarDecl& decl) {
  std::string out = dom_macro + "(";
  bool first = true;
  for (const std::string& s : ext_sizes) {
    if (!first) out += ",";
    first = false;
    out += s;
  }
  for (const ast::Dim& d : decl.dims) {
    if (!first) out += ",";
    first = false;
    if (d.lower) out += ast::print_expr(*d.lower) + ":";
    out += ast::print_expr(*d.upper);
  }
  return out + ")";
}

} // namespace hft::macro
