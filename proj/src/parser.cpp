#include "hft/parser.hpp"

#include <set>

#include "hft/tokenize.hpp"

namespace hft {

using namespace ast;

namespace {

class Cursor {
public:
  Cursor(std::vector<Token> tokens, SourceLoc loc) : toks_(std::move(tokens)), loc_(loc) {}

  const Token& peek(int ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& next() {
    const Token& t = peek();
    if (t.kind != Token::Kind::End) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Token::Kind::End; }

  bool is_sym(const char* s, int ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Sym && t.text == s;
  }
  bool is_kw(const char* word, int ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Token::Kind::Ident && same_ident(t.text, word);
  }
  bool accept_sym(const char* s) {
    if (!is_sym(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(const char* word) {
    if (!is_kw(word)) return false;
    ++pos_;
    return true;
  }
  void expect_sym(const char* s) {
    if (!accept_sym(s)) fail(ErrKind::Parse, std::string("expected '") + s + "'", loc_);
  }
  std::string expect_ident(const char* what) {
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident)
      fail(ErrKind::Parse, std::string("expected ") + what + ", got '" + t.text + "'", loc_);
    ++pos_;
    return t.text;
  }
  void expect_end(const char* what) {
    if (!at_end())
      fail(ErrKind::Parse,
           std::string("unexpected trailing text after ") + what + ": '" + peek().text + "'",
           loc_);
  }
  const SourceLoc& loc() const { return loc_; }

private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  SourceLoc loc_;
};

double real_literal_value(const std::string& text) {
  std::string num = text;
  size_t kind = num.find('_');
  if (kind != std::string::npos) num = num.substr(0, kind);
  for (char& c : num)
    if (c == 'd' || c == 'D') c = 'e';
  return std::stod(num);
}

class ExprParser {
public:
  explicit ExprParser(Cursor& c) : c_(c) {}

  ExprPtr parse() { return parse_or(); }

private:
  Cursor& c_;

  ExprPtr node(Expr::Kind k) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->loc = c_.loc();
    return e;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (c_.peek().kind == Token::Kind::DotOp && same_ident(c_.peek().text, ".or.")) {
      std::string text = c_.next().text;
      ExprPtr e = make_bin(BinOp::Or, std::move(lhs), parse_and());
      e->text = text;
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_not();
    while (c_.peek().kind == Token::Kind::DotOp && same_ident(c_.peek().text, ".and.")) {
      std::string text = c_.next().text;
      ExprPtr e = make_bin(BinOp::And, std::move(lhs), parse_not());
      e->text = text;
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_not() {
    if (c_.peek().kind == Token::Kind::DotOp && same_ident(c_.peek().text, ".not.")) {
      std::string text = c_.next().text;
      ExprPtr e = node(Expr::Kind::Un);
      e->un = UnOp::Not;
      e->text = text;
      e->args.push_back(parse_not());
      return e;
    }
    return parse_compare();
  }

  ExprPtr parse_compare() {
    ExprPtr lhs = parse_additive();
    const Token& t = c_.peek();
    BinOp op{};
    bool matched = true;
    if (t.kind == Token::Kind::DotOp) {
      if (same_ident(t.text, ".gt."))
        op = BinOp::Gt;
      else if (same_ident(t.text, ".lt."))
        op = BinOp::Lt;
      else if (same_ident(t.text, ".ge."))
        op = BinOp::Ge;
      else if (same_ident(t.text, ".le."))
        op = BinOp::Le;
      else if (same_ident(t.text, ".eq."))
        op = BinOp::Eq;
      else if (same_ident(t.text, ".ne."))
        op = BinOp::Ne;
      else
        matched = false;
    } else if (t.kind == Token::Kind::Sym) {
      if (t.text == ">")
        op = BinOp::Gt;
      else if (t.text == "<")
        op = BinOp::Lt;
      else if (t.text == ">=")
        op = BinOp::Ge;
      else if (t.text == "<=")
        op = BinOp::Le;
      else if (t.text == "==")
        op = BinOp::Eq;
      else if (t.text == "/=")
        op = BinOp::Ne;
      else
        matched = false;
    } else {
      matched = false;
    }
    if (!matched) return lhs;
    std::string text = c_.next().text;
    ExprPtr e = make_bin(op, std::move(lhs), parse_additive());
    e->text = text;
    return e;
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_term();
    while (c_.is_sym("+") || c_.is_sym("-")) {
      BinOp op = c_.peek().text == "+" ? BinOp::Add : BinOp::Sub;
      c_.next();
      lhs = make_bin(op, std::move(lhs), parse_term());
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    while (c_.is_sym("*") || c_.is_sym("/")) {
      BinOp op = c_.peek().text == "*" ? BinOp::Mul : BinOp::Div;
      c_.next();
      lhs = make_bin(op, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (c_.accept_sym("-")) {
      ExprPtr e = node(Expr::Kind::Un);
      e->un = UnOp::Neg;
      e->text = "-";
      e->args.push_back(parse_power());
      return e;
    }
    c_.accept_sym("+");
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_primary();
    if (c_.accept_sym("**"))
      return make_bin(BinOp::Pow, std::move(base), parse_unary()); // right associative
    return base;
  }

  ExprPtr parse_primary() {
    const Token& t = c_.peek();
    switch (t.kind) {
      case Token::Kind::IntLit: {
        ExprPtr e = node(Expr::Kind::IntLit);
        e->text = c_.next().text;
        e->int_value = std::stoll(e->text);
        return e;
      }
      case Token::Kind::RealLit: {
        ExprPtr e = node(Expr::Kind::RealLit);
        e->text = c_.next().text;
        e->real_value = real_literal_value(e->text);
        return e;
      }
      case Token::Kind::LogicalLit: {
        ExprPtr e = node(Expr::Kind::LogicalLit);
        e->text = c_.next().text;
        e->bool_value = same_ident(e->text, ".true.");
        return e;
      }
      case Token::Kind::Ident: {
        std::string name = c_.next().text;
        ExprPtr e;
        if (c_.accept_sym("(")) {
          std::vector<ExprPtr> args;
          if (!c_.is_sym(")")) {
            do {
              args.push_back(parse());
            } while (c_.accept_sym(","));
          }
          c_.expect_sym(")");
          e = make_ref(name, std::move(args));
        } else {
          e = make_var(name);
        }
        e->loc = c_.loc();
        while (c_.accept_sym("%")) {
          ExprPtr comp = node(Expr::Kind::Component);
          comp->text = c_.expect_ident("component name");
          comp->args.push_back(std::move(e));
          e = std::move(comp);
        }
        return e;
      }
      case Token::Kind::Sym:
        if (t.text == "(") {
          c_.next();
          ExprPtr e = parse();
          c_.expect_sym(")");
          return e;
        }
        break;
      default:
        break;
    }
    fail(ErrKind::Parse, "unexpected token '" + t.text + "' in expression", c_.loc());
  }
};

ExprPtr parse_expression(Cursor& c) { return ExprParser(c).parse(); }

Dim parse_dim(Cursor& c) {
  Dim d;
  ExprPtr first = parse_expression(c);
  if (c.accept_sym(":")) {
    d.lower = std::move(first);
    d.upper = parse_expression(c);
  } else {
    d.upper = std::move(first);
  }
  return d;
}

bool starts_declaration(const Cursor& c) {
  return c.is_kw("real") || c.is_kw("integer") || c.is_kw("logical") ||
         (c.is_kw("type") && c.is_sym("(", 1));
}

std::vector<VarDecl> parse_declaration(Cursor& c, SourceLoc loc) {
  std::vector<VarDecl> out;
  BaseType type;
  if (c.accept_kw("real")) {
    c.expect_sym("(");
    std::string kind = c.expect_ident("real kind");
    if (!same_ident(kind, "r_size"))
      fail(ErrKind::Parse, "unsupported real kind '" + kind + "' (dialect uses real(r_size))", loc);
    c.expect_sym(")");
    type = BaseType::Real;
  } else if (c.accept_kw("integer")) {
    c.expect_sym("(");
    const Token& k = c.next();
    if (k.text != "4")
      fail(ErrKind::Parse, "unsupported integer kind '" + k.text + "' (dialect uses integer(4))",
           loc);
    c.expect_sym(")");
    type = BaseType::Integer;
  } else if (c.accept_kw("logical")) {
    type = BaseType::Logical;
  } else if (c.accept_kw("type")) {
    c.expect_sym("(");
    std::string name = c.expect_ident("type name");
    if (!same_ident(name, "dim3"))
      fail(ErrKind::Parse, "unsupported derived type '" + name + "'", loc);
    c.expect_sym(")");
    type = BaseType::Dim3;
  } else {
    fail(ErrKind::Parse, "expected declaration", loc);
  }

  VarDecl proto;
  proto.type = type;
  proto.loc = loc;
  while (c.accept_sym(",")) {
    if (c.accept_kw("parameter")) {
      proto.is_parameter = true;
    } else if (c.accept_kw("device")) {
      proto.is_device = true;
    } else if (c.accept_kw("value")) {
      proto.is_value = true;
    } else if (c.accept_kw("intent")) {
      c.expect_sym("(");
      std::string mode = c.expect_ident("intent mode");
      if (same_ident(mode, "in"))
        proto.intent = Intent::In;
      else if (same_ident(mode, "out"))
        proto.intent = Intent::Out;
      else if (same_ident(mode, "inout"))
        proto.intent = Intent::InOut;
      else
        fail(ErrKind::Parse, "unknown intent '" + mode + "'", loc);
      c.expect_sym(")");
    } else {
      fail(ErrKind::Parse, "unknown declaration attribute '" + c.peek().text + "'", loc);
    }
  }
  c.expect_sym("::");

  do {
    VarDecl d = proto.clone();
    d.name = c.expect_ident("variable name");
    if (c.accept_sym("(")) {
      do {
        d.dims.push_back(parse_dim(c));
      } while (c.accept_sym(","));
      c.expect_sym(")");
    }
    if (c.accept_sym("=")) {
      if (!d.is_parameter)
        fail(ErrKind::Parse, "initializer requires the parameter attribute", loc);
      d.init = parse_expression(c);
    } else if (d.is_parameter) {
      fail(ErrKind::Parse, "parameter '" + d.name + "' needs an initializer", loc);
    }
    out.push_back(std::move(d));
  } while (c.accept_sym(","));
  c.expect_end("declaration");
  return out;
}

class UnitParser {
public:
  UnitParser(const std::vector<LogicalLine>& lines, std::string file)
      : lines_(lines), file_(std::move(file)) {}

  Unit run() {
    Unit unit;
    unit.file = file_;
    while (!eof()) {
      const LogicalLine& l = current();
      if (l.text.empty()) {
        advance();
        continue;
      }
      Cursor c = cursor_for(l);
      if (c.is_kw("module")) {
        unit.modules.push_back(parse_module());
      } else if (c.is_kw("subroutine") || (c.is_kw("attributes") && c.is_sym("(", 1))) {
        unit.bare_routines.push_back(parse_routine());
      } else {
        fail(ErrKind::Parse, "expected module or subroutine, got '" + l.text + "'", l.loc());
      }
    }
    return unit;
  }

private:
  const std::vector<LogicalLine>& lines_;
  std::string file_;
  size_t pos_ = 0;

  bool eof() const { return pos_ >= lines_.size(); }
  const LogicalLine& current() const { return lines_[pos_]; }
  void advance() { ++pos_; }

  Cursor cursor_for(const LogicalLine& l) const {
    return Cursor(tokenize(l.text, l.loc()), l.loc());
  }

  const LogicalLine& require_line(const std::string& context) {
    while (!eof() && current().text.empty()) advance();
    if (eof())
      fail(ErrKind::Parse, "unexpected end of file in " + context,
           {file_, lines_.empty() ? 0 : lines_.back().loc().line});
    return current();
  }

  ModuleDecl parse_module() {
    const LogicalLine& head = current();
    Cursor c = cursor_for(head);
    c.accept_kw("module");
    ModuleDecl mod;
    mod.loc = head.loc();
    mod.name = c.expect_ident("module name");
    c.expect_end("module statement");
    advance();

    bool in_contains = false;
    while (true) {
      const LogicalLine& l = require_line("module " + mod.name);
      Cursor lc = cursor_for(l);
      if (lc.accept_kw("end")) {
        if (lc.accept_kw("module")) {
          if (lc.peek().kind == Token::Kind::Ident) lc.next();
          lc.expect_end("end module");
          advance();
          return mod;
        }
        fail(ErrKind::Parse, "mismatched 'end' inside module '" + mod.name + "'", l.loc());
      }
      if (lc.is_kw("contains")) {
        in_contains = true;
        advance();
        continue;
      }
      if (!in_contains) {
        if (lc.is_kw("implicit")) {
          advance();
          continue;
        }
        Cursor dc = cursor_for(l);
        if (starts_declaration(dc)) {
          for (VarDecl& d : parse_declaration(dc, l.loc())) mod.vars.push_back(std::move(d));
          advance();
          continue;
        }
        if (is_domain_dependant_start(l.text))
          fail(ErrKind::Parse, "@domainDependant is only valid inside a subroutine", l.loc());
        fail(ErrKind::Parse, "unexpected statement in module specification part: '" + l.text + "'",
             l.loc());
      }
      if (lc.is_kw("subroutine") || (lc.is_kw("attributes") && lc.is_sym("(", 1))) {
        mod.routines.push_back(parse_routine());
        continue;
      }
      fail(ErrKind::Parse, "expected subroutine after 'contains', got '" + l.text + "'", l.loc());
    }
  }

  RoutineDecl parse_routine() {
    const LogicalLine& head = require_line("subroutine");
    Cursor c = cursor_for(head);
    RoutineDecl r;
    r.loc = head.loc();
    if (c.accept_kw("attributes")) {
      c.expect_sym("(");
      std::string a = c.expect_ident("routine attribute");
      if (same_ident(a, "global"))
        r.attr = RoutineAttr::Global;
      else if (same_ident(a, "device"))
        r.attr = RoutineAttr::Device;
      else
        fail(ErrKind::Parse, "unknown routine attribute '" + a + "'", head.loc());
      c.expect_sym(")");
    }
    if (!c.accept_kw("subroutine"))
      fail(ErrKind::Parse, "expected 'subroutine'", head.loc());
    r.name = c.expect_ident("subroutine name");
    if (c.accept_sym("(")) {
      if (!c.is_sym(")")) {
        do {
          r.dummy_args.push_back(c.expect_ident("dummy argument"));
        } while (c.accept_sym(","));
      }
      c.expect_sym(")");
    }
    c.expect_end("subroutine statement");
    advance();

    bool seen_executable = false;
    while (true) {
      const LogicalLine& l = require_line("subroutine " + r.name);
      Cursor lc = cursor_for(l);

      if (lc.accept_kw("end")) {
        if (lc.accept_kw("subroutine")) {
          if (lc.peek().kind == Token::Kind::Ident) lc.next();
          lc.expect_end("end subroutine");
          advance();
          finish_routine(r);
          return r;
        }
        fail(ErrKind::Parse, "mismatched 'end' inside subroutine '" + r.name + "'", l.loc());
      }

      if (!seen_executable) {
        if (lc.is_kw("use")) {
          r.imports.push_back(parse_use(l));
          advance();
          continue;
        }
        if (lc.is_kw("implicit")) {
          advance();
          continue;
        }
        Cursor dc = cursor_for(l);
        if (starts_declaration(dc)) {
          for (VarDecl& d : parse_declaration(dc, l.loc())) r.decls.push_back(std::move(d));
          advance();
          continue;
        }
      } else {
        Cursor dc = cursor_for(l);
        if (lc.is_kw("use") || starts_declaration(dc))
          fail(ErrKind::Parse, "declaration after executable statement", l.loc());
      }

      if (is_domain_dependant_start(l.text)) {
        r.dd_specs.push_back(parse_dd_block());
        continue;
      }

      seen_executable = true;
      r.body.push_back(parse_stmt("subroutine " + r.name));
    }
  }

  void finish_routine(const RoutineDecl& r) {
    std::set<std::string> seen;
    for (const std::string& a : r.dummy_args) {
      if (!seen.insert(to_lower(a)).second)
        fail(ErrKind::Parse, "duplicate dummy argument '" + a + "'", r.loc);
      if (!r.find_decl(a))
        fail(ErrKind::Parse, "dummy argument '" + a + "' has no declaration", r.loc);
    }
    std::set<std::string> names;
    for (const VarDecl& d : r.decls)
      if (!names.insert(to_lower(d.name)).second)
        fail(ErrKind::Parse, "duplicate declaration of '" + d.name + "'", d.loc);
  }

  UseImport parse_use(const LogicalLine& l) {
    Cursor c = cursor_for(l);
    c.accept_kw("use");
    UseImport u;
    u.loc = l.loc();
    u.module = c.expect_ident("module name");
    if (!c.accept_sym(","))
      fail(ErrKind::Parse, "bare 'use' is not allowed; write use " + u.module + ", only : ...",
           l.loc());
    if (!c.accept_kw("only"))
      fail(ErrKind::Parse, "expected 'only :' in use statement", l.loc());
    c.expect_sym(":");
    do {
      u.names.push_back(c.expect_ident("imported name"));
    } while (c.accept_sym(","));
    c.expect_end("use statement");
    return u;
  }

  DomainDependantSpec parse_dd_block() {
    std::vector<LogicalLine> block;
    block.push_back(current());
    advance();
    while (true) {
      const LogicalLine& l = require_line("@domainDependant block");
      if (is_domain_dependant_end(l.text)) {
        advance();
        break;
      }
      block.push_back(l);
      advance();
    }
    return parse_domain_dependant(block);
  }

  StmtPtr parse_stmt(const std::string& context) {
    const LogicalLine& l = require_line(context);
    Cursor c = cursor_for(l);
    auto s = std::make_unique<Stmt>();
    s->loc = l.loc();
    s->source_text = collapse_whitespace(l.text);

    if (is_sentinel_line(l.text)) {
      s->kind = Stmt::Kind::Directive;
      advance();
      return s;
    }

    if (is_parallel_region_start(l.text)) {
      s->kind = Stmt::Kind::Region;
      s->region = parse_parallel_region_header(l);
      advance();
      while (true) {
        const LogicalLine& b = require_line("@parallelRegion");
        if (is_parallel_region_end(b.text)) {
          advance();
          break;
        }
        if (is_parallel_region_start(b.text))
          fail(ErrKind::Parse, "parallel regions cannot be nested lexically", b.loc());
        s->body.push_back(parse_stmt("@parallelRegion"));
      }
      return s;
    }
    if (is_parallel_region_end(l.text))
      fail(ErrKind::Parse, "@end parallelRegion without an open region", l.loc());
    if (is_domain_dependant_end(l.text))
      fail(ErrKind::Parse, "@end domainDependant without an open block", l.loc());

    std::string label;
    if (c.peek().kind == Token::Kind::Ident && c.is_sym(":", 1) && c.is_kw("do", 2)) {
      label = c.next().text;
      c.next(); // ':'
    }

    if (c.is_kw("do")) {
      c.accept_kw("do");
      s->kind = Stmt::Kind::Do;
      s->label = label;
      s->do_var = c.expect_ident("loop variable");
      c.expect_sym("=");
      s->lower = parse_expression(c);
      c.expect_sym(",");
      s->upper = parse_expression(c);
      if (c.accept_sym(","))
        fail(ErrKind::Parse, "loop strides are not supported in this dialect", l.loc());
      c.expect_end("do statement");
      advance();
      while (true) {
        const LogicalLine& b =
            require_line("do loop starting at line " + std::to_string(s->loc.line));
        Cursor bc = cursor_for(b);
        if (bc.is_kw("end") && bc.is_kw("do", 1)) {
          bc.accept_kw("end");
          bc.accept_kw("do");
          std::string end_label;
          if (bc.peek().kind == Token::Kind::Ident) end_label = bc.next().text;
          bc.expect_end("end do");
          if (!end_label.empty() && !same_ident(end_label, s->label))
            fail(ErrKind::Parse, "'end do " + end_label + "' does not match loop label", b.loc());
          advance();
          break;
        }
        s->body.push_back(parse_stmt("do loop"));
      }
      return s;
    }

    if (c.is_kw("if")) {
      c.accept_kw("if");
      s->kind = Stmt::Kind::If;
      c.expect_sym("(");
      IfArm arm;
      arm.cond = parse_expression(c);
      c.expect_sym(")");
      if (!c.accept_kw("then"))
        fail(ErrKind::Parse, "only block 'if (...) then' is supported", l.loc());
      c.expect_end("if statement");
      arm.head_text = collapse_whitespace(l.text);
      advance();
      bool in_else = false;
      while (true) {
        const LogicalLine& b = require_line("if block");
        Cursor bc = cursor_for(b);
        if (bc.is_kw("end") && bc.is_kw("if", 1)) {
          bc.accept_kw("end");
          bc.accept_kw("if");
          bc.expect_end("end if");
          advance();
          s->arms.push_back(std::move(arm));
          break;
        }
        if (bc.is_kw("else")) {
          bc.accept_kw("else");
          s->arms.push_back(std::move(arm));
          arm = IfArm{};
          arm.head_text = collapse_whitespace(b.text);
          if (bc.accept_kw("if")) {
            if (in_else) fail(ErrKind::Parse, "'else if' after final 'else'", b.loc());
            bc.expect_sym("(");
            arm.cond = parse_expression(bc);
            bc.expect_sym(")");
            if (!bc.accept_kw("then"))
              fail(ErrKind::Parse, "expected 'then' after else if (...)", b.loc());
            bc.expect_end("else if");
          } else {
            bc.expect_end("else");
            if (in_else) fail(ErrKind::Parse, "duplicate 'else'", b.loc());
            in_else = true;
          }
          advance();
          continue;
        }
        arm.body.push_back(parse_stmt("if block"));
      }
      return s;
    }

    if (c.is_kw("call")) {
      c.accept_kw("call");
      s->kind = Stmt::Kind::Call;
      s->callee = c.expect_ident("subroutine name");
      if (c.accept_sym("<<<")) {
        s->launch_grid = parse_expression(c);
        c.expect_sym(",");
        s->launch_block = parse_expression(c);
        c.expect_sym(">>>");
      }
      if (c.accept_sym("(")) {
        if (!c.is_sym(")")) {
          do {
            s->args.push_back(parse_expression(c));
          } while (c.accept_sym(","));
        }
        c.expect_sym(")");
      }
      c.expect_end("call statement");
      advance();
      return s;
    }

    if (c.is_kw("return")) {
      c.accept_kw("return");
      c.expect_end("return");
      s->kind = Stmt::Kind::Return;
      advance();
      return s;
    }

    if (c.is_kw("stop")) {
      c.accept_kw("stop");
      s->kind = Stmt::Kind::Stop;
      if (c.peek().kind == Token::Kind::IntLit) s->stop_code = std::stoi(c.next().text);
      c.expect_end("stop");
      advance();
      return s;
    }

    if (c.is_kw("end")) fail(ErrKind::Parse, "mismatched 'end': '" + l.text + "'", l.loc());

    {
      Cursor ac = cursor_for(l);
      ExprPtr lhs;
      bool ok = true;
      try {
        lhs = ExprParser(ac).parse();
      } catch (const Error&) {
        ok = false;
      }
      if (ok && ac.is_sym("=") &&
          (lhs->kind == Expr::Kind::Var || lhs->kind == Expr::Kind::Ref ||
           lhs->kind == Expr::Kind::Component)) {
        ac.accept_sym("=");
        s->kind = Stmt::Kind::Assign;
        s->lhs = std::move(lhs);
        s->rhs = parse_expression(ac);
        ac.expect_end("assignment");
        advance();
        return s;
      }
    }

    // Balanced leftovers with no possible array reference pass through as
    // opaque text; anything that could hide an array access fails loudly.
    {
      Cursor oc = cursor_for(l);
      while (!oc.at_end()) {
        if (oc.peek().kind == Token::Kind::Ident && oc.is_sym("(", 1))
          fail(ErrKind::Parse,
               "unsupported statement (contains a possible array reference): '" + l.text + "'",
               l.loc());
        oc.next();
      }
    }
    s->kind = Stmt::Kind::Opaque;
    advance();
    return s;
  }
};

} // namespace

ast::Unit parse_unit(const std::vector<LogicalLine>& lines, const std::string& file) {
  return UnitParser(lines, file).run();
}

ast::Unit parse_source(const std::string& file_id, const std::string& text) {
  return parse_unit(merge_continuations(physical_lines_from_text(file_id, text)), file_id);
}

ast::Unit parse_file(const std::string& path) {
  return parse_unit(merge_continuations(read_physical_lines(path)), path);
}

ast::ExprPtr parse_expr_text(const std::string& text, SourceLoc loc) {
  Cursor c(tokenize(text, loc), loc);
  ast::ExprPtr e = ExprParser(c).parse();
  c.expect_end("expression");
  return e;
}

} // namespace hft
