#include "hft/ast.hpp"

#include <sstream>

#include "hft/tokenize.hpp"

namespace hft::ast {

bool is_comparison(BinOp op) {
  switch (op) {
    case BinOp::Lt:
    case BinOp::Gt:
    case BinOp::Le:
    case BinOp::Ge:
    case BinOp::Eq:
    case BinOp::Ne:
      return true;
    default:
      return false;
  }
}

ExprPtr Expr::clone() const {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->text = text;
  e->int_value = int_value;
  e->real_value = real_value;
  e->bool_value = bool_value;
  e->bin = bin;
  e->un = un;
  e->loc = loc;
  for (const ExprPtr& a : args) e->args.push_back(a->clone());
  return e;
}

ExprPtr make_int(long long v) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::IntLit;
  e->int_value = v;
  e->text = std::to_string(v);
  return e;
}

ExprPtr make_real_text(const std::string& text, double v) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::RealLit;
  e->real_value = v;
  e->text = text;
  return e;
}

ExprPtr make_var(const std::string& name) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Var;
  e->text = name;
  return e;
}

ExprPtr make_ref(const std::string& name, std::vector<ExprPtr> args) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Ref;
  e->text = name;
  e->args = std::move(args);
  return e;
}

ExprPtr make_bin(BinOp op, ExprPtr l, ExprPtr r) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Bin;
  e->bin = op;
  switch (op) {
    case BinOp::Add: e->text = "+"; break;
    case BinOp::Sub: e->text = "-"; break;
    case BinOp::Mul: e->text = "*"; break;
    case BinOp::Div: e->text = "/"; break;
    case BinOp::Pow: e->text = "**"; break;
    case BinOp::Lt: e->text = "<"; break;
    case BinOp::Gt: e->text = ">"; break;
    case BinOp::Le: e->text = "<="; break;
    case BinOp::Ge: e->text = ">="; break;
    case BinOp::Eq: e->text = "=="; break;
    case BinOp::Ne: e->text = "/="; break;
    case BinOp::And: e->text = ".AND."; break;
    case BinOp::Or: e->text = ".OR."; break;
  }
  e->args.push_back(std::move(l));
  e->args.push_back(std::move(r));
  return e;
}

StmtPtr Stmt::clone() const {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->loc = loc;
  s->source_text = source_text;
  if (lhs) s->lhs = lhs->clone();
  if (rhs) s->rhs = rhs->clone();
  s->do_var = do_var;
  s->label = label;
  if (lower) s->lower = lower->clone();
  if (upper) s->upper = upper->clone();
  for (const StmtPtr& b : body) s->body.push_back(b->clone());
  for (const IfArm& arm : arms) {
    IfArm a;
    if (arm.cond) a.cond = arm.cond->clone();
    for (const StmtPtr& b : arm.body) a.body.push_back(b->clone());
    a.head_text = arm.head_text;
    s->arms.push_back(std::move(a));
  }
  s->callee = callee;
  for (const ExprPtr& a : args) s->args.push_back(a->clone());
  if (launch_grid) s->launch_grid = launch_grid->clone();
  if (launch_block) s->launch_block = launch_block->clone();
  s->stop_code = stop_code;
  s->region = region;
  return s;
}

Dim Dim::clone() const {
  Dim d;
  if (lower) d.lower = lower->clone();
  if (upper) d.upper = upper->clone();
  return d;
}

VarDecl VarDecl::clone() const {
  VarDecl v;
  v.name = name;
  v.type = type;
  for (const Dim& d : dims) v.dims.push_back(d.clone());
  v.is_parameter = is_parameter;
  v.is_device = is_device;
  v.is_value = is_value;
  v.intent = intent;
  if (init) v.init = init->clone();
  v.loc = loc;
  return v;
}

const VarDecl* RoutineDecl::find_decl(const std::string& n) const {
  for (const VarDecl& d : decls)
    if (same_ident(d.name, n)) return &d;
  return nullptr;
}

Intent RoutineDecl::dummy_intent(const std::string& n) const {
  const VarDecl* d = find_decl(n);
  return d ? d->intent : Intent::None;
}

bool RoutineDecl::is_dummy(const std::string& n) const {
  for (const std::string& a : dummy_args)
    if (same_ident(a, n)) return true;
  return false;
}

RoutineDecl clone_routine(const RoutineDecl& r) {
  RoutineDecl out;
  out.name = r.name;
  out.attr = r.attr;
  out.dummy_args = r.dummy_args;
  out.imports = r.imports;
  for (const VarDecl& d : r.decls) out.decls.push_back(d.clone());
  out.dd_specs = r.dd_specs;
  for (const StmtPtr& s : r.body) out.body.push_back(s->clone());
  out.loc = r.loc;
  return out;
}

const char* base_type_text(BaseType t) {
  switch (t) {
    case BaseType::Real: return "real(r_size)";
    case BaseType::Integer: return "integer(4)";
    case BaseType::Logical: return "logical";
    case BaseType::Dim3: return "type(dim3)";
  }
  return "?";
}

namespace {

int precedence(const Expr& e) {
  if (e.kind == Expr::Kind::Un) return e.un == UnOp::Not ? 3 : 7;
  if (e.kind != Expr::Kind::Bin) return 100;
  switch (e.bin) {
    case BinOp::Or: return 1;
    case BinOp::And: return 2;
    case BinOp::Lt:
    case BinOp::Gt:
    case BinOp::Le:
    case BinOp::Ge:
    case BinOp::Eq:
    case BinOp::Ne:
      return 4;
    case BinOp::Add:
    case BinOp::Sub:
      return 5;
    case BinOp::Mul:
    case BinOp::Div:
      return 6;
    case BinOp::Pow:
      return 8;
  }
  return 100;
}

void print_expr_into(const Expr& e, std::ostringstream& os) {
  switch (e.kind) {
    case Expr::Kind::IntLit:
    case Expr::Kind::RealLit:
    case Expr::Kind::LogicalLit:
    case Expr::Kind::Var:
      os << e.text;
      return;
    case Expr::Kind::Ref: {
      os << e.text << "(";
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) os << ",";
        print_expr_into(*e.args[i], os);
      }
      os << ")";
      return;
    }
    case Expr::Kind::Component: {
      print_expr_into(*e.args[0], os);
      os << "%" << e.text;
      return;
    }
    case Expr::Kind::Un: {
      const Expr& operand = *e.args[0];
      os << (e.un == UnOp::Neg ? "-" : ".NOT. ");
      bool parens = precedence(operand) < precedence(e);
      if (parens) os << "(";
      print_expr_into(operand, os);
      if (parens) os << ")";
      return;
    }
    case Expr::Kind::Bin: {
      const Expr& l = *e.args[0];
      const Expr& r = *e.args[1];
      int p = precedence(e);
      bool lp = precedence(l) < p || (e.bin == BinOp::Pow && precedence(l) == p);
      bool rp = precedence(r) < p ||
                (precedence(r) == p &&
                 (e.bin == BinOp::Sub || e.bin == BinOp::Div || is_comparison(e.bin)));
      if (lp) os << "(";
      print_expr_into(l, os);
      if (lp) os << ")";
      os << " " << e.text << " ";
      if (rp) os << "(";
      print_expr_into(r, os);
      if (rp) os << ")";
      return;
    }
  }
}

struct Printer {
  std::ostringstream os;
  bool use_source_text;
  int level = 0;

  void line(const std::string& text) {
    for (int i = 0; i < level; ++i) os << "  ";
    os << text << "\n";
  }

  void stmt_list(const std::vector<StmtPtr>& body) {
    for (const StmtPtr& s : body) stmt(*s);
  }

  void stmt(const Stmt& s) {
    if (use_source_text && !s.source_text.empty() && s.kind != Stmt::Kind::Do &&
        s.kind != Stmt::Kind::If && s.kind != Stmt::Kind::Region) {
      line(s.source_text);
      return;
    }
    switch (s.kind) {
      case Stmt::Kind::Assign:
        line(print_expr(*s.lhs) + " = " + print_expr(*s.rhs));
        return;
      case Stmt::Kind::Do: {
        std::string head = s.label.empty() ? "" : s.label + ": ";
        std::string text =
            head + "do " + s.do_var + " = " + print_expr(*s.lower) + ", " + print_expr(*s.upper);
        line(use_source_text && !s.source_text.empty() ? s.source_text : text);
        ++level;
        stmt_list(s.body);
        --level;
        line(s.label.empty() ? "end do" : "end do " + s.label);
        return;
      }
      case Stmt::Kind::If: {
        bool verbatim = use_source_text && !s.source_text.empty();
        for (size_t i = 0; i < s.arms.size(); ++i) {
          const IfArm& arm = s.arms[i];
          if (verbatim && !arm.head_text.empty())
            line(arm.head_text);
          else if (i == 0)
            line("if (" + print_expr(*arm.cond) + ") then");
          else if (arm.cond)
            line("else if (" + print_expr(*arm.cond) + ") then");
          else
            line("else");
          ++level;
          stmt_list(arm.body);
          --level;
        }
        line("end if");
        return;
      }
      case Stmt::Kind::Call: {
        std::string text = "call " + s.callee;
        if (s.launch_grid)
          text +=
              " <<< " + print_expr(*s.launch_grid) + ", " + print_expr(*s.launch_block) + " >>>";
        text += "(";
        for (size_t i = 0; i < s.args.size(); ++i)
          text += (i ? ", " : "") + print_expr(*s.args[i]);
        text += ")";
        line(text);
        return;
      }
      case Stmt::Kind::Return:
        line("return");
        return;
      case Stmt::Kind::Stop:
        line("stop " + std::to_string(s.stop_code));
        return;
      case Stmt::Kind::Region: {
        line(print_parallel_region_header(s.region));
        stmt_list(s.body);
        line("@end parallelRegion");
        return;
      }
      case Stmt::Kind::Directive:
      case Stmt::Kind::Opaque:
        line(s.source_text);
        return;
    }
  }

  void routine(const RoutineDecl& r) {
    std::string head;
    if (r.attr == RoutineAttr::Global) head = "attributes(global) ";
    if (r.attr == RoutineAttr::Device) head = "attributes(device) ";
    head += "subroutine " + r.name + "(";
    for (size_t i = 0; i < r.dummy_args.size(); ++i) head += (i ? ", " : "") + r.dummy_args[i];
    head += ")";
    line(head);
    ++level;
    for (const UseImport& u : r.imports) {
      std::string text = "use " + u.module;
      if (!u.names.empty()) {
        text += ", only : ";
        for (size_t i = 0; i < u.names.size(); ++i) text += (i ? ", " : "") + u.names[i];
      }
      line(text);
    }
    line("implicit none");
    for (const VarDecl& d : r.decls) line(print_decl(d));
    for (const DomainDependantSpec& spec : r.dd_specs) {
      std::istringstream ss(print_domain_dependant(spec));
      std::string l;
      while (std::getline(ss, l)) line(l);
    }
    stmt_list(r.body);
    --level;
    line("end subroutine");
  }

  void unit(const Unit& u) {
    bool first = true;
    for (const ModuleDecl& m : u.modules) {
      if (!first) os << "\n";
      first = false;
      line("module " + m.name);
      ++level;
      line("implicit none");
      for (const VarDecl& d : m.vars) line(print_decl(d));
      --level;
      if (!m.routines.empty()) {
        line("contains");
        for (const RoutineDecl& r : m.routines) {
          os << "\n";
          ++level;
          routine(r);
          --level;
        }
      }
      line("end module");
    }
    for (const RoutineDecl& r : u.bare_routines) {
      if (!first) os << "\n";
      first = false;
      routine(r);
    }
  }
};

} // namespace

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print_expr_into(e, os);
  return os.str();
}

std::string print_dims(const std::vector<Dim>& dims) {
  std::string out = "(";
  for (size_t i = 0; i < dims.size(); ++i) {
    if (i) out += ",";
    if (dims[i].lower) out += print_expr(*dims[i].lower) + ":";
    out += print_expr(*dims[i].upper);
  }
  return out + ")";
}

std::string print_decl(const VarDecl& d) {
  std::string out = base_type_text(d.type);
  if (d.is_device) out += ", device";
  if (d.is_value) out += ", value";
  if (d.is_parameter) out += ", parameter";
  switch (d.intent) {
    case Intent::In: out += ", intent(in)"; break;
    case Intent::Out: out += ", intent(out)"; break;
    case Intent::InOut: out += ", intent(inout)"; break;
    case Intent::None: break;
  }
  out += " :: " + d.name;
  if (!d.dims.empty()) out += print_dims(d.dims);
  if (d.init) out += " = " + print_expr(*d.init);
  return out;
}

std::string print_stmt_line(const Stmt& s) {
  Printer p{{}, false, 0};
  p.stmt(s);
  std::string text = p.os.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string emit_unit(const Unit& unit) {
  Printer p{{}, true, 0};
  p.unit(unit);
  return p.os.str();
}

std::string canonical_unit(const Unit& unit) {
  Printer p{{}, false, 0};
  p.unit(unit);
  return p.os.str();
}

namespace {

void walk_expr_tree(Expr& e, const std::function<void(Expr&)>& fn) {
  fn(e);
  for (ExprPtr& a : e.args) walk_expr_tree(*a, fn);
}

} // namespace

void walk_exprs(Stmt& s, const std::function<void(Expr&)>& fn) {
  auto visit = [&](ExprPtr& e) {
    if (e) walk_expr_tree(*e, fn);
  };
  visit(s.lhs);
  visit(s.rhs);
  visit(s.lower);
  visit(s.upper);
  visit(s.launch_grid);
  visit(s.launch_block);
  for (ExprPtr& a : s.args) visit(a);
  for (IfArm& arm : s.arms) {
    visit(arm.cond);
    for (StmtPtr& b : arm.body) walk_exprs(*b, fn);
  }
  for (StmtPtr& b : s.body) walk_exprs(*b, fn);
}

void walk_exprs(const Stmt& s, const std::function<void(const Expr&)>& fn) {
  walk_exprs(const_cast<Stmt&>(s), [&](Expr& e) { fn(e); });
}

void walk_stmts(std::vector<StmtPtr>& body, const std::function<void(Stmt&)>& fn) {
  for (StmtPtr& s : body) {
    fn(*s);
    walk_stmts(s->body, fn);
    for (IfArm& arm : s->arms) walk_stmts(arm.body, fn);
  }
}

void walk_stmts(const std::vector<StmtPtr>& body, const std::function<void(const Stmt&)>& fn) {
  walk_stmts(const_cast<std::vector<StmtPtr>&>(body), [&](Stmt& s) { fn(s); });
}

} // namespace hft::ast
