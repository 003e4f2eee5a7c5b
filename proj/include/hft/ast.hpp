#ifndef HFT_AST_HPP
#define HFT_AST_HPP

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hft/directives.hpp"

namespace hft::ast {

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class BinOp { Add, Sub, Mul, Div, Pow, Lt, Gt, Le, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };

bool is_comparison(BinOp op);

struct Expr {
  enum class Kind {
    IntLit,
    RealLit,
    LogicalLit,
    Var,
    // name(args): an array access or a function call; which one is decided
    // against declarations at analysis/interpretation time.
    Ref,
    Bin,
    Un,
    Component, // base%name (blockidx%x, thread index parts)
  };

  Kind kind;
  std::string text;  // literal text kept verbatim, or the referenced name
  long long int_value = 0;
  double real_value = 0.0;
  bool bool_value = false;
  BinOp bin{};
  UnOp un{};
  std::vector<ExprPtr> args; // Ref args; Bin [l, r]; Un [e]; Component [base]
  SourceLoc loc;

  ExprPtr clone() const;
};

ExprPtr make_int(long long v);
ExprPtr make_real_text(const std::string& text, double v);
ExprPtr make_var(const std::string& name);
ExprPtr make_ref(const std::string& name, std::vector<ExprPtr> args);
ExprPtr make_bin(BinOp op, ExprPtr l, ExprPtr r);

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct IfArm {
  ExprPtr cond; // null = else arm
  std::vector<StmtPtr> body;
  std::string head_text; // verbatim "if (...) then" / "else if (...) then" / "else"
};

struct Stmt {
  enum class Kind {
    Assign,
    Do,
    If,
    Call,
    Return,
    Stop,
    Region,    // @parallelRegion ... @end parallelRegion
    Directive, // sentinel line (!$OMP / !$acc ...), kept as an annotation
    Opaque,    // balanced but unparsed text without array references
  };

  Kind kind;
  SourceLoc loc;
  // When set, emission reproduces this logical source text verbatim;
  // rewrites clear it so the printer regenerates from the tree.
  std::string source_text;

  // Assign
  ExprPtr lhs, rhs;
  // Do
  std::string do_var;
  std::string label; // construct label (outerParallelLoop0: do ...)
  ExprPtr lower, upper;
  std::vector<StmtPtr> body; // Do and Region bodies
  // If
  std::vector<IfArm> arms;
  // Call
  std::string callee;
  std::vector<ExprPtr> args;
  ExprPtr launch_grid, launch_block; // chevron launch
  // Stop
  int stop_code = 0;
  // Region
  ParallelRegionSpec region;
  // Directive / Opaque payload lives in source_text.

  StmtPtr clone() const;
};

enum class BaseType { Real, Integer, Logical, Dim3 };
enum class Intent { None, In, Out, InOut };

const char* base_type_text(BaseType t); // "real(r_size)" etc.

struct Dim {
  ExprPtr lower; // null = 1
  ExprPtr upper;

  Dim clone() const;
};

struct VarDecl {
  std::string name;
  BaseType type = BaseType::Real;
  std::vector<Dim> dims; // empty = scalar
  bool is_parameter = false;
  bool is_device = false;
  bool is_value = false;
  Intent intent = Intent::None;
  ExprPtr init; // parameter initializer
  SourceLoc loc;

  bool is_scalar() const { return dims.empty(); }
  VarDecl clone() const;
};

struct UseImport {
  std::string module;
  std::vector<std::string> names; // `only:` list, required
  SourceLoc loc;
};

enum class RoutineAttr { None, Global, Device };

struct RoutineDecl {
  std::string name;
  RoutineAttr attr = RoutineAttr::None;
  std::vector<std::string> dummy_args;
  std::vector<UseImport> imports;
  std::vector<VarDecl> decls;
  std::vector<DomainDependantSpec> dd_specs;
  std::vector<StmtPtr> body;
  SourceLoc loc;

  const VarDecl* find_decl(const std::string& name) const;
  Intent dummy_intent(const std::string& name) const;
  bool is_dummy(const std::string& name) const;
};

struct ModuleDecl {
  std::string name;
  std::vector<VarDecl> vars;
  std::vector<RoutineDecl> routines;
  SourceLoc loc;
};

RoutineDecl clone_routine(const RoutineDecl& r);

struct Unit {
  std::string file;
  std::vector<ModuleDecl> modules;
  std::vector<RoutineDecl> bare_routines;
};

// --- printing -------------------------------------------------------------

std::string print_expr(const Expr& e);
std::string print_stmt_line(const Stmt& s); // head line only, from the tree
std::string print_dims(const std::vector<Dim>& dims);
std::string print_decl(const VarDecl& d);

// Full-unit emission; statements with intact source_text are reproduced
// verbatim, everything else comes from the canonical printer.
std::string emit_unit(const Unit& unit);

// Canonical text ignoring stored source_text: the structural fingerprint
// used for round-trip comparisons.
std::string canonical_unit(const Unit& unit);

// --- traversal helpers ------------------------------------------------------

void walk_exprs(Stmt& s, const std::function<void(Expr&)>& fn);
void walk_exprs(const Stmt& s, const std::function<void(const Expr&)>& fn);
void walk_stmts(std::vector<StmtPtr>& body, const std::function<void(Stmt&)>& fn);
void walk_stmts(const std::vector<StmtPtr>& body, const std::function<void(const Stmt&)>& fn);

} // namespace hft::ast

#endif
