#include "hft/interp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "hft/analysis.hpp"
#include "hft/parser.hpp"
#include "hft/tokenize.hpp"

namespace hft::interp {

using ast::BaseType;
using ast::Expr;
using ast::Intent;
using ast::RoutineDecl;
using ast::Stmt;
using ast::VarDecl;

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

size_t ArrayValue::size() const {
  size_t n = 1;
  for (int d = 0; d < rank(); ++d) n *= static_cast<size_t>(extent(d));
  return n;
}

ScalarValue* MachineState::find_scalar(const std::string& module, const std::string& name) {
  auto mit = scalars.find(to_lower(module));
  if (mit == scalars.end()) return nullptr;
  auto it = mit->second.find(to_lower(name));
  return it == mit->second.end() ? nullptr : &it->second;
}

ObjectSlot* MachineState::find_slot(const std::string& module, const std::string& name) {
  auto mit = arrays.find(to_lower(module));
  if (mit == arrays.end()) return nullptr;
  auto it = mit->second.find(to_lower(name));
  return it == mit->second.end() ? nullptr : &it->second;
}

ObjectSlot* MachineState::find_slot_any(const std::string& name) {
  for (auto& [m, objs] : arrays) {
    auto it = objs.find(to_lower(name));
    if (it != objs.end()) return &it->second;
  }
  return nullptr;
}

ScalarValue* MachineState::find_scalar_any(const std::string& name) {
  for (auto& [m, objs] : scalars) {
    auto it = objs.find(to_lower(name));
    if (it != objs.end()) return &it->second;
  }
  return nullptr;
}

namespace {

[[noreturn]] void rt_fail(const std::string& msg, SourceLoc loc = {}) {
  fail(ErrKind::Runtime, msg, loc);
}
[[noreturn]] void res_fail(const std::string& msg, SourceLoc loc = {}) {
  fail(ErrKind::Residency, msg, loc);
}

struct Value {
  enum class Kind { Real, Int, Bool, Dim3 } kind = Kind::Real;
  double r = 0.0;
  long long i = 0;
  bool b = false;
  long long d3[3] = {1, 1, 1};

  static Value real(double v) { return {Kind::Real, v, 0, false, {1, 1, 1}}; }
  static Value integer(long long v) { return {Kind::Int, 0.0, v, false, {1, 1, 1}}; }
  static Value boolean(bool v) { return {Kind::Bool, 0.0, 0, v, {1, 1, 1}}; }

  double as_real(SourceLoc loc) const {
    if (kind == Kind::Real) return r;
    if (kind == Kind::Int) return static_cast<double>(i);
    rt_fail("expected a numeric value", loc);
  }
  long long as_int(SourceLoc loc) const {
    if (kind == Kind::Int) return i;
    if (kind == Kind::Real) return static_cast<long long>(r);
    rt_fail("expected an integer value", loc);
  }
  bool as_bool(SourceLoc loc) const {
    if (kind == Kind::Bool) return b;
    rt_fail("expected a logical value", loc);
  }
};

struct ThreadState {
  long long blockidx[3] = {1, 1, 1};
  long long blockdim[3] = {1, 1, 1};
  long long threadidx[3] = {1, 1, 1};
  long long griddim[3] = {1, 1, 1};
  long linear_id = 0;
};

struct LaunchTracker {
  // (buffer, flat index) -> first writing thread
  std::map<std::pair<const ArrayValue*, long long>, long> writes;
};

struct Ctx {
  bool device = false;
  ThreadState* thread = nullptr;
  LaunchTracker* launch = nullptr;
  const std::set<std::string>* acc_deviceptr = nullptr;
  std::map<std::string, ScalarValue>* privates = nullptr; // acc per-iteration scalars
};

struct ElementRef {
  std::shared_ptr<ArrayValue> buf;
  ObjectSlot* slot = nullptr;
  long long flat = 0;
  bool device_side = false;
  std::string name;
  SourceLoc loc;
};

struct ScalarBind {
  ScalarValue value;
  const VarDecl* decl = nullptr;
  // writeback target
  enum class Target { None, Scalar, Element } target = Target::None;
  ScalarValue* scalar = nullptr;
  ElementRef element;
};

struct ArrayBind {
  ObjectSlot* slot = nullptr;
  std::shared_ptr<ArrayValue> direct;
  bool dummy_device = false;
  std::vector<long long> lower, upper; // the dummy's declared view
};

struct Frame {
  const RoutineDecl* routine = nullptr;
  const ast::ModuleDecl* module = nullptr;
  std::map<std::string, ScalarValue> locals;
  std::map<std::string, std::shared_ptr<ArrayValue>> local_arrays;
  std::map<std::string, ScalarBind> scalar_binds;
  std::map<std::string, ArrayBind> array_binds;
};

struct ReturnSignal {};
struct StopSignal {
  int code;
};

bool is_builtin_index_name(const std::string& lname) {
  return lname == "blockidx" || lname == "blockdim" || lname == "threadidx" ||
         lname == "griddim";
}

double identity_for(const std::string& op) {
  if (op == "+") return 0.0;
  if (op == "*") return 1.0;
  fail(ErrKind::Runtime, "unsupported reduction operator '" + op + "'");
}

// --- directive payload parsing (generated sentinel lines) --------------------

struct OmpInfo {
  bool parallel_do = false;
  bool end = false;
  std::set<std::string> shared;
  std::vector<std::pair<std::string, std::string>> reductions; // (op, var)
};

std::string lstrip_copy(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  return b == std::string::npos ? "" : s.substr(b);
}

OmpInfo parse_omp(const std::string& raw) {
  OmpInfo info;
  std::string text = lstrip_copy(raw);
  std::string lower = to_lower(text);
  if (lower.rfind("!$omp", 0) != 0) return info;
  info.end = lower.find("end parallel do") != std::string::npos;
  info.parallel_do = !info.end && lower.find("parallel do") != std::string::npos;
  size_t shared = lower.find("shared(");
  if (shared != std::string::npos) {
    size_t close = text.find(')', shared);
    std::string inner = text.substr(shared + 7, close - shared - 7);
    std::string cur;
    for (char c : inner + ",") {
      if (c == ',') {
        std::string t = collapse_whitespace(cur);
        if (!t.empty()) info.shared.insert(to_lower(t));
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  size_t red = lower.find("reduction(");
  while (red != std::string::npos) {
    size_t close = text.find(')', red);
    std::string inner = text.substr(red + 10, close - red - 10);
    size_t colon = inner.find(':');
    if (colon != std::string::npos)
      info.reductions.emplace_back(collapse_whitespace(inner.substr(0, colon)),
                                   to_lower(collapse_whitespace(inner.substr(colon + 1))));
    red = lower.find("reduction(", close);
  }
  return info;
}

struct AccInfo {
  bool kernels = false;
  bool end_kernels = false;
  bool loop = false;
  bool independent = false;
  bool seq = false;
  std::set<std::string> deviceptr;
  std::vector<std::pair<std::string, std::string>> reductions;
};

AccInfo parse_acc(const std::string& raw) {
  AccInfo info;
  std::string text = lstrip_copy(raw);
  std::string lower = to_lower(text);
  if (lower.rfind("!$acc", 0) != 0) return info;
  info.end_kernels = lower.find("end kernels") != std::string::npos;
  info.kernels = !info.end_kernels && lower.find("kernels") != std::string::npos;
  info.loop = lower.find("loop") != std::string::npos;
  info.independent = lower.find("independent") != std::string::npos;
  info.seq = lower.find("seq") != std::string::npos;
  size_t dp = lower.find("deviceptr(");
  while (dp != std::string::npos) {
    size_t close = text.find(')', dp);
    info.deviceptr.insert(to_lower(collapse_whitespace(text.substr(dp + 10, close - dp - 10))));
    dp = lower.find("deviceptr(", close);
  }
  size_t red = lower.find("reduction(");
  while (red != std::string::npos) {
    size_t close = text.find(')', red);
    std::string inner = text.substr(red + 10, close - red - 10);
    size_t colon = inner.find(':');
    if (colon != std::string::npos)
      info.reductions.emplace_back(collapse_whitespace(inner.substr(0, colon)),
                                   to_lower(collapse_whitespace(inner.substr(colon + 1))));
    red = lower.find("reduction(", close);
  }
  return info;
}

} // namespace

// ---------------------------------------------------------------------------

Program::Program(std::vector<std::unique_ptr<ast::Unit>> units) : units_(std::move(units)) {
  for (const auto& unit : units_) {
    for (const ast::ModuleDecl& m : unit->modules) {
      modules_.push_back(&m);
      for (const RoutineDecl& r : m.routines) routines_[to_lower(r.name)] = {&r, &m};
    }
    for (const RoutineDecl& r : unit->bare_routines) routines_[to_lower(r.name)] = {&r, nullptr};
  }
}

Program Program::from_units(std::vector<ast::Unit> units) {
  std::vector<std::unique_ptr<ast::Unit>> owned;
  for (ast::Unit& u : units) owned.push_back(std::make_unique<ast::Unit>(std::move(u)));
  return Program(std::move(owned));
}

const RoutineDecl* Program::find_routine(const std::string& name) const {
  auto it = routines_.find(to_lower(name));
  return it == routines_.end() ? nullptr : it->second.decl;
}

const ast::ModuleDecl* Program::module_of(const std::string& routine) const {
  auto it = routines_.find(to_lower(routine));
  return it == routines_.end() ? nullptr : it->second.module;
}

void Program::compute_reference_positions() {
  analysis::CallGraph graph = analysis::build_call_graph(units_);
  auto positions = analysis::compute_kernel_positions(units_, graph, Target::CPU);
  for (const auto& [name, pos] : positions)
    reference_inline_[name] = pos == analysis::KernelPosition::InsideKernel;
}

bool Program::inline_region_for_reference(const std::string& routine) const {
  auto it = reference_inline_.find(to_lower(routine));
  return it != reference_inline_.end() && it->second;
}

// ---------------------------------------------------------------------------

namespace {

class Executor {
public:
  Executor(const Program& program, MachineState& state, const RunOptions& opts)
      : program_(program), state_(state), opts_(opts) {}

  LaunchStats run(const std::string& entry) {
    const RoutineDecl* r = program_.find_routine(entry);
    if (!r) rt_fail("entry routine '" + entry + "' not found");
    try {
      Ctx ctx;
      std::vector<const Expr*> no_args;
      call_routine(*r, no_args, ctx, {});
    } catch (StopSignal& s) {
      state_.stop_code = s.code;
    }
    return stats_;
  }

  // Module-scope expression evaluation for parameters and array extents.
  Value eval_in_module(const ast::ModuleDecl& m, const Expr& e) {
    Frame frame;
    frame.module = &m;
    frames_.push_back(&frame);
    Ctx ctx;
    Value v = eval(e, ctx);
    frames_.pop_back();
    return v;
  }

private:
  const Program& program_;
  MachineState& state_;
  const RunOptions& opts_;
  LaunchStats stats_;
  std::vector<Frame*> frames_;
  long steps_ = 0;

  Frame& frame() { return *frames_.back(); }

  void bump() {
    if (++steps_ > opts_.max_steps) rt_fail("execution step limit exceeded");
  }

  // --- name resolution ------------------------------------------------------

  const ast::ModuleDecl* import_module_for(const std::string& lname) {
    if (frames_.empty()) return nullptr;
    const RoutineDecl* r = frame().routine;
    if (!r) return nullptr;
    for (const ast::UseImport& u : r->imports) {
      for (const std::string& n : u.names) {
        if (to_lower(n) != lname) continue;
        if (same_ident(u.module, "cudafor")) continue;
        return nullptr_if_missing(u.module);
      }
    }
    // module routines see their own module's objects
    if (frame().module) {
      for (const VarDecl& v : frame().module->vars)
        if (to_lower(v.name) == lname) return frame().module;
    }
    return nullptr;
  }

  const ast::ModuleDecl* nullptr_if_missing(const std::string& module) {
    for (const auto& unit : program_.units())
      for (const ast::ModuleDecl& m : unit->modules)
        if (same_ident(m.name, module)) return &m;
    return nullptr;
  }

  ScalarValue* find_scalar_ref(const std::string& name, const Ctx& ctx) {
    std::string lname = to_lower(name);
    if (ctx.privates) {
      auto it = ctx.privates->find(lname);
      if (it != ctx.privates->end()) return &it->second;
    }
    if (!frames_.empty()) {
      auto lit = frame().locals.find(lname);
      if (lit != frame().locals.end()) return &lit->second;
      auto bit = frame().scalar_binds.find(lname);
      if (bit != frame().scalar_binds.end()) return &bit->second.value;
    }
    if (const ast::ModuleDecl* m = import_module_for(lname))
      return state_.find_scalar(m->name, lname);
    return nullptr;
  }

  // --- array access ---------------------------------------------------------

  std::shared_ptr<ArrayValue> slot_side(ObjectSlot& slot, bool device, const std::string& name,
                                        SourceLoc loc, bool writing) {
    if (device) {
      if (!slot.device)
        res_fail("array '" + name + "' has no device copy (missing transfer)", loc);
      if (!writing && slot.residency == Residency::Host)
        res_fail("device copy of '" + name + "' is stale (host copy was modified)", loc);
      if (writing) slot.residency = Residency::Device;
      return slot.device;
    }
    if (!writing && slot.residency == Residency::Device)
      res_fail("host copy of '" + name + "' is stale (device copy was modified)", loc);
    if (writing && slot.device) slot.residency = Residency::Host;
    return slot.host;
  }

  struct ArrayHandle {
    std::shared_ptr<ArrayValue> buf;
    ObjectSlot* slot = nullptr;
    const std::vector<long long>* lower = nullptr; // view bounds (dummy decl) or buffer's
    const std::vector<long long>* upper = nullptr;
  };

  // Resolves an array name to a concrete buffer under the context's
  // host/device rules; null buf means the name is not an array here.
  bool resolve_array(const std::string& name, const Ctx& ctx, bool writing, SourceLoc loc,
                     ArrayHandle& out) {
    std::string lname = to_lower(name);
    if (!frames_.empty()) {
      auto lit = frame().local_arrays.find(lname);
      if (lit != frame().local_arrays.end()) {
        std::shared_ptr<ArrayValue>& buf = lit->second;
        if (ctx.device && !buf->on_device)
          res_fail("host array '" + name + "' accessed in device code", loc);
        if (!ctx.device && buf->on_device)
          res_fail("device array '" + name + "' accessed in host code", loc);
        out.buf = buf;
        out.lower = &buf->lower;
        out.upper = &buf->upper;
        return true;
      }
      auto bit = frame().array_binds.find(lname);
      if (bit != frame().array_binds.end()) {
        ArrayBind& bind = bit->second;
        if (ctx.device && !bind.dummy_device)
          res_fail("array '" + name + "' is declared as host data but accessed in device code",
                   loc);
        if (bind.slot) {
          out.buf = slot_side(*bind.slot, ctx.device, name, loc, writing);
          out.slot = bind.slot;
        } else {
          if (ctx.device && !bind.direct->on_device)
            res_fail("host-resident actual argument reached device code through '" + name + "'",
                     loc);
          if (!ctx.device && bind.direct->on_device)
            res_fail("device array '" + name + "' accessed in host code", loc);
          out.buf = bind.direct;
        }
        out.lower = bind.lower.empty() ? &out.buf->lower : &bind.lower;
        out.upper = bind.upper.empty() ? &out.buf->upper : &bind.upper;
        return true;
      }
    }
    if (const ast::ModuleDecl* m = import_module_for(lname)) {
      ObjectSlot* slot = state_.find_slot(m->name, lname);
      if (!slot) return false;
      bool device_access = ctx.device;
      if (ctx.device && ctx.acc_deviceptr && !ctx.acc_deviceptr->count(lname))
        res_fail("array '" + name + "' is used in an acc kernels region without a deviceptr clause",
                 loc);
      out.buf = slot_side(*slot, device_access, name, loc, writing);
      out.slot = slot;
      out.lower = &out.buf->lower;
      out.upper = &out.buf->upper;
      return true;
    }
    return false;
  }

  ElementRef locate(const std::string& name, const std::vector<long long>& idx, const Ctx& ctx,
                    bool writing, SourceLoc loc) {
    ArrayHandle h;
    if (!resolve_array(name, ctx, writing, loc, h))
      rt_fail("'" + name + "' is not an array in scope", loc);
    if (static_cast<int>(idx.size()) != static_cast<int>(h.lower->size()))
      rt_fail("array '" + name + "' has rank " + std::to_string(h.lower->size()) +
                  " but is indexed with " + std::to_string(idx.size()) + " subscripts",
              loc);
    long long flat = 0;
    for (size_t d = 0; d < idx.size(); ++d) {
      long long lo = (*h.lower)[d], hi = (*h.upper)[d];
      if (idx[d] < lo || idx[d] > hi)
        rt_fail("index " + std::to_string(idx[d]) + " out of bounds [" + std::to_string(lo) +
                    ", " + std::to_string(hi) + "] in dimension " + std::to_string(d + 1) +
                    " of '" + name + "'",
                loc);
      flat = flat * (hi - lo + 1) + (idx[d] - lo);
    }
    ElementRef ref;
    ref.buf = h.buf;
    ref.slot = h.slot;
    ref.flat = flat;
    ref.device_side = ctx.device;
    ref.name = name;
    ref.loc = loc;
    return ref;
  }

  Value read_element(const ElementRef& ref) {
    if (!ref.buf->init[ref.flat])
      rt_fail("read of unset element of '" + ref.name + "'", ref.loc);
    switch (ref.buf->type) {
      case BaseType::Real: return Value::real(ref.buf->reals[ref.flat]);
      case BaseType::Integer: return Value::integer(ref.buf->ints[ref.flat]);
      case BaseType::Logical: return Value::boolean(ref.buf->logicals[ref.flat] != 0);
      default: rt_fail("unsupported array element type", ref.loc);
    }
  }

  void write_element(const ElementRef& ref, const Value& v, const Ctx& ctx) {
    if (ctx.launch && ref.device_side) {
      auto key = std::make_pair(static_cast<const ArrayValue*>(ref.buf.get()), ref.flat);
      auto [it, fresh] = ctx.launch->writes.emplace(key, ctx.thread ? ctx.thread->linear_id : -1);
      long writer = ctx.thread ? ctx.thread->linear_id : -1;
      if (!fresh && it->second != writer)
        fail(ErrKind::Race,
             "two threads wrote the same element of '" + ref.name + "' within one launch",
             ref.loc);
    }
    switch (ref.buf->type) {
      case BaseType::Real: ref.buf->reals[ref.flat] = v.as_real(ref.loc); break;
      case BaseType::Integer: ref.buf->ints[ref.flat] = v.as_int(ref.loc); break;
      case BaseType::Logical: ref.buf->logicals[ref.flat] = v.as_bool(ref.loc) ? 1 : 0; break;
      default: rt_fail("unsupported array element type", ref.loc);
    }
    ref.buf->init[ref.flat] = 1;
    if (ref.slot) {
      if (ref.device_side)
        ref.slot->residency = Residency::Device;
      else if (ref.slot->device)
        ref.slot->residency = Residency::Host;
    }
  }

  // --- scalar reads/writes ----------------------------------------------------

  Value read_scalar(const std::string& name, const Ctx& ctx, SourceLoc loc) {
    std::string lname = to_lower(name);
    if (lname == "cudasuccess") return Value::integer(0);
    if (lname == "cudafunccachepreferl1") return Value::integer(1);
    ScalarValue* s = find_scalar_ref(name, ctx);
    if (!s) rt_fail("'" + name + "' is not defined in this scope", loc);
    if (!s->initialized) rt_fail("read of unset variable '" + name + "'", loc);
    switch (s->type) {
      case BaseType::Real: return Value::real(s->r);
      case BaseType::Integer: return Value::integer(s->i);
      case BaseType::Logical: return Value::boolean(s->b);
      case BaseType::Dim3: {
        Value v;
        v.kind = Value::Kind::Dim3;
        for (int d = 0; d < 3; ++d) v.d3[d] = s->d3[d];
        return v;
      }
    }
    rt_fail("unsupported scalar type", loc);
  }

  void write_scalar(const std::string& name, const Value& v, const Ctx& ctx, SourceLoc loc) {
    std::string lname = to_lower(name);
    ScalarValue* s = nullptr;
    if (ctx.privates) {
      // scalars assigned inside a simulated parallel block are per-thread
      auto it = ctx.privates->find(lname);
      if (it == ctx.privates->end()) {
        ScalarValue* outer = find_scalar_ref(name, ctx);
        if (!outer) rt_fail("'" + name + "' is not defined in this scope", loc);
        ScalarValue priv = *outer;
        priv.initialized = false;
        auto [pit, fresh] = ctx.privates->emplace(lname, priv);
        (void)fresh;
        s = &pit->second;
      } else {
        s = &it->second;
      }
    } else {
      s = find_scalar_ref(name, ctx);
    }
    if (!s) rt_fail("'" + name + "' is not defined in this scope", loc);
    switch (s->type) {
      case BaseType::Real: s->r = v.as_real(loc); break;
      case BaseType::Integer: s->i = v.as_int(loc); break;
      case BaseType::Logical: s->b = v.as_bool(loc); break;
      case BaseType::Dim3:
        if (v.kind != Value::Kind::Dim3) rt_fail("expected a dim3 value", loc);
        for (int d = 0; d < 3; ++d) s->d3[d] = v.d3[d];
        break;
    }
    s->initialized = true;
  }

  bool name_is_array(const std::string& name, const Ctx& ctx) {
    (void)ctx;
    std::string lname = to_lower(name);
    if (!frames_.empty()) {
      if (frame().local_arrays.count(lname)) return true;
      if (frame().array_binds.count(lname)) return true;
    }
    if (const ast::ModuleDecl* m = import_module_for(lname))
      return state_.find_slot(m->name, lname) != nullptr;
    return false;
  }

  // --- expression evaluation ---------------------------------------------------

  std::vector<long long> eval_indices(const Expr& e, const Ctx& ctx) {
    std::vector<long long> idx;
    for (const ast::ExprPtr& a : e.args) idx.push_back(eval(*a, ctx).as_int(e.loc));
    return idx;
  }

  Value eval_intrinsic(const Expr& e, const Ctx& ctx) {
    std::string lname = to_lower(e.text);
    auto arg = [&](size_t k) { return eval(*e.args[k], ctx); };
    if (lname == "sqrt") return Value::real(std::sqrt(arg(0).as_real(e.loc)));
    if (lname == "ceiling")
      return Value::integer(static_cast<long long>(std::ceil(arg(0).as_real(e.loc))));
    if (lname == "real") return Value::real(arg(0).as_real(e.loc));
    if (lname == "abs") {
      Value v = arg(0);
      if (v.kind == Value::Kind::Int) return Value::integer(std::llabs(v.i));
      return Value::real(std::fabs(v.as_real(e.loc)));
    }
    if (lname == "min" || lname == "max") {
      if (e.args.size() < 2) rt_fail("min/max need at least two arguments", e.loc);
      Value acc = arg(0);
      bool all_int = acc.kind == Value::Kind::Int;
      double best = acc.as_real(e.loc);
      long long besti = all_int ? acc.i : 0;
      for (size_t k = 1; k < e.args.size(); ++k) {
        Value v = arg(k);
        all_int = all_int && v.kind == Value::Kind::Int;
        double d = v.as_real(e.loc);
        bool take = lname == "min" ? d < best : d > best;
        if (take) {
          best = d;
          if (v.kind == Value::Kind::Int) besti = v.i;
        }
      }
      if (all_int) return Value::integer(besti);
      return Value::real(best);
    }
    if (lname == "dim3") {
      if (e.args.size() != 3) rt_fail("dim3 takes three values", e.loc);
      Value v;
      v.kind = Value::Kind::Dim3;
      for (int d = 0; d < 3; ++d) v.d3[d] = arg(d).as_int(e.loc);
      return v;
    }
    if (lname == "cudagetlasterror" || lname == "cudathreadsynchronize" ||
        lname == "cudafuncsetcacheconfig")
      return Value::integer(0);
    rt_fail("unknown function or undeclared array '" + e.text + "'", e.loc);
  }

  Value eval(const Expr& e, const Ctx& ctx) {
    switch (e.kind) {
      case Expr::Kind::IntLit: return Value::integer(e.int_value);
      case Expr::Kind::RealLit: return Value::real(e.real_value);
      case Expr::Kind::LogicalLit: return Value::boolean(e.bool_value);
      case Expr::Kind::Var: return read_scalar(e.text, ctx, e.loc);
      case Expr::Kind::Component: {
        const Expr& base = *e.args[0];
        std::string comp = to_lower(e.text);
        int axis = comp == "x" ? 0 : comp == "y" ? 1 : comp == "z" ? 2 : -1;
        if (axis < 0) rt_fail("unknown component '%" + e.text + "'", e.loc);
        if (base.kind == Expr::Kind::Var && is_builtin_index_name(to_lower(base.text))) {
          if (!ctx.thread) rt_fail("'" + base.text + "' used outside a kernel", e.loc);
          std::string b = to_lower(base.text);
          if (b == "blockidx") return Value::integer(ctx.thread->blockidx[axis]);
          if (b == "blockdim") return Value::integer(ctx.thread->blockdim[axis]);
          if (b == "threadidx") return Value::integer(ctx.thread->threadidx[axis]);
          return Value::integer(ctx.thread->griddim[axis]);
        }
        Value v = eval(base, ctx);
        if (v.kind != Value::Kind::Dim3) rt_fail("'%' component on a non-dim3 value", e.loc);
        return Value::integer(v.d3[axis]);
      }
      case Expr::Kind::Ref: {
        if (name_is_array(e.text, ctx)) {
          ElementRef ref = locate(e.text, eval_indices(e, ctx), ctx,
                                  /*writing=*/false, e.loc);
          return read_element(ref);
        }
        if (find_scalar_ref(e.text, ctx))
          rt_fail("scalar '" + e.text + "' referenced with subscripts", e.loc);
        return eval_intrinsic(e, ctx);
      }
      case Expr::Kind::Un: {
        if (e.un == ast::UnOp::Not) return Value::boolean(!eval(*e.args[0], ctx).as_bool(e.loc));
        Value v = eval(*e.args[0], ctx);
        if (v.kind == Value::Kind::Int) return Value::integer(-v.i);
        return Value::real(-v.as_real(e.loc));
      }
      case Expr::Kind::Bin: {
        using ast::BinOp;
        if (e.bin == BinOp::And || e.bin == BinOp::Or) {
          bool l = eval(*e.args[0], ctx).as_bool(e.loc);
          bool r = eval(*e.args[1], ctx).as_bool(e.loc);
          return Value::boolean(e.bin == BinOp::And ? (l && r) : (l || r));
        }
        Value l = eval(*e.args[0], ctx);
        Value r = eval(*e.args[1], ctx);
        bool ints = l.kind == Value::Kind::Int && r.kind == Value::Kind::Int;
        if (ast::is_comparison(e.bin)) {
          if (ints) {
            long long a = l.i, b = r.i;
            switch (e.bin) {
              case BinOp::Lt: return Value::boolean(a < b);
              case BinOp::Gt: return Value::boolean(a > b);
              case BinOp::Le: return Value::boolean(a <= b);
              case BinOp::Ge: return Value::boolean(a >= b);
              case BinOp::Eq: return Value::boolean(a == b);
              default: return Value::boolean(a != b);
            }
          }
          double a = l.as_real(e.loc), b = r.as_real(e.loc);
          switch (e.bin) {
            case BinOp::Lt: return Value::boolean(a < b);
            case BinOp::Gt: return Value::boolean(a > b);
            case BinOp::Le: return Value::boolean(a <= b);
            case BinOp::Ge: return Value::boolean(a >= b);
            case BinOp::Eq: return Value::boolean(a == b);
            default: return Value::boolean(a != b);
          }
        }
        if (e.bin == BinOp::Pow) {
          if (r.kind == Value::Kind::Int) {
            long long n = r.i;
            if (l.kind == Value::Kind::Int) {
              long long acc = 1, base = l.i;
              for (long long k = 0; k < n; ++k) acc *= base;
              return Value::integer(acc);
            }
            double acc = 1.0, base = l.as_real(e.loc);
            bool neg = n < 0;
            for (long long k = 0; k < std::llabs(n); ++k) acc *= base;
            return Value::real(neg ? 1.0 / acc : acc);
          }
          return Value::real(std::pow(l.as_real(e.loc), r.as_real(e.loc)));
        }
        if (ints) {
          long long a = l.i, b = r.i;
          switch (e.bin) {
            case BinOp::Add: return Value::integer(a + b);
            case BinOp::Sub: return Value::integer(a - b);
            case BinOp::Mul: return Value::integer(a * b);
            case BinOp::Div:
              if (b == 0) rt_fail("integer division by zero", e.loc);
              return Value::integer(a / b);
            default: break;
          }
        }
        double a = l.as_real(e.loc), b = r.as_real(e.loc);
        switch (e.bin) {
          case BinOp::Add: return Value::real(a + b);
          case BinOp::Sub: return Value::real(a - b);
          case BinOp::Mul: return Value::real(a * b);
          case BinOp::Div: return Value::real(a / b);
          default: rt_fail("unsupported operator", e.loc);
        }
      }
    }
    rt_fail("unsupported expression", e.loc);
  }

  // --- calls -----------------------------------------------------------------

  bool call_routine(const RoutineDecl& r, const std::vector<const Expr*>& args, Ctx& ctx,
                    SourceLoc loc) {
    if (args.size() != r.dummy_args.size())
      rt_fail("call to '" + r.name + "' passes " + std::to_string(args.size()) +
                  " arguments, expected " + std::to_string(r.dummy_args.size()),
              loc);

    Frame f;
    f.routine = &r;
    f.module = program_.module_of(r.name);

    // Bind dummies first: scalar decls may use value arguments in dim exprs.
    std::vector<std::string> writeback_order;
    for (size_t k = 0; k < args.size(); ++k) {
      const std::string& dummy = r.dummy_args[k];
      const VarDecl* decl = r.find_decl(dummy);
      if (!decl) rt_fail("dummy '" + dummy + "' of '" + r.name + "' lacks a declaration", loc);
      const Expr& actual = *args[k];

      if (decl->is_scalar()) {
        ScalarBind bind;
        bind.decl = decl;
        bind.value.type = decl->type;
        bool want_in = decl->intent != Intent::Out;
        if (actual.kind == Expr::Kind::Var && find_scalar_ref(actual.text, ctx)) {
          ScalarValue* src = find_scalar_ref(actual.text, ctx);
          bind.value = *src;
          bind.value.type = decl->type;
          if (!want_in) bind.value.initialized = false;
          if (!decl->is_value && decl->intent != Intent::In) {
            bind.target = ScalarBind::Target::Scalar;
            bind.scalar = src;
          }
        } else if (actual.kind == Expr::Kind::Ref && name_is_array(actual.text, ctx)) {
          ElementRef ref =
              locate(actual.text, eval_indices(actual, ctx), ctx, /*writing=*/false, actual.loc);
          if (want_in && ref.buf->init[ref.flat]) {
            Value v = read_element(ref);
            switch (decl->type) {
              case BaseType::Real: bind.value.r = v.as_real(loc); break;
              case BaseType::Integer: bind.value.i = v.as_int(loc); break;
              case BaseType::Logical: bind.value.b = v.as_bool(loc); break;
              default: rt_fail("unsupported element binding", loc);
            }
            bind.value.initialized = true;
          } else {
            bind.value.initialized = false;
          }
          if (!decl->is_value && decl->intent != Intent::In) {
            bind.target = ScalarBind::Target::Element;
            bind.element = ref;
          }
        } else {
          // expression actual: pure copy-in
          Value v = eval(actual, ctx);
          switch (decl->type) {
            case BaseType::Real: bind.value.r = v.as_real(loc); break;
            case BaseType::Integer: bind.value.i = v.as_int(loc); break;
            case BaseType::Logical: bind.value.b = v.as_bool(loc); break;
            case BaseType::Dim3:
              if (v.kind != Value::Kind::Dim3) rt_fail("expected dim3 actual", loc);
              for (int d = 0; d < 3; ++d) bind.value.d3[d] = v.d3[d];
              break;
          }
          bind.value.initialized = true;
          if (decl->intent == Intent::Out) bind.value.initialized = false;
        }
        f.scalar_binds[to_lower(dummy)] = std::move(bind);
        writeback_order.push_back(to_lower(dummy));
      } else {
        if (actual.kind != Expr::Kind::Var)
          rt_fail("array dummy '" + dummy + "' needs a whole-array actual argument", actual.loc);
        ArrayBind bind;
        bind.dummy_device = decl->is_device;
        std::string lname = to_lower(actual.text);
        bool bound = false;
        if (!frames_.empty()) {
          auto lit = frame().local_arrays.find(lname);
          if (lit != frame().local_arrays.end()) {
            bind.direct = lit->second;
            bound = true;
          }
          if (!bound) {
            auto bit = frame().array_binds.find(lname);
            if (bit != frame().array_binds.end()) {
              bind.slot = bit->second.slot;
              bind.direct = bit->second.direct;
              bound = true;
            }
          }
        }
        if (!bound) {
          if (const ast::ModuleDecl* m = import_module_for(lname)) {
            bind.slot = state_.find_slot(m->name, lname);
            bound = bind.slot != nullptr;
          }
        }
        if (!bound) rt_fail("array actual '" + actual.text + "' not found in scope", actual.loc);
        f.array_binds[to_lower(dummy)] = std::move(bind);
      }
    }

    frames_.push_back(&f);
    elaborate_locals(r, f, ctx);
    // The dummy's declared view governs indexing; its size must match.
    for (auto& [dname, bind] : f.array_binds) {
      const VarDecl* decl = r.find_decl(dname);
      evaluate_view(*decl, bind, ctx);
      const ArrayValue* target = bind.slot ? bind.slot->host.get() : bind.direct.get();
      if (target) {
        size_t view_size = 1;
        for (size_t d = 0; d < bind.lower.size(); ++d)
          view_size *= static_cast<size_t>(bind.upper[d] - bind.lower[d] + 1);
        if (view_size != target->size())
          rt_fail("dummy '" + dname + "' of '" + r.name + "' declares " +
                      std::to_string(view_size) + " elements but the actual argument has " +
                      std::to_string(target->size()),
                  loc);
      }
    }

    bool early_return = false;
    try {
      exec_body(r.body, ctx);
    } catch (ReturnSignal&) {
      early_return = true;
    }

    // copy-restore
    for (const std::string& dname : writeback_order) {
      ScalarBind& bind = f.scalar_binds[dname];
      if (!bind.value.initialized) continue;
      if (bind.target == ScalarBind::Target::Scalar) {
        *bind.scalar = bind.value;
        bind.scalar->initialized = true;
      } else if (bind.target == ScalarBind::Target::Element) {
        Value v;
        switch (bind.value.type) {
          case BaseType::Real: v = Value::real(bind.value.r); break;
          case BaseType::Integer: v = Value::integer(bind.value.i); break;
          case BaseType::Logical: v = Value::boolean(bind.value.b); break;
          default: rt_fail("unsupported writeback", loc);
        }
        write_element(bind.element, v, ctx);
      }
    }
    frames_.pop_back();
    return early_return;
  }

  void evaluate_view(const VarDecl& decl, ArrayBind& bind, Ctx& ctx) {
    bind.lower.clear();
    bind.upper.clear();
    for (const ast::Dim& d : decl.dims) {
      long long lo = d.lower ? eval(*d.lower, ctx).as_int(decl.loc) : 1;
      long long hi = eval(*d.upper, ctx).as_int(decl.loc);
      if (hi < lo) rt_fail("non-positive extent in dummy '" + decl.name + "'", decl.loc);
      bind.lower.push_back(lo);
      bind.upper.push_back(hi);
    }
  }

  void elaborate_locals(const RoutineDecl& r, Frame& f, Ctx& ctx) {
    for (const VarDecl& d : r.decls) {
      std::string lname = to_lower(d.name);
      if (f.scalar_binds.count(lname) || f.array_binds.count(lname)) continue;
      if (d.is_scalar()) {
        ScalarValue s;
        s.type = d.type;
        if (d.is_parameter && d.init) {
          Value v = eval(*d.init, ctx);
          switch (d.type) {
            case BaseType::Real: s.r = v.as_real(d.loc); break;
            case BaseType::Integer: s.i = v.as_int(d.loc); break;
            case BaseType::Logical: s.b = v.as_bool(d.loc); break;
            default: break;
          }
          s.initialized = true;
        }
        f.locals[lname] = s;
      } else {
        auto arr = std::make_shared<ArrayValue>();
        arr->type = d.type;
        arr->on_device = d.is_device;
        if (d.is_device && !opts_.gpu)
          rt_fail("device declaration of '" + d.name + "' outside a GPU simulation", d.loc);
        for (const ast::Dim& dim : d.dims) {
          long long lo = dim.lower ? eval(*dim.lower, ctx).as_int(d.loc) : 1;
          long long hi = eval(*dim.upper, ctx).as_int(d.loc);
          if (hi < lo) rt_fail("non-positive extent declared for '" + d.name + "'", d.loc);
          arr->lower.push_back(lo);
          arr->upper.push_back(hi);
        }
        size_t n = arr->size();
        if (n > (64ull << 20)) rt_fail("array '" + d.name + "' is unreasonably large", d.loc);
        switch (d.type) {
          case BaseType::Real: arr->reals.assign(n, 0.0); break;
          case BaseType::Integer: arr->ints.assign(n, 0); break;
          case BaseType::Logical: arr->logicals.assign(n, 0); break;
          default: rt_fail("unsupported array type", d.loc);
        }
        arr->init.assign(n, 0);
        f.local_arrays[lname] = std::move(arr);
      }
    }
  }

  // --- statements --------------------------------------------------------------

  void exec_body(const std::vector<ast::StmtPtr>& body, Ctx& ctx) {
    for (size_t i = 0; i < body.size(); ++i) {
      const Stmt& s = *body[i];
      if (s.kind == Stmt::Kind::Directive) {
        i = exec_directive(body, i, ctx);
        continue;
      }
      exec_stmt(s, ctx);
    }
  }

  // Handles a sentinel line; may consume following statements (OMP nests and
  // acc kernels blocks). Returns the index of the last consumed statement.
  size_t exec_directive(const std::vector<ast::StmtPtr>& body, size_t i, Ctx& ctx) {
    const Stmt& s = *body[i];
    OmpInfo omp = parse_omp(s.source_text);
    if (omp.parallel_do) {
      if (i + 1 >= body.size() || body[i + 1]->kind != Stmt::Kind::Do)
        fail(ErrKind::Validation, "!$OMP PARALLEL DO is not followed by a do loop", s.loc);
      const Stmt& loop = *body[i + 1];
      if (opts_.validate_omp) validate_omp_shared(omp, loop, ctx);
      exec_do(loop, ctx, opts_.flip_parallel_loops);
      return i + 1;
    }
    AccInfo acc = parse_acc(s.source_text);
    if (acc.kernels) return exec_acc_kernels(body, i, acc, ctx);
    return i;
  }

  void validate_omp_shared(const OmpInfo& omp, const Stmt& loop, Ctx& ctx) {
    std::set<std::string> reduced;
    for (const auto& [op, var] : omp.reductions) reduced.insert(var);
    std::vector<const Stmt*> stack{&loop};
    std::vector<ast::StmtPtr> const* dummy;
    (void)dummy;
    std::vector<const Stmt*> all;
    collect_stmts(loop, all);
    for (const Stmt* st : all) {
      ast::walk_exprs(*st, [&](const Expr& e) {
        if (e.kind != Expr::Kind::Ref && e.kind != Expr::Kind::Var) return;
        if (!name_is_array(e.text, ctx)) return;
        std::string lname = to_lower(e.text);
        if (!omp.shared.count(lname) && !reduced.count(lname))
          fail(ErrKind::Validation,
               "array '" + e.text + "' referenced in the parallel loop is missing from SHARED",
               e.loc);
      });
    }
  }

  void collect_stmts(const Stmt& s, std::vector<const Stmt*>& out) {
    out.push_back(&s);
    for (const ast::StmtPtr& b : s.body) collect_stmts(*b, out);
    for (const ast::IfArm& arm : s.arms) for (const ast::StmtPtr& b : arm.body) collect_stmts(*b, out);
  }

  // --- acc kernels simulation ---------------------------------------------------

  size_t exec_acc_kernels(const std::vector<ast::StmtPtr>& body, size_t i, const AccInfo& head,
                          Ctx& outer, SourceLoc loc = {}) {
    (void)loc;
    // collect the block up to the matching end kernels
    size_t end = i + 1;
    std::vector<const Stmt*> block;
    for (; end < body.size(); ++end) {
      if (body[end]->kind == Stmt::Kind::Directive) {
        AccInfo info = parse_acc(body[end]->source_text);
        if (info.end_kernels) break;
      }
      block.push_back(body[end].get());
    }
    if (end >= body.size())
      fail(ErrKind::Validation, "!$acc kernels without matching end kernels", body[i]->loc);

    // parse the parallel loop ladder
    struct ParLoop {
      const Stmt* loop;
      std::vector<std::pair<std::string, std::string>> reductions;
    };
    std::vector<ParLoop> ladder;
    std::vector<const Stmt*> level = block;
    while (true) {
      if (level.size() == 2 && level[0]->kind == Stmt::Kind::Directive &&
          level[1]->kind == Stmt::Kind::Do) {
        AccInfo info = parse_acc(level[0]->source_text);
        if (info.loop && info.independent) {
          ladder.push_back({level[1], info.reductions});
          level.clear();
          for (const ast::StmtPtr& b : ladder.back().loop->body) level.push_back(b.get());
          continue;
        }
      }
      break;
    }
    if (ladder.empty())
      fail(ErrKind::Validation, "acc kernels region without parallel loops", body[i]->loc);

    // enumerate the iteration space as one virtual launch
    std::vector<std::string> vars;
    std::vector<long long> lo, hi;
    for (const ParLoop& p : ladder) {
      vars.push_back(p.loop->do_var);
      lo.push_back(eval(*p.loop->lower, outer).as_int(p.loop->loc));
      hi.push_back(eval(*p.loop->upper, outer).as_int(p.loop->loc));
    }
    std::vector<std::pair<std::string, std::string>> reductions;
    for (const ParLoop& p : ladder)
      for (const auto& rc : p.reductions) {
        bool seen = false;
        for (const auto& have : reductions)
          if (have.second == rc.second) seen = true;
        if (!seen) reductions.push_back(rc);
      }

    long long total = 1;
    for (size_t d = 0; d < vars.size(); ++d) total *= std::max(0ll, hi[d] - lo[d] + 1);
    std::vector<long long> order(static_cast<size_t>(std::max(0ll, total)));
    for (long long t = 0; t < total; ++t) order[static_cast<size_t>(t)] = t;
    apply_order(order);

    // reduction accumulators: initial value + ordered partials
    std::map<std::string, double> initial;
    std::map<std::string, std::vector<double>> partials;
    for (const auto& [op, var] : reductions) {
      Value v = read_scalar(var, outer, body[i]->loc);
      initial[var] = v.as_real(body[i]->loc);
      partials[var] = std::vector<double>(static_cast<size_t>(std::max(0ll, total)),
                                          identity_for(op));
    }

    LaunchTracker tracker;
    stats_.launches += 1;
    const std::vector<ast::StmtPtr>& inner = ladder.back().loop->body;

    for (long long t : order) {
      stats_.threads += 1;
      ThreadState thread;
      thread.linear_id = static_cast<long>(t);
      Ctx ctx = outer;
      ctx.device = true;
      ctx.thread = &thread;
      ctx.launch = &tracker;
      ctx.acc_deviceptr = &head.deviceptr;
      std::map<std::string, ScalarValue> privates;
      ctx.privates = &privates;

      // decompose t into loop indices, innermost fastest
      long long rest = t;
      std::vector<long long> point(vars.size());
      for (size_t d = vars.size(); d-- > 0;) {
        long long extent = hi[d] - lo[d] + 1;
        point[d] = lo[d] + rest % extent;
        rest /= extent;
      }
      for (size_t d = 0; d < vars.size(); ++d) {
        ScalarValue iter;
        iter.type = BaseType::Integer;
        iter.i = point[d];
        iter.initialized = true;
        privates[to_lower(vars[d])] = iter;
      }
      // reduction privates start at the identity
      for (const auto& [op, var] : reductions) {
        ScalarValue acc;
        acc.type = BaseType::Real;
        acc.r = identity_for(op);
        acc.initialized = true;
        privates[to_lower(var)] = acc;
      }

      try {
        exec_body_no_directives(inner, ctx);
      } catch (ReturnSignal&) {
        stats_.guard_returns += 1;
      }

      for (const auto& [op, var] : reductions)
        partials[var][static_cast<size_t>(t)] = privates[to_lower(var)].r;
    }

    for (const auto& [op, var] : reductions) {
      double acc = initial[var];
      for (long long t = 0; t < total; ++t) {
        if (op == "+")
          acc += partials[var][static_cast<size_t>(t)];
        else
          acc *= partials[var][static_cast<size_t>(t)];
      }
      Value v = Value::real(acc);
      write_scalar(var, v, outer, body[i]->loc);
    }
    return end;
  }

  void exec_body_no_directives(const std::vector<ast::StmtPtr>& body, Ctx& ctx) {
    for (const ast::StmtPtr& s : body) {
      if (s->kind == Stmt::Kind::Directive) continue; // seq markers
      exec_stmt(*s, ctx);
    }
  }

  void apply_order(std::vector<long long>& order) {
    switch (opts_.order) {
      case ThreadOrder::Forward: return;
      case ThreadOrder::Reverse: std::reverse(order.begin(), order.end()); return;
      case ThreadOrder::Shuffled: {
        std::mt19937_64 rng(opts_.shuffle_seed);
        std::shuffle(order.begin(), order.end(), rng);
        return;
      }
    }
  }

  // --- statements ----------------------------------------------------------------

  void exec_stmt(const Stmt& s, Ctx& ctx) {
    bump();
    switch (s.kind) {
      case Stmt::Kind::Assign: {
        Value v = eval(*s.rhs, ctx);
        if (s.lhs->kind == Expr::Kind::Var) {
          write_scalar(s.lhs->text, v, ctx, s.loc);
        } else if (s.lhs->kind == Expr::Kind::Ref) {
          if (!name_is_array(s.lhs->text, ctx))
            rt_fail("assignment to subscripted scalar '" + s.lhs->text + "'", s.loc);
          ElementRef ref =
              locate(s.lhs->text, eval_indices(*s.lhs, ctx), ctx, /*writing=*/true, s.loc);
          write_element(ref, v, ctx);
        } else {
          rt_fail("unsupported assignment target", s.loc);
        }
        return;
      }
      case Stmt::Kind::Do:
        exec_do(s, ctx, false);
        return;
      case Stmt::Kind::If: {
        for (const ast::IfArm& arm : s.arms) {
          if (!arm.cond || eval(*arm.cond, ctx).as_bool(s.loc)) {
            exec_body(arm.body, ctx);
            return;
          }
        }
        return;
      }
      case Stmt::Kind::Call:
        exec_call(s, ctx);
        return;
      case Stmt::Kind::Return:
        throw ReturnSignal{};
      case Stmt::Kind::Stop:
        throw StopSignal{s.stop_code};
      case Stmt::Kind::Region:
        exec_region(s, ctx);
        return;
      case Stmt::Kind::Directive:
        return; // handled by exec_body; stray markers are inert
      case Stmt::Kind::Opaque:
        rt_fail("opaque statement cannot be executed: '" + s.source_text + "'", s.loc);
    }
  }

  void exec_do(const Stmt& s, Ctx& ctx, bool flip) {
    if (flip && s.body.size() == 1 && s.body[0]->kind == Stmt::Kind::Do) {
      // data-parallel nests may interchange their two outer loops
      const Stmt& inner = *s.body[0];
      long long olo = eval(*s.lower, ctx).as_int(s.loc);
      long long ohi = eval(*s.upper, ctx).as_int(s.loc);
      long long ilo = eval(*inner.lower, ctx).as_int(inner.loc);
      long long ihi = eval(*inner.upper, ctx).as_int(inner.loc);
      for (long long iv = ilo; iv <= ihi; ++iv) {
        write_scalar(inner.do_var, Value::integer(iv), ctx, inner.loc);
        for (long long ov = olo; ov <= ohi; ++ov) {
          write_scalar(s.do_var, Value::integer(ov), ctx, s.loc);
          exec_body(inner.body, ctx);
        }
      }
      return;
    }
    long long lo = eval(*s.lower, ctx).as_int(s.loc);
    long long hi = eval(*s.upper, ctx).as_int(s.loc);
    for (long long v = lo; v <= hi; ++v) {
      write_scalar(s.do_var, Value::integer(v), ctx, s.loc);
      exec_body(s.body, ctx);
    }
  }

  // Parallel regions appear only in reference runs of annotated user code.
  void exec_region(const Stmt& s, Ctx& ctx) {
    if (!opts_.reference_lowering)
      fail(ErrKind::Validation, "@parallelRegion reached a non-reference interpreter", s.loc);
    const std::string routine = frame().routine ? frame().routine->name : "";
    if (program_.inline_region_for_reference(routine)) {
      exec_body(s.body, ctx);
      return;
    }
    // sequential loops over the region domain, last domain outermost
    const ParallelRegionSpec& spec = s.region;
    std::vector<long long> lo(spec.dom_names.size()), hi(spec.dom_names.size());
    for (size_t d = 0; d < spec.dom_names.size(); ++d) {
      std::string size = spec.dom_sizes[d];
      long long lo_v = 1, hi_v;
      int depth = 0;
      size_t colon = std::string::npos;
      for (size_t k = 0; k < size.size(); ++k) {
        if (size[k] == '(') ++depth;
        if (size[k] == ')') --depth;
        if (size[k] == ':' && depth == 0) colon = k;
      }
      Ctx ectx = ctx;
      if (colon != std::string::npos) {
        lo_v = eval(*parse_expr_text_cached(size.substr(0, colon)), ectx).as_int(s.loc);
        hi_v = eval(*parse_expr_text_cached(size.substr(colon + 1)), ectx).as_int(s.loc);
      } else {
        hi_v = eval(*parse_expr_text_cached(size), ectx).as_int(s.loc);
      }
      if (!spec.start_at.empty())
        lo_v = eval(*parse_expr_text_cached(spec.start_at[d]), ectx).as_int(s.loc);
      if (!spec.end_at.empty())
        hi_v = eval(*parse_expr_text_cached(spec.end_at[d]), ectx).as_int(s.loc);
      lo[d] = lo_v;
      hi[d] = hi_v;
    }
    // ensure the iterators exist as frame locals
    for (const std::string& n : spec.dom_names) {
      std::string lname = to_lower(n);
      if (!frame().locals.count(lname) && !frame().scalar_binds.count(lname)) {
        ScalarValue it;
        it.type = BaseType::Integer;
        frame().locals[lname] = it;
      }
    }
    std::vector<size_t> loop_order; // outermost first: last domain first
    for (size_t d = spec.dom_names.size(); d-- > 0;) loop_order.push_back(d);
    if (opts_.flip_parallel_loops && loop_order.size() >= 2)
      std::swap(loop_order[0], loop_order[1]);

    iterate_region(s, spec, loop_order, 0, lo, hi, ctx);
  }

  void iterate_region(const Stmt& s, const ParallelRegionSpec& spec,
                      const std::vector<size_t>& loop_order, size_t depth,
                      const std::vector<long long>& lo, const std::vector<long long>& hi,
                      Ctx& ctx) {
    if (depth == loop_order.size()) {
      exec_body(s.body, ctx);
      return;
    }
    size_t d = loop_order[depth];
    for (long long v = lo[d]; v <= hi[d]; ++v) {
      write_scalar(spec.dom_names[d], Value::integer(v), ctx, s.loc);
      iterate_region(s, spec, loop_order, depth + 1, lo, hi, ctx);
    }
  }

  std::map<std::string, ast::ExprPtr> expr_cache_;
  const Expr* parse_expr_text_cached(const std::string& text);

  // --- calls: user routines, runtime support, launches -----------------------------

  void exec_call(const Stmt& s, Ctx& ctx) {
    std::string lname = to_lower(s.callee);

    if (lname == "hfrt_copy_to_device" || lname == "hfrt_copy_from_device" ||
        lname == "hfrt_device_allocate") {
      exec_transfer(s, ctx);
      return;
    }
    if (lname == "cudafuncsetcacheconfig" || lname == "cudagetlasterror" ||
        lname == "cudathreadsynchronize")
      return;

    const RoutineDecl* r = program_.find_routine(lname);
    if (!r) rt_fail("call to unknown routine '" + s.callee + "'", s.loc);

    if (s.launch_grid) {
      exec_launch(s, *r, ctx);
      return;
    }
    std::vector<const Expr*> args;
    for (const ast::ExprPtr& a : s.args) args.push_back(a.get());
    Ctx callee_ctx = ctx;
    callee_ctx.privates = nullptr; // private overlays do not cross calls
    call_routine(*r, args, callee_ctx, s.loc);
  }

  void exec_transfer(const Stmt& s, Ctx& ctx) {
    (void)ctx;
    if (!opts_.gpu)
      rt_fail("device transfer executed outside a GPU simulation", s.loc);
    if (s.args.size() != 1 || s.args[0]->kind != Expr::Kind::Var)
      rt_fail("transfer calls take a single array name", s.loc);
    std::string name = s.args[0]->text;
    ObjectSlot* slot = nullptr;
    // transfers act on module objects or slot-backed dummies visible here
    std::string lname = to_lower(name);
    if (!frames_.empty()) {
      auto bit = frame().array_binds.find(lname);
      if (bit != frame().array_binds.end()) slot = bit->second.slot;
    }
    if (!slot)
      if (const ast::ModuleDecl* m = import_module_for(lname)) slot = state_.find_slot(m->name, lname);
    if (!slot) res_fail("transfer of '" + name + "', which has no transferable storage", s.loc);

    std::string op = to_lower(s.callee);
    if (op == "hfrt_device_allocate") {
      if (!slot->device) {
        auto dev = std::make_shared<ArrayValue>(*slot->host);
        dev->init.assign(dev->init.size(), 0);
        dev->on_device = true;
        slot->device = std::move(dev);
      }
      return;
    }
    if (op == "hfrt_copy_to_device") {
      if (slot->residency == Residency::Device)
        res_fail("copy-in of '" + name + "' would overwrite newer device data", s.loc);
      auto dev = std::make_shared<ArrayValue>(*slot->host);
      dev->on_device = true;
      slot->device = std::move(dev);
      slot->residency = Residency::Both;
      return;
    }
    // copy_from_device
    if (!slot->device)
      res_fail("copy-out of '" + name + "', which was never transferred to the device", s.loc);
    if (slot->residency == Residency::Host)
      res_fail("copy-out of '" + name + "' would overwrite newer host data", s.loc);
    bool on_dev = slot->host->on_device;
    *slot->host = *slot->device;
    slot->host->on_device = on_dev;
    slot->residency = Residency::Both;
  }

  void exec_launch(const Stmt& s, const RoutineDecl& kernel, Ctx& ctx) {
    if (!opts_.gpu) rt_fail("kernel launch outside a GPU simulation", s.loc);
    Value grid = eval(*s.launch_grid, ctx);
    Value block = eval(*s.launch_block, ctx);
    if (grid.kind != Value::Kind::Dim3 || block.kind != Value::Kind::Dim3)
      rt_fail("launch configuration must be dim3 values", s.loc);
    for (int d = 0; d < 3; ++d)
      if (grid.d3[d] < 1 || block.d3[d] < 1)
        rt_fail("launch configuration dimensions must be positive", s.loc);

    long long total = 1;
    for (int d = 0; d < 3; ++d) total *= grid.d3[d] * block.d3[d];
    std::vector<long long> order(static_cast<size_t>(total));
    for (long long t = 0; t < total; ++t) order[static_cast<size_t>(t)] = t;
    apply_order(order);

    LaunchTracker tracker;
    stats_.launches += 1;

    for (long long t : order) {
      stats_.threads += 1;
      // decompose the linear id: threads within a block vary fastest
      long long rest = t;
      long long tx = rest % block.d3[0];
      rest /= block.d3[0];
      long long ty = rest % block.d3[1];
      rest /= block.d3[1];
      long long tz = rest % block.d3[2];
      rest /= block.d3[2];
      long long bx = rest % grid.d3[0];
      rest /= grid.d3[0];
      long long by = rest % grid.d3[1];
      rest /= grid.d3[1];
      long long bz = rest;

      ThreadState thread;
      thread.linear_id = static_cast<long>(t);
      thread.blockidx[0] = bx + 1;
      thread.blockidx[1] = by + 1;
      thread.blockidx[2] = bz + 1;
      thread.threadidx[0] = tx + 1;
      thread.threadidx[1] = ty + 1;
      thread.threadidx[2] = tz + 1;
      for (int d = 0; d < 3; ++d) {
        thread.blockdim[d] = block.d3[d];
        thread.griddim[d] = grid.d3[d];
      }

      Ctx kctx = ctx;
      kctx.device = true;
      kctx.thread = &thread;
      kctx.launch = &tracker;
      kctx.privates = nullptr;

      std::vector<const Expr*> args;
      for (const ast::ExprPtr& a : s.args) args.push_back(a.get());
      if (call_routine(kernel, args, kctx, s.loc)) stats_.guard_returns += 1;
    }
  }
};

const Expr* Executor::parse_expr_text_cached(const std::string& text) {
  auto it = expr_cache_.find(text);
  if (it == expr_cache_.end()) it = expr_cache_.emplace(text, parse_expr_text(text, {})).first;
  return it->second.get();
}

} // namespace

MachineState Program::prepare_state() const {
  MachineState state;
  for (const ast::ModuleDecl* m : modules_) {
    auto& scalars = state.scalars[to_lower(m->name)];
    state.arrays[to_lower(m->name)]; // ensure the module exists
    for (const VarDecl& d : m->vars) {
      if (!d.is_scalar()) continue;
      ScalarValue s;
      s.type = d.type;
      scalars[to_lower(d.name)] = s;
    }
  }
  // parameters may reference earlier parameters of the same module
  RunOptions opts;
  Executor ex(*this, state, opts);
  for (const ast::ModuleDecl* m : modules_) {
    auto& scalars = state.scalars[to_lower(m->name)];
    for (const VarDecl& d : m->vars) {
      if (!d.is_scalar() || !d.is_parameter || !d.init) continue;
      // evaluate in module scope
      ScalarValue& s = scalars[to_lower(d.name)];
      auto v = ex.eval_in_module(*m, *d.init);
      switch (d.type) {
        case BaseType::Real: s.r = v.r + (v.kind == Value::Kind::Int ? v.i : 0); break;
        case BaseType::Integer:
          s.i = v.kind == Value::Kind::Int ? v.i : static_cast<long long>(v.r);
          break;
        case BaseType::Logical: s.b = v.b; break;
        default: break;
      }
      s.initialized = true;
    }
  }
  return state;
}

void Program::elaborate_arrays(MachineState& state) const {
  RunOptions opts;
  Executor ex(*this, state, opts);
  for (const ast::ModuleDecl* m : modules_) {
    auto& arrays = state.arrays[to_lower(m->name)];
    for (const VarDecl& d : m->vars) {
      if (d.is_scalar()) continue;
      auto arr = std::make_shared<ArrayValue>();
      arr->type = d.type;
      for (const ast::Dim& dim : d.dims) {
        long long lo = 1, hi;
        if (dim.lower) lo = ex.eval_in_module(*m, *dim.lower).i;
        auto v = ex.eval_in_module(*m, *dim.upper);
        hi = v.kind == Value::Kind::Int ? v.i : static_cast<long long>(v.r);
        if (dim.lower) {
          auto lv = ex.eval_in_module(*m, *dim.lower);
          lo = lv.kind == Value::Kind::Int ? lv.i : static_cast<long long>(lv.r);
        }
        if (hi < lo)
          fail(ErrKind::Runtime,
               "non-positive extent for module array '" + d.name + "' (is an input unset?)",
               d.loc);
        arr->lower.push_back(lo);
        arr->upper.push_back(hi);
      }
      size_t n = arr->size();
      if (n > (64ull << 20)) fail(ErrKind::Runtime, "module array '" + d.name + "' is too large");
      switch (d.type) {
        case BaseType::Real: arr->reals.assign(n, 0.0); break;
        case BaseType::Integer: arr->ints.assign(n, 0); break;
        case BaseType::Logical: arr->logicals.assign(n, 0); break;
        default: fail(ErrKind::Runtime, "unsupported module array type");
      }
      arr->init.assign(n, 0);
      ObjectSlot slot;
      slot.host = std::move(arr);
      arrays[to_lower(d.name)] = std::move(slot);
    }
  }
}

LaunchStats run_program(const Program& program, MachineState& state, const std::string& entry,
                        const RunOptions& options) {
  Executor ex(program, state, options);
  return ex.run(entry);
}

LaunchStats run_reference(Program& program, MachineState& state, const std::string& entry,
                          RunOptions options) {
  options.reference_lowering = true;
  options.gpu = false;
  program.compute_reference_positions();
  return run_program(program, state, entry, options);
}

LaunchStats run_cpu_generated(const Program& program, MachineState& state,
                              const std::string& entry, RunOptions options) {
  options.reference_lowering = false;
  options.gpu = false;
  options.validate_omp = true;
  return run_program(program, state, entry, options);
}

LaunchStats run_gpu_simulated(const Program& program, MachineState& state,
                              const std::string& entry, RunOptions options) {
  options.reference_lowering = false;
  options.gpu = true;
  return run_program(program, state, entry, options);
}

} // namespace hft::interp
