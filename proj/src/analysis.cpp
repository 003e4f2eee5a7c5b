#include "hft/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <functional>
#include <sstream>

#include "hft/tokenize.hpp"

namespace hft::analysis {

using ast::RoutineDecl;
using ast::Stmt;
using ast::Unit;
using ast::VarDecl;

namespace {

std::string key(const std::string& s) { return to_lower(s); }

std::string object_key(const std::string& scope, const std::string& name) {
  return to_lower(scope) + "." + to_lower(name);
}

// Extent expressions compare as collapsed token text: "nx_mn:nx_mx" etc.
std::string normalize_extent(const std::string& text) {
  std::string out;
  for (const Token& t : tokenize(text, {})) {
    if (t.kind == Token::Kind::End) break;
    if (!out.empty() && (std::isalnum(static_cast<unsigned char>(t.text[0])) || t.text[0] == '_') &&
        (std::isalnum(static_cast<unsigned char>(out.back())) || out.back() == '_'))
      out += ' ';
    out += to_lower(t.text);
  }
  return out;
}

std::string dim_extent_text(const ast::Dim& d) {
  std::string text;
  if (d.lower) text = ast::print_expr(*d.lower) + ":";
  text += ast::print_expr(*d.upper);
  return normalize_extent(text);
}

void for_each_routine(const std::vector<std::unique_ptr<Unit>>& units,
                      const std::function<void(RoutineDecl&, const std::string&, Unit&)>& fn) {
  for (const auto& unit : units) {
    for (ast::ModuleDecl& m : unit->modules)
      for (RoutineDecl& r : m.routines) fn(r, m.name, *unit);
    for (RoutineDecl& r : unit->bare_routines) fn(r, "", *unit);
  }
}

void collect_calls(const std::vector<ast::StmtPtr>& body, const std::string& caller,
                   const Stmt* region, std::vector<CallSite>& out) {
  for (const ast::StmtPtr& s : body) {
    if (s->kind == Stmt::Kind::Call)
      out.push_back({caller, to_lower(s->callee), s->loc, region});
    const Stmt* inner = s->kind == Stmt::Kind::Region ? s.get() : region;
    collect_calls(s->body, caller, inner, out);
    for (const ast::IfArm& arm : s->arms) collect_calls(arm.body, caller, inner, out);
  }
}

} // namespace

bool CallGraph::has_node(const std::string& name) const {
  return std::binary_search(nodes.begin(), nodes.end(), to_lower(name));
}

const char* position_name(KernelPosition p) {
  switch (p) {
    case KernelPosition::HostAboveKernels: return "host_above_kernels";
    case KernelPosition::ContainsKernels: return "contains_kernels";
    case KernelPosition::InsideKernel: return "inside_kernel";
    case KernelPosition::Unaffected: return "unaffected";
  }
  return "?";
}

DeviceState LinkedObject::device_state() const {
  if (transfer_here) {
    if (!is_module_object() && decl && is_dummy) {
      if (decl->intent == ast::Intent::In) return DeviceState::TransferIn;
      if (decl->intent == ast::Intent::Out) return DeviceState::TransferOut;
      return DeviceState::TransferInOut;
    }
    if (!is_module_object()) return DeviceState::Present; // local: allocation only
    return DeviceState::TransferInOut;                    // module objects default inout
  }
  if (present) return DeviceState::Present;
  return DeviceState::HostOnly;
}

const LinkedObject* RoutineEntry::object(const std::string& name) const {
  for (const LinkedObject& o : objects)
    if (same_ident(o.name, name)) return &o;
  return nullptr;
}

CallGraph build_call_graph(const std::vector<std::unique_ptr<Unit>>& units) {
  CallGraph g;
  for_each_routine(units, [&](RoutineDecl& r, const std::string&, Unit&) {
    g.nodes.push_back(to_lower(r.name));
  });
  std::sort(g.nodes.begin(), g.nodes.end());

  for_each_routine(units, [&](RoutineDecl& r, const std::string&, Unit&) {
    collect_calls(r.body, to_lower(r.name), nullptr, g.edges);
  });

  std::set<std::string> externals;
  for (const CallSite& e : g.edges)
    if (!g.has_node(e.callee) && !is_intrinsic_name(e.callee)) externals.insert(e.callee);
  g.external_callees.assign(externals.begin(), externals.end());
  return g;
}

namespace {

struct PositionScratch {
  std::set<std::string> contains, inside, above;
  std::map<std::string, const Stmt*> contains_witness;
  std::map<std::string, const Stmt*> inside_witness;
};

PositionScratch position_sets(const std::vector<std::unique_ptr<Unit>>& units,
                              const CallGraph& graph, Target target) {
  PositionScratch ps;
  for_each_routine(units, [&](RoutineDecl& r, const std::string&, Unit&) {
    ast::walk_stmts(r.body, [&](Stmt& s) {
      if (s.kind == Stmt::Kind::Region && s.region.applies_to(target)) {
        ps.contains.insert(to_lower(r.name));
        if (!ps.contains_witness.count(to_lower(r.name)))
          ps.contains_witness[to_lower(r.name)] = &s;
      }
    });
  });

  // Inside: reachable through calls made from within an applicable region.
  std::deque<std::string> work;
  auto mark_inside = [&](const std::string& routine, const Stmt* witness) {
    if (!graph.has_node(routine)) return;
    if (ps.inside.insert(routine).second) {
      ps.inside_witness[routine] = witness;
      work.push_back(routine);
    }
  };
  for (const CallSite& e : graph.edges)
    if (e.region && e.region->region.applies_to(target)) mark_inside(e.callee, e.region);
  while (!work.empty()) {
    std::string r = work.front();
    work.pop_front();
    for (const CallSite& e : graph.edges)
      if (e.caller == r) mark_inside(e.callee, ps.inside_witness[r]);
  }

  // Above: reaches a kernel-containing routine through its callees.
  std::map<std::string, std::vector<std::string>> callers;
  for (const CallSite& e : graph.edges) callers[e.callee].push_back(e.caller);
  std::deque<std::string> up(ps.contains.begin(), ps.contains.end());
  while (!up.empty()) {
    std::string r = up.front();
    up.pop_front();
    for (const std::string& caller : callers[r])
      if (ps.above.insert(caller).second) up.push_back(caller);
  }
  return ps;
}

} // namespace

std::map<std::string, KernelPosition> compute_kernel_positions(
    const std::vector<std::unique_ptr<Unit>>& units, const CallGraph& graph, Target target) {
  PositionScratch ps = position_sets(units, graph, target);

  for (const std::string& r : graph.nodes) {
    if (ps.contains.count(r) && ps.inside.count(r)) {
      const Stmt* own = ps.contains_witness[r];
      const Stmt* outer = ps.inside_witness[r];
      fail(ErrKind::Analyze,
           "nested kernels for target " + std::string(target_name(target)) + ": routine '" + r +
               "' contains a parallel region (" + own->loc.str() +
               ") but is itself called from inside the parallel region at " + outer->loc.str(),
           own->loc);
    }
  }
  for (const CallSite& e : graph.edges) {
    bool caller_in_kernel =
        ps.inside.count(e.caller) || (e.region && e.region->region.applies_to(target));
    if (caller_in_kernel && ps.contains.count(e.callee))
      fail(ErrKind::Analyze,
           "routine '" + e.callee +
               "' contains a parallel region but is called from device code in '" + e.caller +
               "' (target " + target_name(target) + ")",
           e.loc);
  }

  std::map<std::string, KernelPosition> out;
  for (const std::string& r : graph.nodes) {
    KernelPosition p = KernelPosition::Unaffected;
    if (ps.contains.count(r))
      p = KernelPosition::ContainsKernels;
    else if (ps.inside.count(r))
      p = KernelPosition::InsideKernel;
    else if (ps.above.count(r))
      p = KernelPosition::HostAboveKernels;
    out[r] = p;
  }

  // Recursion at or below kernel level is rejected; cycles above are fine.
  std::set<std::string> at_or_below;
  for (const auto& [r, p] : out)
    if (p == KernelPosition::ContainsKernels || p == KernelPosition::InsideKernel)
      at_or_below.insert(r);
  for (const std::string& start : at_or_below) {
    std::set<std::string> seen;
    std::deque<std::string> work{start};
    while (!work.empty()) {
      std::string r = work.front();
      work.pop_front();
      for (const CallSite& e : graph.edges) {
        if (e.caller != r || !at_or_below.count(e.callee)) continue;
        if (e.callee == start)
          fail(ErrKind::Analyze,
               "recursion at or below kernel level involving routine '" + start + "' (target " +
                   target_name(target) + ")",
               e.loc);
        if (seen.insert(e.callee).second) work.push_back(e.callee);
      }
    }
  }
  return out;
}

bool is_intrinsic_name(const std::string& name) {
  static const char* names[] = {"sqrt",
                                "ceiling",
                                "real",
                                "min",
                                "max",
                                "abs",
                                "dim3",
                                "cudafuncsetcacheconfig",
                                "cudagetlasterror",
                                "cudathreadsynchronize"};
  for (const char* n : names)
    if (same_ident(name, n)) return true;
  return false;
}

namespace {

class ModelBuilder {
public:
  explicit ModelBuilder(std::vector<std::unique_ptr<Unit>> units) {
    model_.units = std::move(units);
  }

  ApplicationModel take() { return std::move(model_); }

  void run() {
    index();
    model_.graph = build_call_graph(model_.units);
    link_objects();
    validate_refs();
    for (Target t : {Target::CPU, Target::GPU}) {
      TargetInfo& info = t == Target::CPU ? model_.cpu_info : model_.gpu_info;
      info.positions = compute_kernel_positions(model_.units, model_.graph, t);
      resolve_extensions(t, info);
    }
    validate_transfer_placement();
  }

private:
  ApplicationModel model_;

  void index() {
    for (const auto& unit : model_.units) {
      for (ast::ModuleDecl& m : unit->modules) {
        auto [it, fresh] = model_.modules.emplace(key(m.name), &m);
        if (!fresh) fail(ErrKind::Analyze, "module '" + m.name + "' defined more than once", m.loc);
        std::set<std::string> names;
        for (const VarDecl& v : m.vars)
          if (!names.insert(key(v.name)).second)
            fail(ErrKind::Analyze, "duplicate module variable '" + v.name + "'", v.loc);
      }
    }
    for_each_routine(model_.units, [&](RoutineDecl& r, const std::string& mod, Unit& unit) {
      RoutineEntry entry;
      entry.decl = &r;
      entry.module = mod;
      entry.unit = &unit;
      ast::walk_stmts(r.body, [&](Stmt& s) {
        if (s.kind == Stmt::Kind::Region) entry.regions.push_back(&s);
      });
      auto [it, fresh] = model_.routines.emplace(key(r.name), std::move(entry));
      if (!fresh) fail(ErrKind::Analyze, "routine '" + r.name + "' defined more than once", r.loc);
    });
  }

  // Pass 2 of the two-pass linking: resolve every spec'd object name against
  // locals and dummies first, then the imports gathered in pass 1.
  void link_objects() {
    for (auto& [rname, entry] : model_.routines) {
      check_import_conflicts(entry);
      for (const DomainDependantSpec& spec : entry.decl->dd_specs) {
        for (const std::string& obj : spec.object_names) {
          LinkedObject lo;
          lo.name = obj;
          lo.routine = entry.decl->name;
          lo.spec = &spec;
          lo.auto_dom = spec.auto_dom;
          lo.present = spec.present;
          lo.transfer_here = spec.transfer_here;
          lo.acc_macro = spec.acc_pp.empty() ? "AT" : spec.acc_pp;
          lo.dom_macro = spec.dom_pp.empty() ? "DOM" : spec.dom_pp;
          lo.explicit_domains = spec.explicit_domains;

          std::string mod;
          lo.decl = model_.find_visible(entry, obj, &mod);
          if (!lo.decl)
            fail(ErrKind::Analyze,
                 "object '" + obj + "' in @domainDependant is not declared in scope of '" +
                     entry.decl->name + "'" + candidate_names(entry),
                 spec.loc);
          lo.decl_module = mod;
          lo.is_dummy = entry.decl->is_dummy(obj);

          if (!lo.auto_dom && lo.explicit_domains.empty() && !lo.decl->is_scalar())
            fail(ErrKind::Analyze,
                 "object '" + obj + "' needs domName/domSize or autoDom (it is an array)",
                 spec.loc);
          if (entry.object(obj))
            fail(ErrKind::Analyze,
                 "object '" + obj + "' appears in more than one @domainDependant block of '" +
                     entry.decl->name + "'",
                 spec.loc);
          entry.objects.push_back(std::move(lo));
        }
      }
    }
  }

  void check_import_conflicts(const RoutineEntry& entry) {
    std::map<std::string, std::string> source; // imported name -> module
    for (const ast::UseImport& u : entry.decl->imports) {
      auto mit = model_.modules.find(key(u.module));
      if (mit == model_.modules.end())
        fail(ErrKind::Analyze, "use of unknown module '" + u.module + "'", u.loc);
      for (const std::string& n : u.names) {
        bool found = false;
        for (const VarDecl& v : mit->second->vars)
          if (same_ident(v.name, n)) found = true;
        if (!found)
          fail(ErrKind::Analyze, "module '" + u.module + "' has no object '" + n + "'", u.loc);
        auto [it, fresh] = source.emplace(key(n), u.module);
        if (!fresh && !same_ident(it->second, u.module))
          fail(ErrKind::Analyze,
               "'" + n + "' imported from both '" + it->second + "' and '" + u.module +
                   "' in routine '" + entry.decl->name + "'",
               u.loc);
        if (entry.decl->find_decl(n))
          fail(ErrKind::Analyze,
               "'" + n + "' both declared locally and imported from '" + u.module +
                   "' in routine '" + entry.decl->name + "'",
               u.loc);
      }
    }
  }

  std::string candidate_names(const RoutineEntry& entry) {
    std::vector<std::string> names;
    for (const VarDecl& d : entry.decl->decls) names.push_back(d.name);
    for (const ast::UseImport& u : entry.decl->imports)
      for (const std::string& n : u.names) names.push_back(n);
    if (names.empty()) return "";
    std::sort(names.begin(), names.end());
    std::string out = " (in scope: ";
    for (size_t i = 0; i < names.size() && i < 6; ++i) out += (i ? ", " : "") + names[i];
    if (names.size() > 6) out += ", ...";
    return out + ")";
  }

  // The frontend defers undeclared array references here: every reference
  // must resolve to a declaration, a region iterator, or an intrinsic.
  void validate_refs() {
    for (auto& [rname, entry] : model_.routines) {
      std::set<std::string> iterators;
      for (const Stmt* region : entry.regions)
        for (const std::string& d : region->region.dom_names) iterators.insert(key(d));
      ast::walk_stmts(entry.decl->body, [&](Stmt& s) {
        ast::walk_exprs(s, [&](ast::Expr& e) {
          if (e.kind != ast::Expr::Kind::Ref) return;
          if (is_intrinsic_name(e.text)) return;
          const VarDecl* d = model_.find_visible(entry, e.text, nullptr);
          if (!d) {
            if (model_.routines.count(key(e.text)) || iterators.count(key(e.text))) return;
            fail(ErrKind::Analyze,
                 "reference to undeclared name '" + e.text + "' in routine '" +
                     entry.decl->name + "'",
                 e.loc);
          }
          if (!d->is_scalar() && e.args.size() != d->dims.size())
            fail(ErrKind::Analyze,
                 "array '" + e.text + "' has rank " + std::to_string(d->dims.size()) +
                     " but is referenced with " + std::to_string(e.args.size()) + " indices",
                 e.loc);
        });
      });
    }
  }

  void resolve_extensions(Target target, TargetInfo& info) {
    for (auto& [rname, entry] : model_.routines) {
      std::vector<const Stmt*> scope = model_.regions_in_scope(entry, target);
      for (const LinkedObject& obj : entry.objects) {
        ObjectLayout layout;
        if (obj.transfer_here) {
          // Transfer specs manage device residency only; the layout of the
          // object is owned by the kernel-level specs.
          layout.acc_macro = obj.acc_macro;
          layout.dom_macro = obj.dom_macro;
        } else {
          layout = resolve_object(obj, scope, target);
        }
        if (obj.is_dummy) {
          // A dummy's storage order is the caller's business; wrapping it
          // here would disagree with the actual argument's layout.
          layout.active = false;
        }
        info.object_layouts[object_key(entry.decl->name, obj.name)] = layout;
        if (obj.is_module_object()) merge_module_layout(info, obj, layout, target);
      }
    }
  }

  ObjectLayout resolve_object(const LinkedObject& obj, const std::vector<const Stmt*>& scope,
                              Target target) {
    ObjectLayout layout;
    layout.acc_macro = obj.acc_macro;
    layout.dom_macro = obj.dom_macro;

    std::vector<std::string> dim_extents;
    for (const ast::Dim& d : obj.decl->dims) dim_extents.push_back(dim_extent_text(d));
    std::vector<bool> dim_bound(dim_extents.size(), false);

    std::map<std::string, std::string> seen_sizes; // matched domain -> size
    std::vector<std::pair<std::string, std::string>> missing;

    for (const Stmt* region_stmt : scope) {
      const ParallelRegionSpec& region = region_stmt->region;
      for (size_t d = 0; d < region.dom_names.size(); ++d) {
        const std::string& dom = region.dom_names[d];
        const std::string size = normalize_extent(region.dom_sizes[d]);

        // Relation by name through the object's own domName/domSize pairs;
        // a name match with a conflicting size is an error, never unified.
        bool relates = false;
        for (const auto& [ename, esize] : obj.explicit_domains) {
          if (!same_ident(ename, dom)) continue;
          if (normalize_extent(esize) != size)
            fail(ErrKind::Analyze,
                 "object '" + obj.name + "' binds domain '" + dom + "' with size '" + esize +
                     "' but the parallel region at " + region_stmt->loc.str() + " uses '" +
                     region.dom_sizes[d] + "'",
                 obj.spec->loc);
          relates = true;
        }

        // autoDom: a declared dim whose extent equals the region size carries
        // that domain already (presence only, no cross-name unification).
        int bound_dim = -1;
        if (obj.auto_dom) {
          for (size_t i = 0; i < dim_extents.size(); ++i) {
            if (dim_bound[i]) continue;
            if (dim_extents[i] == size) {
              bound_dim = static_cast<int>(i);
              break;
            }
          }
        }

        if (!relates && bound_dim < 0) continue;

        auto [it, fresh] = seen_sizes.emplace(key(dom), size);
        if (!fresh && it->second != size)
          fail(ErrKind::Analyze,
               "ambiguous domain '" + dom + "' for object '" + obj.name +
                   "': regions in scope disagree on its size ('" + it->second + "' vs '" + size +
                   "')",
               obj.spec->loc);

        layout.active = true;
        if (bound_dim >= 0) {
          dim_bound[bound_dim] = true;
        } else {
          bool already = false;
          for (const auto& [mname, msize] : missing)
            if (same_ident(mname, dom)) already = true;
          if (!already) missing.emplace_back(dom, region.dom_sizes[d]);
        }
      }
    }

    layout.extension = std::move(missing);
    if (!layout.extension.empty()) {
      if (obj.is_module_object())
        fail(ErrKind::Analyze,
             "module object '" + obj.name + "' would need dimension extension for target " +
                 target_name(target) + "; extension is only supported for routine-local objects",
             obj.spec->loc);
      if (obj.is_dummy)
        fail(ErrKind::Analyze,
             "dummy argument '" + obj.name + "' would need dimension extension for target " +
                 target_name(target) + "; extension is only supported for routine-local objects",
             obj.spec->loc);
      if (layout.extension.size() + obj.decl->dims.size() > 4)
        fail(ErrKind::Analyze,
             "object '" + obj.name + "' would have rank " +
                 std::to_string(layout.extension.size() + obj.decl->dims.size()) +
                 " after extension (maximum is 4)",
             obj.spec->loc);
    }
    return layout;
  }

  void merge_module_layout(TargetInfo& info, const LinkedObject& obj, const ObjectLayout& layout,
                           Target target) {
    std::string k = object_key(obj.decl_module, obj.name);
    auto it = info.module_layouts.find(k);
    if (it == info.module_layouts.end()) {
      info.module_layouts[k] = layout;
      return;
    }
    ObjectLayout& merged = it->second;
    if (layout.active) {
      if (merged.active &&
          (merged.acc_macro != layout.acc_macro || merged.dom_macro != layout.dom_macro))
        fail(ErrKind::Analyze,
             "module object '" + obj.name + "' is bound to ordering macro '" + layout.acc_macro +
                 "' in '" + obj.routine + "' but '" + merged.acc_macro + "' elsewhere (target " +
                 target_name(target) + ")",
             obj.spec->loc);
      merged.active = true;
      merged.acc_macro = layout.acc_macro;
      merged.dom_macro = layout.dom_macro;
    }
  }

  void validate_transfer_placement() {
    for (auto& [rname, entry] : model_.routines) {
      bool has_transfers = false;
      for (const LinkedObject& obj : entry.objects) {
        if (!obj.transfer_here) continue;
        has_transfers = true;
        if (model_.position(Target::GPU, rname) == KernelPosition::InsideKernel)
          fail(ErrKind::Analyze,
               "transferHere on '" + obj.name + "' in routine '" + entry.decl->name +
                   "', which runs inside a kernel",
               obj.spec->loc);
      }
      if (has_transfers) {
        ast::walk_stmts(entry.decl->body, [&](Stmt& s) {
          if (s.kind == Stmt::Kind::Return)
            fail(ErrKind::Analyze,
                 "routine '" + entry.decl->name +
                     "' performs device transfers and may not contain 'return'",
                 s.loc);
        });
      }
    }
  }
};

} // namespace

const RoutineEntry* ApplicationModel::find_routine(const std::string& name) const {
  auto it = routines.find(key(name));
  return it == routines.end() ? nullptr : &it->second;
}

const ast::ModuleDecl* ApplicationModel::find_module(const std::string& name) const {
  auto it = modules.find(key(name));
  return it == modules.end() ? nullptr : it->second;
}

KernelPosition ApplicationModel::position(Target t, const std::string& routine) const {
  const auto& positions = info(t).positions;
  auto it = positions.find(key(routine));
  return it == positions.end() ? KernelPosition::Unaffected : it->second;
}

const VarDecl* ApplicationModel::find_visible(const RoutineEntry& r, const std::string& name,
                                              std::string* module_out) const {
  if (const VarDecl* d = r.decl->find_decl(name)) {
    if (module_out) module_out->clear();
    return d;
  }
  for (const ast::UseImport& u : r.decl->imports) {
    bool listed = false;
    for (const std::string& n : u.names)
      if (same_ident(n, name)) listed = true;
    if (!listed) continue;
    auto mit = modules.find(key(u.module));
    if (mit == modules.end()) continue;
    for (const VarDecl& v : mit->second->vars)
      if (same_ident(v.name, name)) {
        if (module_out) *module_out = mit->second->name;
        return &v;
      }
  }
  return nullptr;
}

const ObjectLayout* ApplicationModel::layout_for(Target t, const RoutineEntry& r,
                                                 const std::string& name) const {
  const TargetInfo& ti = info(t);
  auto it = ti.object_layouts.find(object_key(r.decl->name, name));
  if (it != ti.object_layouts.end()) return &it->second;
  std::string mod;
  if (find_visible(r, name, &mod) && !mod.empty()) {
    auto mit = ti.module_layouts.find(object_key(mod, name));
    if (mit != ti.module_layouts.end()) return &mit->second;
  }
  return nullptr;
}

std::vector<const RoutineEntry*> ApplicationModel::callee_closure(const RoutineEntry& r) const {
  std::vector<const RoutineEntry*> out;
  std::set<std::string> seen;
  std::deque<std::string> work{to_lower(r.decl->name)};
  seen.insert(to_lower(r.decl->name));
  while (!work.empty()) {
    std::string cur = work.front();
    work.pop_front();
    auto it = routines.find(cur);
    if (it == routines.end()) continue;
    out.push_back(&it->second);
    for (const CallSite& e : graph.edges)
      if (e.caller == cur && seen.insert(e.callee).second) work.push_back(e.callee);
  }
  return out;
}

std::vector<const Stmt*> ApplicationModel::regions_in_scope(const RoutineEntry& r,
                                                            Target t) const {
  std::vector<const Stmt*> out;
  for (const RoutineEntry* entry : callee_closure(r))
    for (const Stmt* region : entry->regions)
      if (region->region.applies_to(t)) out.push_back(region);
  return out;
}

std::string ApplicationModel::dot_graph() const {
  std::ostringstream os;
  os << "digraph calls {\n";
  for (const auto& [name, entry] : routines) {
    os << "  \"" << entry.decl->name << "\" [label=\"" << entry.decl->name
       << "\\ncpu: " << position_name(position(Target::CPU, name))
       << "\\ngpu: " << position_name(position(Target::GPU, name)) << "\"];\n";
  }
  for (const CallSite& e : graph.edges) {
    const RoutineEntry* callee = find_routine(e.callee);
    os << "  \"" << find_routine(e.caller)->decl->name << "\" -> \""
       << (callee ? callee->decl->name : e.callee) << "\"";
    if (e.region) os << " [style=dashed, label=\"in-kernel\"]";
    os << ";\n";
  }
  for (const std::string& ext : graph.external_callees)
    os << "  \"" << ext << "\" [shape=box, style=dotted];\n";
  os << "}\n";
  return os.str();
}

ApplicationModel build_model(std::vector<std::unique_ptr<Unit>> units) {
  ModelBuilder b(std::move(units));
  b.run();
  return b.take();
}

} // namespace hft::analysis
