#ifndef HFT_ANALYSIS_HPP
#define HFT_ANALYSIS_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "hft/ast.hpp"

namespace hft::analysis {

struct CallSite {
  std::string caller;
  std::string callee;
  SourceLoc loc;
  const ast::Stmt* region = nullptr; // enclosing parallel region, if any
};

struct CallGraph {
  std::vector<std::string> nodes; // defined routines, sorted, lower-case
  std::vector<CallSite> edges;    // deterministic order
  std::vector<std::string> external_callees;

  bool has_node(const std::string& name) const;
};

enum class KernelPosition { HostAboveKernels, ContainsKernels, InsideKernel, Unaffected };
const char* position_name(KernelPosition p);

enum class DeviceState { HostOnly, Present, TransferIn, TransferOut, TransferInOut };

// One data object named in a @domainDependant spec, linked to its declaration.
struct LinkedObject {
  std::string name;
  std::string routine;
  const DomainDependantSpec* spec = nullptr;
  const ast::VarDecl* decl = nullptr;
  std::string decl_module; // empty: local or dummy of `routine`
  bool is_dummy = false;
  bool auto_dom = false;
  bool present = false;
  bool transfer_here = false;
  std::string acc_macro; // effective, defaults applied
  std::string dom_macro;
  std::vector<std::pair<std::string, std::string>> explicit_domains;

  bool is_module_object() const { return !decl_module.empty(); }
  DeviceState device_state() const;
};

// Per-target result of dimension-extension resolution for one object.
struct ObjectLayout {
  bool active = false; // accesses and declarations carry ordering macros
  std::vector<std::pair<std::string, std::string>> extension; // prepended (name, size)
  std::string acc_macro;
  std::string dom_macro;
};

struct RoutineEntry {
  ast::RoutineDecl* decl = nullptr;
  std::string module; // empty for bare routines
  ast::Unit* unit = nullptr;
  std::vector<ast::Stmt*> regions; // lexical order
  std::vector<LinkedObject> objects;

  const LinkedObject* object(const std::string& name) const;
};

struct TargetInfo {
  std::map<std::string, KernelPosition> positions;       // routine (lower) -> position
  std::map<std::string, ObjectLayout> object_layouts;    // "routine.object" (lower)
  std::map<std::string, ObjectLayout> module_layouts;    // "module.object" (lower)
};

struct ApplicationModel {
  std::vector<std::unique_ptr<ast::Unit>> units;
  std::map<std::string, RoutineEntry> routines;      // key: lower routine name
  std::map<std::string, ast::ModuleDecl*> modules;   // key: lower module name
  CallGraph graph;
  TargetInfo cpu_info, gpu_info;

  const RoutineEntry* find_routine(const std::string& name) const;
  const ast::ModuleDecl* find_module(const std::string& name) const;
  const TargetInfo& info(Target t) const { return t == Target::CPU ? cpu_info : gpu_info; }
  KernelPosition position(Target t, const std::string& routine) const;

  // Declaration visible from a routine: local/dummy first, then imports.
  const ast::VarDecl* find_visible(const RoutineEntry& r, const std::string& name,
                                   std::string* module_out = nullptr) const;

  // Layout governing `name` inside `routine` for the target: the routine's
  // own spec if there is one, else the build-wide module-object layout.
  const ObjectLayout* layout_for(Target t, const RoutineEntry& r, const std::string& name) const;

  // Transitive callees including the routine itself, in BFS order.
  std::vector<const RoutineEntry*> callee_closure(const RoutineEntry& r) const;

  // Applicable regions in the routine or its callees, deterministic order.
  std::vector<const ast::Stmt*> regions_in_scope(const RoutineEntry& r, Target t) const;

  std::string dot_graph() const;
};

CallGraph build_call_graph(const std::vector<std::unique_ptr<ast::Unit>>& units);

std::map<std::string, KernelPosition> compute_kernel_positions(
    const std::vector<std::unique_ptr<ast::Unit>>& units, const CallGraph& graph, Target target);

ApplicationModel build_model(std::vector<std::unique_ptr<ast::Unit>> units);

bool is_intrinsic_name(const std::string& name);

} // namespace hft::analysis

#endif
