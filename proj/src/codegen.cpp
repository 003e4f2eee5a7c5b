#include "hft/codegen.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hft/parser.hpp"
#include "hft/tokenize.hpp"

namespace hft::codegen {

using analysis::ApplicationModel;
using analysis::DeviceState;
using analysis::KernelPosition;
using analysis::LinkedObject;
using analysis::ObjectLayout;
using analysis::RoutineEntry;
using ast::Stmt;
using ast::VarDecl;

namespace {

struct Bounds {
  std::string start, end; // index expressions per dimension
  std::string extent;     // end - start + 1, simplified for the 1..n case
};

bool is_literal_one(const std::string& s) { return collapse_whitespace(s) == "1"; }

std::string paren_if_compound(const std::string& s) {
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return "(" + s + ")";
  return s;
}

// Region bounds per dimension: startAt/endAt override the domain size;
// a plain size n means 1..n, a sized range a:b means a..b.
std::vector<Bounds> region_bounds(const ParallelRegionSpec& region) {
  std::vector<Bounds> out;
  for (size_t d = 0; d < region.dom_names.size(); ++d) {
    Bounds b;
    std::string size = region.dom_sizes[d];
    int depth = 0;
    size_t colon = std::string::npos;
    for (size_t i = 0; i < size.size(); ++i) {
      if (size[i] == '(') ++depth;
      if (size[i] == ')') --depth;
      if (size[i] == ':' && depth == 0) colon = i;
    }
    if (colon != std::string::npos) {
      b.start = collapse_whitespace(size.substr(0, colon));
      b.end = collapse_whitespace(size.substr(colon + 1));
    } else {
      b.start = "1";
      b.end = collapse_whitespace(size);
    }
    if (!region.start_at.empty()) b.start = region.start_at[d];
    if (!region.end_at.empty()) b.end = region.end_at[d];
    b.extent = is_literal_one(b.start)
                   ? b.end
                   : paren_if_compound(b.end) + " - " + paren_if_compound(b.start) + " + 1";
    out.push_back(std::move(b));
  }
  return out;
}

struct Writer {
  std::ostringstream os;
  int level = 0;

  void line(const std::string& text) {
    if (!text.empty())
      for (int i = 0; i < level; ++i) os << "  ";
    os << text << "\n";
  }
  void blank() { os << "\n"; }
};

// Names a call resolves to inside generated device-data host code.
std::string device_host_name(const ApplicationModel& model, const std::string& callee) {
  KernelPosition p = model.position(Target::GPU, callee);
  if (p == KernelPosition::HostAboveKernels || p == KernelPosition::ContainsKernels)
    return "hfd_" + callee;
  return callee;
}

class Generator {
public:
  Generator(const ApplicationModel& model, const TargetConfig& cfg) : model_(model), cfg_(cfg) {}

  std::vector<GeneratedFile> run() {
    std::vector<GeneratedFile> out;
    for (const auto& unit : model_.units) {
      GeneratedFile f;
      f.name = output_name(unit->file);
      f.text = generate_unit(*unit);
      out.push_back(std::move(f));
    }
    return out;
  }

private:
  const ApplicationModel& model_;
  const TargetConfig& cfg_;

  static std::string output_name(const std::string& input) {
    std::string base = input;
    size_t slash = base.find_last_of('/');
    if (slash != std::string::npos) base = base.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    if (dot != std::string::npos) base = base.substr(0, dot);
    return base + ".f90";
  }

  Target target() const { return cfg_.architecture; }

  // ---- shared helpers ------------------------------------------------------

  const RoutineEntry& entry_of(const ast::RoutineDecl& r) const {
    const RoutineEntry* e = model_.find_routine(r.name);
    if (!e) fail(ErrKind::Codegen, "routine '" + r.name + "' missing from the model");
    return *e;
  }

  macro::WrapPlan wrap_plan(const RoutineEntry& entry) const {
    macro::WrapPlan plan;
    for (const LinkedObject& obj : entry.objects) {
      const ObjectLayout* layout = model_.layout_for(target(), entry, obj.name);
      if (!layout || !layout->active) continue;
      macro::WrapEntry we;
      we.acc_macro = layout->acc_macro;
      for (const auto& [dom, size] : layout->extension) we.ext_iterators.push_back(dom);
      plan[to_lower(obj.name)] = std::move(we);
    }
    // Module objects wrapped anywhere in this build wrap here as well.
    for (const ast::UseImport& u : entry.decl->imports) {
      for (const std::string& n : u.names) {
        if (plan.count(to_lower(n))) continue;
        std::string mod;
        const VarDecl* d = model_.find_visible(entry, n, &mod);
        if (!d || mod.empty()) continue;
        const ObjectLayout* layout = module_layout(mod, n);
        if (layout && layout->active) plan[to_lower(n)] = {layout->acc_macro, {}};
      }
    }
    return plan;
  }

  const ObjectLayout* module_layout(const std::string& mod, const std::string& name) const {
    const auto& layouts = model_.info(target()).module_layouts;
    auto it = layouts.find(to_lower(mod) + "." + to_lower(name));
    return it == layouts.end() ? nullptr : &it->second;
  }

  std::string decl_line(const VarDecl& d, const ObjectLayout* layout, bool device_attr,
                        bool value_attr) const {
    std::string out = ast::base_type_text(d.type);
    if (device_attr) out += ", device";
    if (value_attr) out += ", value";
    if (d.is_parameter) out += ", parameter";
    switch (d.intent) {
      case ast::Intent::In: out += ", intent(in)"; break;
      case ast::Intent::Out: out += ", intent(out)"; break;
      case ast::Intent::InOut: out += ", intent(inout)"; break;
      case ast::Intent::None: break;
    }
    out += " :: " + d.name;
    if (layout && layout->active) {
      std::vector<std::string> ext_sizes;
      for (const auto& [dom, size] : layout->extension) ext_sizes.push_back(size);
      out += "(" + macro::wrap_dim_list(layout->dom_macro, ext_sizes, d) + ")";
    } else if (!d.dims.empty()) {
      out += ast::print_dims(d.dims);
    }
    if (d.init) out += " = " + ast::print_expr(*d.init);
    return out;
  }

  // Arrays referenced lexically in a statement range, resolved in `entry`.
  std::set<std::string> referenced_arrays(const RoutineEntry& entry,
                                          const std::vector<ast::StmtPtr>& body) const {
    std::set<std::string> out;
    ast::walk_stmts(body, [&](const Stmt& s) {
      ast::walk_exprs(s, [&](const ast::Expr& e) {
        if (e.kind != ast::Expr::Kind::Ref && e.kind != ast::Expr::Kind::Var) return;
        const VarDecl* d = model_.find_visible(entry, e.text, nullptr);
        if (d && !d->is_scalar() && !d->is_parameter) out.insert(to_lower(e.text));
      });
    });
    return out;
  }

  std::string spelled_name(const RoutineEntry& entry, const std::string& lower) const {
    const VarDecl* d = model_.find_visible(entry, lower, nullptr);
    return d ? d->name : lower;
  }

  // ---- statement emission --------------------------------------------------

  enum class BodyMode {
    CpuHost,    // CPU target host code
    PureHost,   // GPU target, host-only duplicate: no device names
    DeviceHost, // GPU target, hfd_ host code: calls retargeted
    CudaKernel, // inside an extracted kernel: inner calls go to device hfd_
    AccRegion,  // inside an !$acc kernels block: plain names, seq loop marks
  };

  void emit_body(Writer& w, const RoutineEntry& entry, const std::vector<ast::StmtPtr>& body,
                 BodyMode mode, int& kernel_counter) {
    for (const ast::StmtPtr& sp : body) emit_stmt(w, entry, *sp, mode, kernel_counter);
  }

  void emit_stmt(Writer& w, const RoutineEntry& entry, const Stmt& s, BodyMode mode,
                 int& kernel_counter) {
    switch (s.kind) {
      case Stmt::Kind::Region:
        emit_region(w, entry, s, mode, kernel_counter++);
        return;
      case Stmt::Kind::Do: {
        if (mode == BodyMode::AccRegion) w.line("!$acc loop seq");
        std::string head = s.label.empty() ? "" : s.label + ": ";
        if (!s.source_text.empty())
          w.line(s.source_text);
        else
          w.line(head + "do " + s.do_var + " = " + ast::print_expr(*s.lower) + ", " +
                 ast::print_expr(*s.upper));
        ++w.level;
        for (const ast::StmtPtr& b : s.body) emit_stmt(w, entry, *b, mode, kernel_counter);
        --w.level;
        w.line(s.label.empty() ? "end do" : "end do " + s.label);
        return;
      }
      case Stmt::Kind::If: {
        bool verbatim = !s.source_text.empty();
        for (size_t i = 0; i < s.arms.size(); ++i) {
          const ast::IfArm& arm = s.arms[i];
          if (verbatim && !arm.head_text.empty())
            w.line(arm.head_text);
          else if (i == 0)
            w.line("if (" + ast::print_expr(*arm.cond) + ") then");
          else if (arm.cond)
            w.line("else if (" + ast::print_expr(*arm.cond) + ") then");
          else
            w.line("else");
          ++w.level;
          for (const ast::StmtPtr& b : arm.body) emit_stmt(w, entry, *b, mode, kernel_counter);
          --w.level;
        }
        w.line("end if");
        return;
      }
      case Stmt::Kind::Call: {
        std::string callee = s.callee;
        if (mode == BodyMode::DeviceHost) {
          callee = device_host_name(model_, to_lower(callee));
        } else if (mode == BodyMode::CudaKernel) {
          if (model_.position(Target::GPU, callee) == KernelPosition::InsideKernel)
            callee = "hfd_" + to_lower(callee);
        }
        if (same_ident(callee, s.callee) && !s.source_text.empty()) {
          w.line(s.source_text);
          return;
        }
        std::string text = "call " + callee + "(";
        for (size_t i = 0; i < s.args.size(); ++i)
          text += (i ? ", " : "") + ast::print_expr(*s.args[i]);
        w.line(text + ")");
        return;
      }
      default:
        w.line(s.source_text.empty() ? ast::print_stmt_line(s) : s.source_text);
        return;
    }
  }

  // ---- region lowering -----------------------------------------------------

  void emit_region(Writer& w, const RoutineEntry& entry, const Stmt& region, BodyMode mode,
                   int index) {
    const ParallelRegionSpec& spec = region.region;
    switch (mode) {
      case BodyMode::CpuHost:
        if (spec.applies_to(Target::CPU)) {
          emit_omp_nest(w, entry, region, index);
        } else if (model_.position(Target::CPU, entry.decl->name) ==
                   KernelPosition::InsideKernel) {
          // Covered by a coarser CPU kernel higher in the call graph: the
          // body runs per point with the inherited iterators, untouched.
          int k = 0;
          emit_body(w, entry, region.body, BodyMode::CpuHost, k);
        } else {
          emit_plain_loops(w, entry, region, BodyMode::CpuHost);
        }
        return;
      case BodyMode::PureHost:
        emit_plain_loops(w, entry, region, BodyMode::PureHost);
        return;
      case BodyMode::DeviceHost:
        if (spec.applies_to(Target::GPU)) {
          if (cfg_.gpu_backend == GpuBackend::CudaStyle)
            emit_cuda_launch(w, entry, region, index);
          else
            emit_acc_region(w, entry, region, index);
        } else if (region_covers_gpu_kernels(entry, region)) {
          // A coarse CPU-only wrapper over code that launches its own fine
          // kernels: run the body once, iterators pinned to the region start.
          std::vector<Bounds> bounds = region_bounds(spec);
          for (size_t d = 0; d < spec.dom_names.size(); ++d)
            w.line(spec.dom_names[d] + " = " + bounds[d].start);
          int k = 0;
          emit_body(w, entry, region.body, BodyMode::DeviceHost, k);
        } else {
          emit_plain_loops(w, entry, region, BodyMode::DeviceHost);
        }
        return;
      default:
        fail(ErrKind::Codegen, "parallel region nested in generated code", region.loc);
    }
  }

  bool region_covers_gpu_kernels(const RoutineEntry& entry, const Stmt& region) const {
    bool covered = false;
    ast::walk_stmts(region.body, [&](const Stmt& s) {
      if (s.kind == Stmt::Kind::Region && s.region.applies_to(Target::GPU)) covered = true;
      if (s.kind == Stmt::Kind::Call) {
        const RoutineEntry* callee = model_.find_routine(s.callee);
        if (callee && !model_.regions_in_scope(*callee, Target::GPU).empty()) covered = true;
      }
    });
    (void)entry;
    return covered;
  }

  // Loops over the region domain, last domain outermost.
  void open_loops(Writer& w, const ParallelRegionSpec& spec, const std::vector<Bounds>& bounds,
                  const std::string& outer_label) {
    for (size_t n = spec.dom_names.size(); n-- > 0;) {
      std::string head;
      if (n + 1 == spec.dom_names.size() && !outer_label.empty()) head = outer_label + ": ";
      w.line(head + "do " + spec.dom_names[n] + " = " + bounds[n].start + ", " + bounds[n].end);
    }
  }

  void close_loops(Writer& w, const ParallelRegionSpec& spec, const std::string& outer_label) {
    for (size_t n = 0; n < spec.dom_names.size(); ++n) {
      bool outermost = n + 1 == spec.dom_names.size();
      w.line(outermost && !outer_label.empty() ? "end do " + outer_label : "end do");
    }
  }

  void emit_plain_loops(Writer& w, const RoutineEntry& entry, const Stmt& region, BodyMode mode) {
    std::vector<Bounds> bounds = region_bounds(region.region);
    open_loops(w, region.region, bounds, "");
    ++w.level;
    int k = 0;
    emit_body(w, entry, region.body, mode, k);
    --w.level;
    close_loops(w, region.region, "");
  }

  void emit_omp_nest(Writer& w, const RoutineEntry& entry, const Stmt& region, int index) {
    const ParallelRegionSpec& spec = region.region;
    std::vector<Bounds> bounds = region_bounds(spec);

    std::string head = "!$OMP PARALLEL DO DEFAULT(firstprivate)";
    for (const ReduceClause& rc : spec.reduce)
      head += " REDUCTION(" + rc.op + ":" + rc.var + ")";
    std::set<std::string> arrays = referenced_arrays(entry, region.body);
    if (arrays.empty()) {
      w.line(head);
    } else {
      w.line(head + " &");
      std::string shared = "!$OMP& SHARED(";
      bool first = true;
      for (const std::string& a : arrays) {
        shared += (first ? "" : ", ") + spelled_name(entry, a);
        first = false;
      }
      w.line(shared + ")");
    }
    std::string label = "outerParallelLoop" + std::to_string(index);
    open_loops(w, spec, bounds, label);
    ++w.level;
    int k = 0;
    emit_body(w, entry, region.body, BodyMode::CpuHost, k);
    --w.level;
    close_loops(w, spec, label);
    w.line("!$OMP END PARALLEL DO");
  }

  // ---- CUDA-style backend --------------------------------------------------

  std::string block_macro(const ParallelRegionSpec& spec, char axis) const {
    return macro::block_size_macro(axis, spec.template_name);
  }

  void emit_cuda_launch(Writer& w, const RoutineEntry& entry, const Stmt& region, int index) {
    const ParallelRegionSpec& spec = region.region;
    if (!spec.reduce.empty())
      fail(ErrKind::Codegen,
           "reduction regions are not supported by the CUDA-style backend; "
           "use the OpenACC-style backend for this kernel",
           region.loc);
    if (spec.dom_names.size() > 3)
      fail(ErrKind::Codegen, "parallel regions of rank > 3 cannot map onto a launch grid",
           region.loc);

    std::vector<Bounds> bounds = region_bounds(spec);
    std::string kernel = "hfk" + std::to_string(index) + "_" + entry.decl->name;
    RegionCapture cap = collect_region_objects(model_, entry, region);

    w.line("cuerror = cudaFuncSetCacheConfig(" + kernel + ", cudaFuncCachePreferL1)");
    w.line("cuerror = cudaGetLastError()");
    w.line("if (cuerror .NE. cudaSuccess) then");
    ++w.level;
    w.line("stop 1");
    --w.level;
    w.line("end if");
    const char* axes = "XYZ";
    const char* names[3] = {"cugridSizeX", "cugridSizeY", "cugridSizeZ"};
    for (int d = 0; d < 3; ++d) {
      if (d < static_cast<int>(bounds.size()))
        w.line(std::string(names[d]) + " = ceiling(real(" + bounds[d].extent + ") / real(" +
               block_macro(spec, axes[d]) + "))");
      else
        w.line(std::string(names[d]) + " = 1");
    }
    w.line("cugrid = dim3(cugridSizeX, cugridSizeY, cugridSizeZ)");
    std::string blocks;
    for (int d = 0; d < 3; ++d) {
      if (d) blocks += ", ";
      blocks += d < static_cast<int>(bounds.size()) ? block_macro(spec, axes[d]) : "1";
    }
    w.line("cublock = dim3(" + blocks + ")");

    std::string args;
    for (const std::string& s : cap.value_scalars)
      args += (args.empty() ? "" : ", ") + spelled_name(entry, s);
    for (const std::string& a : cap.arrays)
      args += (args.empty() ? "" : ", ") + spelled_name(entry, a);
    w.line("call " + kernel + " <<< cugrid, cublock >>>(" + args + ")");
    w.line("cuerror = cudaThreadSynchronize()");
    w.line("cuerror = cudaGetLastError()");
    w.line("if (cuerror .NE. cudaSuccess) then");
    ++w.level;
    w.line("stop 1");
    --w.level;
    w.line("end if");
  }

  void emit_cuda_kernel(Writer& w, const RoutineEntry& entry, const Stmt& region, int index) {
    const ParallelRegionSpec& spec = region.region;
    std::vector<Bounds> bounds = region_bounds(spec);
    std::string kernel = "hfk" + std::to_string(index) + "_" + entry.decl->name;
    RegionCapture cap = collect_region_objects(model_, entry, region);

    std::string params;
    for (const std::string& s : cap.value_scalars)
      params += (params.empty() ? "" : ", ") + spelled_name(entry, s);
    for (const std::string& a : cap.arrays)
      params += (params.empty() ? "" : ", ") + spelled_name(entry, a);

    w.line("attributes(global) subroutine " + kernel + "(" + params + ")");
    ++w.level;
    w.line("use cudafor, only : dim3");
    for (const ast::UseImport& u : entry.decl->imports) {
      std::string text = "use " + u.module + ", only : ";
      for (size_t i = 0; i < u.names.size(); ++i) text += (i ? ", " : "") + u.names[i];
      w.line(text);
    }
    w.line("implicit none");

    for (const std::string& a : cap.arrays) {
      const VarDecl* d = model_.find_visible(entry, a, nullptr);
      const ObjectLayout* layout = model_.layout_for(target(), entry, a);
      VarDecl kd = d->clone();
      kd.intent = ast::Intent::None;
      w.line(decl_line(kd, layout, /*device=*/true, /*value=*/false));
    }
    for (const std::string& s : cap.value_scalars) {
      const VarDecl* d = model_.find_visible(entry, s, nullptr);
      VarDecl kd = d->clone();
      kd.intent = ast::Intent::None;
      w.line(decl_line(kd, nullptr, false, /*value=*/true));
    }
    for (const std::string& iter : spec.dom_names) w.line("integer(4) :: " + iter);
    for (const std::string& s : cap.local_scalars) {
      const VarDecl* d = model_.find_visible(entry, s, nullptr);
      VarDecl kd = d->clone();
      kd.intent = ast::Intent::None;
      w.line(decl_line(kd, nullptr, false, false));
    }
    w.blank();

    const char* axes = "xyz";
    for (size_t d = 0; d < spec.dom_names.size(); ++d) {
      std::string formula = std::string("(blockidx%") + axes[d] + " - 1) * blockdim%" + axes[d] +
                            " + threadidx%" + axes[d];
      if (!is_literal_one(bounds[d].start))
        formula += " + " + paren_if_compound(bounds[d].start) + " - 1";
      w.line(spec.dom_names[d] + " = " + formula);
    }
    std::string guard;
    for (size_t d = 0; d < spec.dom_names.size(); ++d) {
      if (d) guard += " .OR. ";
      guard += spec.dom_names[d] + " .GT. " + bounds[d].end;
    }
    w.line("if (" + guard + ") then");
    ++w.level;
    w.line("return");
    --w.level;
    w.line("end if");
    w.line("! *** loop body *** :");

    int k = 0;
    emit_body(w, entry, region.body, BodyMode::CudaKernel, k);
    --w.level;
    w.line("end subroutine");
  }

  // ---- OpenACC-style backend -----------------------------------------------

  void emit_acc_region(Writer& w, const RoutineEntry& entry, const Stmt& region, int index) {
    const ParallelRegionSpec& spec = region.region;
    std::vector<Bounds> bounds = region_bounds(spec);

    std::set<std::string> arrays = referenced_arrays(entry, region.body);
    std::string head = "!$acc kernels";
    for (const std::string& a : arrays) {
      const LinkedObject* obj = entry.object(a);
      bool device = obj && obj->device_state() != DeviceState::HostOnly;
      if (!obj) {
        // Module objects spec'd elsewhere still live on the device.
        std::string mod;
        model_.find_visible(entry, a, &mod);
        if (!mod.empty()) {
          for (const auto& [rn, re] : model_.routines) {
            const LinkedObject* other = re.object(a);
            if (other && other->is_module_object() &&
                other->device_state() != DeviceState::HostOnly)
              device = true;
          }
        }
      }
      if (device) head += " deviceptr(" + spelled_name(entry, a) + ")";
    }
    w.line(head);

    std::string reduction;
    for (const ReduceClause& rc : spec.reduce) reduction += " reduction(" + rc.op + ":" + rc.var + ")";

    std::string label = "outerParallelLoop" + std::to_string(index);
    const char* axes = "XYZ";
    for (size_t n = spec.dom_names.size(); n-- > 0;) {
      w.line("!$acc loop independent vector(" + block_macro(spec, axes[n]) + ")" + reduction);
      std::string head_do;
      if (n + 1 == spec.dom_names.size()) head_do = label + ": ";
      w.line(head_do + "do " + spec.dom_names[n] + "=" + bounds[n].start + "," + bounds[n].end);
    }
    ++w.level;
    int k = 0;
    emit_body(w, entry, region.body, BodyMode::AccRegion, k);
    --w.level;
    close_loops(w, spec, label);
    w.line("!$acc end kernels");
  }

  // ---- transfers -----------------------------------------------------------

  std::vector<const LinkedObject*> transfer_objects(const RoutineEntry& entry) const {
    std::vector<const LinkedObject*> out;
    for (const LinkedObject& obj : entry.objects)
      if (obj.transfer_here) out.push_back(&obj);
    std::sort(out.begin(), out.end(), [](const LinkedObject* a, const LinkedObject* b) {
      return to_lower(a->name) < to_lower(b->name);
    });
    return out;
  }

  void emit_transfers_in(Writer& w, const RoutineEntry& entry) {
    for (const LinkedObject* obj : transfer_objects(entry)) {
      switch (obj->device_state()) {
        case DeviceState::TransferIn:
        case DeviceState::TransferInOut:
          w.line("call hfrt_copy_to_device(" + obj->name + ")");
          break;
        default:
          w.line("call hfrt_device_allocate(" + obj->name + ")");
          break;
      }
    }
  }

  void emit_transfers_out(Writer& w, const RoutineEntry& entry) {
    for (const LinkedObject* obj : transfer_objects(entry)) {
      DeviceState st = obj->device_state();
      if (st == DeviceState::TransferOut || st == DeviceState::TransferInOut)
        w.line("call hfrt_copy_from_device(" + obj->name + ")");
    }
  }

  // ---- routine variants ----------------------------------------------------

  void ensure_iterator_decls(ast::RoutineDecl& r) {
    std::set<std::string> needed;
    ast::walk_stmts(r.body, [&](Stmt& s) {
      if (s.kind == Stmt::Kind::Region)
        for (const std::string& d : s.region.dom_names) needed.insert(to_lower(d));
    });
    for (const std::string& n : needed) {
      if (r.find_decl(n)) continue;
      VarDecl d;
      d.name = n;
      d.type = ast::BaseType::Integer;
      r.decls.push_back(std::move(d));
    }
  }

  // Emits one routine variant: wrapped declarations, spec blocks dropped,
  // body with regions lowered per mode.
  void emit_routine_variant(Writer& w, const RoutineEntry& entry, const std::string& name,
                            BodyMode mode, bool device_decls, bool with_transfers,
                            ast::RoutineAttr attr = ast::RoutineAttr::None) {
    ast::RoutineDecl r = ast::clone_routine(*entry.decl);
    r.name = name;
    ensure_iterator_decls(r);
    macro::WrapPlan plan = wrap_plan(entry);
    macro::wrap_accesses(r.body, plan);

    std::string head;
    if (attr == ast::RoutineAttr::Global) head = "attributes(global) ";
    if (attr == ast::RoutineAttr::Device) head = "attributes(device) ";
    head += "subroutine " + name + "(";
    for (size_t i = 0; i < r.dummy_args.size(); ++i) head += (i ? ", " : "") + r.dummy_args[i];
    w.line(head + ")");
    ++w.level;

    bool cuda_host = device_decls && cfg_.gpu_backend == GpuBackend::CudaStyle &&
                     model_.position(Target::GPU, entry.decl->name) ==
                         KernelPosition::ContainsKernels;
    if (cuda_host) w.line("use cudafor, only : dim3");
    for (const ast::UseImport& u : r.imports) {
      std::string text = "use " + u.module + ", only : ";
      for (size_t i = 0; i < u.names.size(); ++i) text += (i ? ", " : "") + u.names[i];
      w.line(text);
    }
    w.line("implicit none");

    for (const VarDecl& d : r.decls) {
      const ObjectLayout* layout = model_.layout_for(target(), entry, d.name);
      bool dev = false;
      if (device_decls && !d.is_scalar()) {
        const LinkedObject* obj = entry.object(d.name);
        dev = obj && obj->device_state() != DeviceState::HostOnly;
      }
      w.line(decl_line(d, layout, dev, false));
    }
    if (cuda_host) {
      w.line("type(dim3) :: cugrid, cublock");
      w.line("integer(4) :: cugridSizeX, cugridSizeY, cugridSizeZ, cuerror, cuErrorMemcopy");
    }
    w.blank();

    if (with_transfers) emit_transfers_in(w, entry);
    int kernel_counter = 0;
    emit_body(w, entry, r.body, mode, kernel_counter);
    if (with_transfers) emit_transfers_out(w, entry);
    --w.level;
    w.line("end subroutine");
  }

  void emit_cuda_kernels_for(Writer& w, const RoutineEntry& entry) {
    ast::RoutineDecl r = ast::clone_routine(*entry.decl);
    macro::WrapPlan plan = wrap_plan(entry);
    macro::wrap_accesses(r.body, plan);
    int index = 0;
    ast::walk_stmts(r.body, [&](Stmt& s) {
      if (s.kind != Stmt::Kind::Region) return;
      if (s.region.applies_to(Target::GPU)) {
        w.blank();
        emit_cuda_kernel(w, entry, s, index);
      }
      ++index;
    });
  }

  // ---- per-routine dispatch --------------------------------------------------

  void emit_routine(Writer& w, const ast::RoutineDecl& decl) {
    const RoutineEntry& entry = entry_of(decl);
    const std::string& name = decl.name;
    KernelPosition pos = model_.position(target(), name);
    bool has_transfers = !transfer_objects(entry).empty();

    if (target() == Target::CPU) {
      emit_routine_variant(w, entry, name, BodyMode::CpuHost, false, false);
      return;
    }

    switch (pos) {
      case KernelPosition::Unaffected:
        emit_routine_variant(w, entry, name, BodyMode::PureHost, false, false);
        return;
      case KernelPosition::InsideKernel:
        if (cfg_.gpu_backend == GpuBackend::CudaStyle) {
          emit_routine_variant(w, entry, name, BodyMode::PureHost, false, false);
          w.blank();
          emit_routine_variant(w, entry, "hfd_" + to_lower(name), BodyMode::CudaKernel,
                               /*device_decls=*/true, false, ast::RoutineAttr::Device);
        } else {
          emit_routine_variant(w, entry, name, BodyMode::PureHost, false, false);
        }
        return;
      case KernelPosition::HostAboveKernels:
        emit_routine_variant(w, entry, name, BodyMode::PureHost, false, false);
        w.blank();
        emit_routine_variant(w, entry, "hfd_" + to_lower(name), BodyMode::DeviceHost, true,
                             has_transfers);
        return;
      case KernelPosition::ContainsKernels:
        emit_routine_variant(w, entry, name, BodyMode::PureHost, false, false);
        w.blank();
        emit_routine_variant(w, entry, "hfd_" + to_lower(name), BodyMode::DeviceHost, true,
                             has_transfers);
        if (cfg_.gpu_backend == GpuBackend::CudaStyle) emit_cuda_kernels_for(w, entry);
        return;
    }
  }

  std::string generate_unit(const ast::Unit& unit) {
    Writer w;
    w.line("! generated by hft for target " + std::string(target_name(target())) +
           (target() == Target::GPU
                ? std::string(" (") +
                      (cfg_.gpu_backend == GpuBackend::CudaStyle ? "cuda" : "openacc") + ")"
                : ""));
    for (const ast::ModuleDecl& m : unit.modules) {
      w.line("module " + m.name);
      ++w.level;
      w.line("implicit none");
      for (const VarDecl& d : m.vars) {
        const ObjectLayout* layout = module_layout(m.name, d.name);
        w.line(decl_line(d, layout && layout->active ? layout : nullptr, false, false));
      }
      --w.level;
      if (!m.routines.empty()) {
        w.line("contains");
        for (const ast::RoutineDecl& r : m.routines) {
          w.blank();
          ++w.level;
          emit_routine(w, r);
          --w.level;
        }
      }
      w.line("end module");
      w.blank();
    }
    for (const ast::RoutineDecl& r : unit.bare_routines) {
      emit_routine(w, r);
      w.blank();
    }
    return w.os.str();
  }
};

} // namespace

RegionCapture collect_region_objects(const ApplicationModel& model, const RoutineEntry& entry,
                                     const Stmt& region) {
  std::set<std::string> iterators;
  for (const std::string& d : region.region.dom_names) iterators.insert(to_lower(d));

  std::set<std::string> read_names, written_scalars, array_names;

  auto classify = [&](const std::string& raw, bool written) {
    std::string name = to_lower(raw);
    if (iterators.count(name) || analysis::is_intrinsic_name(name)) return;
    if (model.find_routine(name)) return;
    const VarDecl* d = model.find_visible(entry, name, nullptr);
    if (!d || d->is_parameter) return;
    if (!d->is_scalar()) {
      array_names.insert(name);
      return;
    }
    if (written)
      written_scalars.insert(name);
    else
      read_names.insert(name);
  };

  ast::walk_stmts(region.body, [&](const Stmt& s) {
    if (s.kind == Stmt::Kind::Assign && s.lhs->kind == ast::Expr::Kind::Var)
      classify(s.lhs->text, true);
    if (s.kind == Stmt::Kind::Call) {
      // A scalar passed to an out/inout dummy counts as written.
      const RoutineEntry* callee = model.find_routine(s.callee);
      for (size_t i = 0; i < s.args.size(); ++i) {
        const ast::Expr& a = *s.args[i];
        if (a.kind != ast::Expr::Kind::Var) continue;
        bool written = false;
        if (callee && i < callee->decl->dummy_args.size()) {
          ast::Intent intent = callee->decl->dummy_intent(callee->decl->dummy_args[i]);
          written = intent == ast::Intent::Out || intent == ast::Intent::InOut;
        }
        if (written) classify(a.text, true);
      }
    }
    ast::walk_exprs(s, [&](const ast::Expr& e) {
      if (e.kind == ast::Expr::Kind::Var || e.kind == ast::Expr::Kind::Ref)
        classify(e.text, false);
    });
  });

  // Names in the region bounds and in captured arrays' dimension expressions
  // must reach the kernel too.
  auto add_expr_names = [&](const std::string& text) {
    if (text.empty()) return;
    for (const Token& t : tokenize(text, {}))
      if (t.kind == Token::Kind::Ident) classify(t.text, false);
  };
  for (const std::string& s : region.region.dom_sizes) add_expr_names(s);
  for (const std::string& s : region.region.start_at) add_expr_names(s);
  for (const std::string& s : region.region.end_at) add_expr_names(s);

  std::set<std::string> pending = array_names;
  for (const std::string& a : pending) {
    const VarDecl* d = model.find_visible(entry, a, nullptr);
    for (const ast::Dim& dim : d->dims) {
      if (dim.lower) add_expr_names(ast::print_expr(*dim.lower));
      add_expr_names(ast::print_expr(*dim.upper));
    }
    const ObjectLayout* layout = model.layout_for(Target::GPU, entry, a);
    if (layout)
      for (const auto& [dom, size] : layout->extension) add_expr_names(size);
  }

  RegionCapture cap;
  for (const std::string& n : read_names)
    if (!written_scalars.count(n)) cap.value_scalars.push_back(n);
  for (const std::string& n : written_scalars) cap.local_scalars.push_back(n);
  cap.arrays.assign(array_names.begin(), array_names.end());
  return cap;
}

std::string call_target(const ApplicationModel& model, const TargetConfig&, bool device_context,
                        const std::string& callee) {
  if (!device_context) return to_lower(callee);
  return device_host_name(model, to_lower(callee));
}

std::vector<GeneratedFile> generate_target_tree(const ApplicationModel& model,
                                                const TargetConfig& config) {
  return Generator(model, config).run();
}

} // namespace hft::codegen
