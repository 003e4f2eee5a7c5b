#ifndef HFT_CODEGEN_HPP
#define HFT_CODEGEN_HPP

#include "hft/analysis.hpp"
#include "hft/macro.hpp"

namespace hft::codegen {

enum class GpuBackend { CudaStyle, OpenAccStyle };

struct TargetConfig {
  Target architecture = Target::CPU;
  GpuBackend gpu_backend = GpuBackend::CudaStyle;
  macro::MacroTable macros;
  int column_limit = 132;
};

struct GeneratedFile {
  std::string name; // output base name, e.g. "surface_flux.f90"
  std::string text; // pre-expansion source, ordering macros still in place
};

// One output file per input file; macros unexpanded (the build pipeline
// splits, expands and re-splits).
std::vector<GeneratedFile> generate_target_tree(const analysis::ApplicationModel& model,
                                                const TargetConfig& config);

// Call-site resolution of the host/device routine duplication: the name a
// call to `callee` resolves to in a host context with or without device data.
std::string call_target(const analysis::ApplicationModel& model, const TargetConfig& config,
                        bool device_context, const std::string& callee);

// Capture sets for one parallel region: what a generated kernel receives.
struct RegionCapture {
  std::vector<std::string> value_scalars; // alphabetical
  std::vector<std::string> arrays;        // alphabetical
  std::vector<std::string> local_scalars; // assigned inside the region
};
RegionCapture collect_region_objects(const analysis::ApplicationModel& model,
                                     const analysis::RoutineEntry& entry, const ast::Stmt& region);

} // namespace hft::codegen

#endif
