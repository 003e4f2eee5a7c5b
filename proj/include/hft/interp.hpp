#ifndef HFT_INTERP_HPP
#define HFT_INTERP_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hft/ast.hpp"

namespace hft::interp {

enum class ThreadOrder { Forward, Reverse, Shuffled };

struct ArrayValue {
  ast::BaseType type = ast::BaseType::Real;
  std::vector<long long> lower, upper; // inclusive bounds per dim
  std::vector<double> reals;
  std::vector<long long> ints;
  std::vector<uint8_t> logicals;
  std::vector<uint8_t> init;
  bool on_device = false; // buffer lives in the device environment

  size_t size() const;
  int rank() const { return static_cast<int>(lower.size()); }
  long long extent(int d) const { return upper[d] - lower[d] + 1; }
};

enum class Residency { Host, Device, Both };

// A module data object: host buffer plus the device copy created by
// transfer events, with whole-object staleness tracking.
struct ObjectSlot {
  std::shared_ptr<ArrayValue> host;
  std::shared_ptr<ArrayValue> device;
  Residency residency = Residency::Host;
};

struct ScalarValue {
  ast::BaseType type = ast::BaseType::Real;
  double r = 0.0;
  long long i = 0;
  bool b = false;
  long long d3[3] = {1, 1, 1}; // dim3
  bool initialized = false;
};

struct MachineState {
  // module name -> object name -> value (keys lower case)
  std::map<std::string, std::map<std::string, ScalarValue>> scalars;
  std::map<std::string, std::map<std::string, ObjectSlot>> arrays;
  int stop_code = -1; // >= 0 once the program executed `stop`

  ScalarValue* find_scalar(const std::string& module, const std::string& name);
  ObjectSlot* find_slot(const std::string& module, const std::string& name);
  // Search across modules (unique names assumed by the corpus checks).
  ObjectSlot* find_slot_any(const std::string& name);
  ScalarValue* find_scalar_any(const std::string& name);
};

struct RunOptions {
  bool gpu = false;                  // device semantics: transfers, launches
  bool validate_omp = false;         // OMP SHARED coverage checks
  bool reference_lowering = false;   // lower @parallelRegion by coverage
  bool flip_parallel_loops = false;  // interchange the top two parallel loops
  ThreadOrder order = ThreadOrder::Forward;
  uint64_t shuffle_seed = 0x5eed;
  long max_steps = 200 * 1000 * 1000; // runaway guard
};

struct LaunchStats {
  long launches = 0;
  long threads = 0;
  long guard_returns = 0;
};

class Program {
public:
  explicit Program(std::vector<std::unique_ptr<ast::Unit>> units);
  static Program from_units(std::vector<ast::Unit> units);

  const ast::RoutineDecl* find_routine(const std::string& name) const;
  const ast::ModuleDecl* module_of(const std::string& routine) const;
  bool has_routine(const std::string& name) const { return find_routine(name) != nullptr; }

  // Module scalars become available (parameters evaluated); arrays are not
  // yet allocated so scenario inputs can set the extents first.
  MachineState prepare_state() const;
  void elaborate_arrays(MachineState& state) const;

  const std::vector<std::unique_ptr<ast::Unit>>& units() const { return units_; }

  // Reference lowering needs per-routine coverage: inline a GPU-only region
  // when a coarser CPU kernel above already iterates the domain.
  void compute_reference_positions();
  bool inline_region_for_reference(const std::string& routine) const;

private:
  friend class Executor;
  std::vector<std::unique_ptr<ast::Unit>> units_;
  struct Entry {
    const ast::RoutineDecl* decl;
    const ast::ModuleDecl* module;
  };
  std::map<std::string, Entry> routines_;
  std::vector<const ast::ModuleDecl*> modules_;
  std::map<std::string, bool> reference_inline_;
};

// Runs `entry` to completion, mutating `state`. Throws hft::Error with the
// appropriate kind on runtime, residency, race and validation defects.
LaunchStats run_program(const Program& program, MachineState& state, const std::string& entry,
                        const RunOptions& options);

// Convenience wrappers naming the three oracle modes.
LaunchStats run_reference(Program& program, MachineState& state, const std::string& entry,
                          RunOptions options = {});
LaunchStats run_cpu_generated(const Program& program, MachineState& state,
                              const std::string& entry, RunOptions options = {});
LaunchStats run_gpu_simulated(const Program& program, MachineState& state,
                              const std::string& entry, RunOptions options = {});

uint64_t splitmix64(uint64_t x);

} // namespace hft::interp

#endif
