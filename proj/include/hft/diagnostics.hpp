#ifndef HFT_DIAGNOSTICS_HPP
#define HFT_DIAGNOSTICS_HPP

#include <stdexcept>
#include <string>

namespace hft {

struct SourceLoc {
  std::string file;
  int line = 0;

  bool valid() const { return !file.empty() || line > 0; }
  std::string str() const {
    if (!valid()) return "<unknown>";
    return file + ":" + std::to_string(line);
  }
};

// Families map onto CLI exit codes, one per pipeline phase.
enum class ErrKind {
  Config,
  Parse,      // merge, directive and frontend errors
  Analyze,    // call graph, positions, linking, extension
  Codegen,    // backend generation
  Expand,     // macro expansion
  Runtime,    // interpreter: bounds, unset reads, bad calls
  Residency,  // device data state violations
  Race,       // simulated-launch write conflicts
  Validation, // generated-code self checks (SHARED lists etc.)
  Io,
};

const char* err_kind_name(ErrKind k);

class Error : public std::runtime_error {
public:
  Error(ErrKind kind, std::string message, SourceLoc loc = {})
      : std::runtime_error(loc.valid() ? loc.str() + ": " + message : message),
        kind_(kind), loc_(std::move(loc)) {}

  ErrKind kind() const { return kind_; }
  const SourceLoc& loc() const { return loc_; }

private:
  ErrKind kind_;
  SourceLoc loc_;
};

[[noreturn]] inline void fail(ErrKind kind, std::string message, SourceLoc loc = {}) {
  throw Error(kind, std::move(message), std::move(loc));
}

} // namespace hft

#endif
