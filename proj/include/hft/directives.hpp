#ifndef HFT_DIRECTIVES_HPP
#define HFT_DIRECTIVES_HPP

#include <optional>
#include <string>
#include <vector>

#include "hft/source_text.hpp"

namespace hft {

enum class Target { CPU, GPU };
const char* target_name(Target t);

struct ReduceClause {
  std::string op;  // +, *, min, max
  std::string var;
  bool operator==(const ReduceClause&) const = default;
};

struct ParallelRegionSpec {
  std::vector<std::string> dom_names;
  std::vector<std::string> dom_sizes; // extent expressions, possibly "lo:hi"
  std::vector<std::string> start_at;  // empty = default to domain lower bounds
  std::vector<std::string> end_at;
  std::string template_name; // macro suffix for block-size parameters
  bool applies_cpu = false;  // both false = applies to every target
  bool applies_gpu = false;
  std::vector<ReduceClause> reduce;
  SourceLoc loc;

  bool applies_to(Target t) const {
    if (!applies_cpu && !applies_gpu) return true;
    return t == Target::CPU ? applies_cpu : applies_gpu;
  }
  bool operator==(const ParallelRegionSpec& o) const {
    return dom_names == o.dom_names && dom_sizes == o.dom_sizes && start_at == o.start_at &&
           end_at == o.end_at && template_name == o.template_name &&
           applies_cpu == o.applies_cpu && applies_gpu == o.applies_gpu && reduce == o.reduce;
  }
};

struct DomainDependantSpec {
  std::vector<std::string> object_names;
  bool auto_dom = false;
  bool present = false;
  bool transfer_here = false;
  std::vector<std::pair<std::string, std::string>> explicit_domains; // (dom name, size)
  std::string acc_pp; // empty = default access macro
  std::string dom_pp; // empty = default declaration macro
  SourceLoc loc;

  bool operator==(const DomainDependantSpec& o) const {
    return object_names == o.object_names && auto_dom == o.auto_dom && present == o.present &&
           transfer_here == o.transfer_here && explicit_domains == o.explicit_domains &&
           acc_pp == o.acc_pp && dom_pp == o.dom_pp;
  }
};

bool is_parallel_region_start(const std::string& text);
bool is_parallel_region_end(const std::string& text);
bool is_domain_dependant_start(const std::string& text); // accepts ...Dependent too
bool is_domain_dependant_end(const std::string& text);

ParallelRegionSpec parse_parallel_region_header(const LogicalLine& line);

// Block = header line + object-name lines; the caller strips the @end line.
DomainDependantSpec parse_domain_dependant(const std::vector<LogicalLine>& block);

std::string print_parallel_region_header(const ParallelRegionSpec& spec);
std::string print_domain_dependant(const DomainDependantSpec& spec);

} // namespace hft

#endif
