#include "hft/directives.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "hft/tokenize.hpp"

namespace hft {

const char* target_name(Target t) { return t == Target::CPU ? "cpu" : "gpu"; }

namespace {

bool starts_with_directive(const std::string& text, const char* name) {
  std::string collapsed = collapse_whitespace(text);
  std::string lower = to_lower(collapsed);
  std::string want = to_lower(std::string("@") + name);
  if (lower.compare(0, want.size(), want) != 0) return false;
  return lower.size() == want.size() || lower[want.size()] == '{' || lower[want.size()] == ' ';
}

bool is_directive_end(const std::string& text, const char* name) {
  std::string lower = to_lower(collapse_whitespace(text));
  return lower == to_lower(std::string("@end ") + name);
}

// Splits "a, b, c" at top-level commas; nested parentheses are kept intact.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (std::string& e : out) e = collapse_whitespace(e);
  return out;
}

struct Attr {
  std::string name;
  std::vector<std::string> args;
};

// Parses the "name(args), name(args), flag" list inside a directive's braces.
std::vector<Attr> parse_attr_list(const std::string& inner, SourceLoc loc) {
  std::vector<Attr> out;
  for (const std::string& piece : split_top_level(inner)) {
    if (piece.empty()) continue;
    size_t open = piece.find('(');
    if (open == std::string::npos) {
      out.push_back({collapse_whitespace(piece), {}});
      continue;
    }
    if (piece.back() != ')')
      fail(ErrKind::Parse, "malformed attribute '" + piece + "'", loc);
    Attr a;
    a.name = collapse_whitespace(piece.substr(0, open));
    a.args = split_top_level(piece.substr(open + 1, piece.size() - open - 2));
    out.push_back(std::move(a));
  }
  return out;
}

std::string brace_inner(const std::string& text, const char* what, SourceLoc loc) {
  size_t open = text.find('{');
  size_t close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(ErrKind::Parse, std::string("malformed ") + what + " directive (expected {...})", loc);
  std::string tail = collapse_whitespace(text.substr(close + 1));
  if (!tail.empty())
    fail(ErrKind::Parse, std::string("unexpected text after ") + what + " directive: '" + tail + "'",
         loc);
  return text.substr(open + 1, close - open - 1);
}

} // namespace

bool is_parallel_region_start(const std::string& text) {
  return starts_with_directive(text, "parallelRegion") && !is_parallel_region_end(text);
}
bool is_parallel_region_end(const std::string& text) {
  return is_directive_end(text, "parallelRegion");
}
bool is_domain_dependant_start(const std::string& text) {
  return (starts_with_directive(text, "domainDependant") ||
          starts_with_directive(text, "domainDependent")) &&
         !is_domain_dependant_end(text);
}
bool is_domain_dependant_end(const std::string& text) {
  return is_directive_end(text, "domainDependant") || is_directive_end(text, "domainDependent");
}

ParallelRegionSpec parse_parallel_region_header(const LogicalLine& line) {
  ParallelRegionSpec spec;
  spec.loc = line.loc();
  const std::string inner = brace_inner(line.text, "@parallelRegion", spec.loc);

  for (const Attr& a : parse_attr_list(inner, spec.loc)) {
    std::string key = to_lower(a.name);
    if (key == "domname") {
      spec.dom_names = a.args;
    } else if (key == "domsize") {
      spec.dom_sizes = a.args;
    } else if (key == "startat") {
      spec.start_at = a.args;
    } else if (key == "endat") {
      spec.end_at = a.args;
    } else if (key == "template") {
      if (a.args.size() != 1)
        fail(ErrKind::Parse, "template(...) takes exactly one macro suffix", spec.loc);
      spec.template_name = a.args[0];
    } else if (key == "appliesto") {
      for (const std::string& t : a.args) {
        std::string lt = to_lower(t);
        if (lt == "cpu")
          spec.applies_cpu = true;
        else if (lt == "gpu")
          spec.applies_gpu = true;
        else
          fail(ErrKind::Parse, "appliesTo accepts CPU and GPU, got '" + t + "'", spec.loc);
      }
    } else if (key == "reduce") {
      for (const std::string& r : a.args) {
        size_t colon = r.find(':');
        if (colon == std::string::npos)
          fail(ErrKind::Parse, "reduce clause must use reduce(op:var), got '" + r + "'", spec.loc);
        ReduceClause rc;
        rc.op = collapse_whitespace(r.substr(0, colon));
        rc.var = collapse_whitespace(r.substr(colon + 1));
        if (rc.op.empty() || rc.var.empty())
          fail(ErrKind::Parse, "reduce clause must use reduce(op:var), got '" + r + "'", spec.loc);
        spec.reduce.push_back(std::move(rc));
      }
    } else {
      fail(ErrKind::Parse,
           "unknown @parallelRegion attribute '" + a.name +
               "' (accepted: domName, domSize, startAt, endAt, template, appliesTo, reduce)",
           spec.loc);
    }
  }

  if (spec.dom_names.empty())
    fail(ErrKind::Parse, "@parallelRegion requires domName(...)", spec.loc);
  if (spec.dom_names.size() != spec.dom_sizes.size())
    fail(ErrKind::Parse,
         "domName/domSize arity mismatch (" + std::to_string(spec.dom_names.size()) + " vs " +
             std::to_string(spec.dom_sizes.size()) + ")",
         spec.loc);
  if (!spec.start_at.empty() && spec.start_at.size() != spec.dom_names.size())
    fail(ErrKind::Parse, "startAt arity does not match domName", spec.loc);
  if (!spec.end_at.empty() && spec.end_at.size() != spec.dom_names.size())
    fail(ErrKind::Parse, "endAt arity does not match domName", spec.loc);

  std::set<std::string> seen;
  for (const std::string& d : spec.dom_names)
    if (!seen.insert(to_lower(d)).second)
      fail(ErrKind::Parse, "duplicate domain iterator '" + d + "'", spec.loc);

  return spec;
}

DomainDependantSpec parse_domain_dependant(const std::vector<LogicalLine>& block) {
  if (block.empty()) fail(ErrKind::Parse, "empty @domainDependant block");
  DomainDependantSpec spec;
  spec.loc = block.front().loc();
  const std::string inner = brace_inner(block.front().text, "@domainDependant", spec.loc);

  std::vector<std::string> dom_names, dom_sizes;
  for (const Attr& a : parse_attr_list(inner, spec.loc)) {
    std::string key = to_lower(a.name);
    if (key == "attribute") {
      for (const std::string& flag : a.args) {
        std::string lf = to_lower(flag);
        if (lf == "autodom")
          spec.auto_dom = true;
        else if (lf == "present")
          spec.present = true;
        else if (lf == "transferhere")
          spec.transfer_here = true;
        else
          fail(ErrKind::Parse,
               "unknown attribute '" + flag + "' (accepted: autoDom, present, transferHere)",
               spec.loc);
      }
    } else if (key == "domname") {
      dom_names = a.args;
    } else if (key == "domsize") {
      dom_sizes = a.args;
    } else if (key == "accpp") {
      if (a.args.size() != 1) fail(ErrKind::Parse, "accPP takes one macro name", spec.loc);
      spec.acc_pp = a.args[0];
    } else if (key == "dompp") {
      if (a.args.size() != 1) fail(ErrKind::Parse, "domPP takes one macro name", spec.loc);
      spec.dom_pp = a.args[0];
    } else {
      fail(ErrKind::Parse,
           "unknown @domainDependant attribute '" + a.name +
               "' (accepted: attribute, domName, domSize, accPP, domPP)",
           spec.loc);
    }
  }

  if (spec.present && spec.transfer_here)
    fail(ErrKind::Parse, "present and transferHere cannot be combined on one specification",
         spec.loc);
  if (dom_names.size() != dom_sizes.size())
    fail(ErrKind::Parse, "domName/domSize arity mismatch in @domainDependant", spec.loc);
  for (size_t i = 0; i < dom_names.size(); ++i)
    spec.explicit_domains.emplace_back(dom_names[i], dom_sizes[i]);

  std::set<std::string> seen;
  for (size_t i = 1; i < block.size(); ++i) {
    for (const std::string& name : split_top_level(block[i].text)) {
      if (name.empty()) continue;
      if (!seen.insert(to_lower(name)).second)
        fail(ErrKind::Parse, "duplicate object '" + name + "' in @domainDependant block",
             block[i].loc());
      spec.object_names.push_back(name);
    }
  }
  if (spec.object_names.empty())
    fail(ErrKind::Parse, "@domainDependant block names no objects", spec.loc);

  return spec;
}

std::string print_parallel_region_header(const ParallelRegionSpec& spec) {
  std::ostringstream os;
  os << "@parallelRegion{";
  bool first = true;
  auto clause = [&](const std::string& text) {
    if (!first) os << ", ";
    first = false;
    os << text;
  };
  auto list_clause = [&](const char* name, const std::vector<std::string>& items) {
    if (items.empty()) return;
    std::string text = std::string(name) + "(";
    for (size_t i = 0; i < items.size(); ++i) text += (i ? "," : "") + items[i];
    clause(text + ")");
  };
  if (spec.applies_cpu || spec.applies_gpu) {
    std::vector<std::string> t;
    if (spec.applies_cpu) t.push_back("CPU");
    if (spec.applies_gpu) t.push_back("GPU");
    list_clause("appliesTo", t);
  }
  list_clause("domName", spec.dom_names);
  list_clause("domSize", spec.dom_sizes);
  list_clause("startAt", spec.start_at);
  list_clause("endAt", spec.end_at);
  if (!spec.template_name.empty()) clause("template(" + spec.template_name + ")");
  if (!spec.reduce.empty()) {
    std::string text = "reduce(";
    for (size_t i = 0; i < spec.reduce.size(); ++i)
      text += (i ? "," : "") + spec.reduce[i].op + ":" + spec.reduce[i].var;
    clause(text + ")");
  }
  os << "}";
  return os.str();
}

std::string print_domain_dependant(const DomainDependantSpec& spec) {
  std::ostringstream os;
  os << "@domainDependant{";
  bool first = true;
  auto clause = [&](const std::string& text) {
    if (!first) os << ", ";
    first = false;
    os << text;
  };
  if (!spec.explicit_domains.empty()) {
    std::string names = "domName(", sizes = "domSize(";
    for (size_t i = 0; i < spec.explicit_domains.size(); ++i) {
      names += (i ? "," : "") + spec.explicit_domains[i].first;
      sizes += (i ? "," : "") + spec.explicit_domains[i].second;
    }
    clause(names + ")");
    clause(sizes + ")");
  }
  std::vector<std::string> flags;
  if (spec.auto_dom) flags.push_back("autoDom");
  if (spec.present) flags.push_back("present");
  if (spec.transfer_here) flags.push_back("transferHere");
  if (!flags.empty()) {
    std::string text = "attribute(";
    for (size_t i = 0; i < flags.size(); ++i) text += (i ? ", " : "") + flags[i];
    clause(text + ")");
  }
  if (!spec.acc_pp.empty()) clause("accPP(" + spec.acc_pp + ")");
  if (!spec.dom_pp.empty()) clause("domPP(" + spec.dom_pp + ")");
  os << "}\n";
  for (size_t i = 0; i < spec.object_names.size(); ++i)
    os << (i ? ", " : "") << spec.object_names[i];
  os << "\n@end domainDependant";
  return os.str();
}

} // namespace hft
