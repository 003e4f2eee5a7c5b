#ifndef HFT_PARSER_HPP
#define HFT_PARSER_HPP

#include "hft/ast.hpp"
#include "hft/source_text.hpp"

namespace hft {

// Parses one file's merged logical lines into modules / bare routines.
ast::Unit parse_unit(const std::vector<LogicalLine>& lines, const std::string& file);
ast::Unit parse_source(const std::string& file_id, const std::string& text);
ast::Unit parse_file(const std::string& path);

// Expression entry point, used by tests and the macro expander.
ast::ExprPtr parse_expr_text(const std::string& text, SourceLoc loc = {});

} // namespace hft

#endif
