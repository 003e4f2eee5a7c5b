#ifndef HFT_SOURCE_TEXT_HPP
#define HFT_SOURCE_TEXT_HPP

#include <optional>
#include <string>
#include <vector>

#include "hft/diagnostics.hpp"

namespace hft {

struct PhysicalLine {
  std::string file;
  int line_no = 0; // 1-based
  std::string text; // no newline characters
};

struct LineSpan {
  std::string file;
  int line_no = 0;
};

// One continuation-merged statement line. `text` is comment-free; the
// original comments (if any) are kept in trailing_comment. Sentinel
// directive lines (!$OMP / !$acc) count as code, not comments.
struct LogicalLine {
  std::string text;
  std::vector<LineSpan> spans;
  std::optional<std::string> trailing_comment;

  SourceLoc loc() const {
    if (spans.empty()) return {};
    return {spans.front().file, spans.front().line_no};
  }
};

struct CodeMetrics {
  long total_lines = 0;     // physical lines in the reference corpus
  long sanitized_lines = 0; // sanitized logical lines in the reference corpus
  long unchanged_lines = 0;
  long replaced_lines = 0;
  long added_lines = 0;
};

std::vector<PhysicalLine> physical_lines_from_text(const std::string& file_id,
                                                   const std::string& text);
std::vector<PhysicalLine> read_physical_lines(const std::string& path);

std::vector<LogicalLine> merge_continuations(const std::vector<PhysicalLine>& lines);

// Re-splits generated source so no physical line exceeds `limit` columns.
// Splits only at token boundaries; re-merging gives token-identical lines.
std::string split_lines(const std::string& text, int limit);

// merge + drop blanks/comments + collapse whitespace runs. Case preserved.
std::vector<LogicalLine> sanitize(const std::vector<PhysicalLine>& lines);
std::vector<std::string> sanitize_text(const std::string& file_id, const std::string& text);

// Multiset line accounting between two corpora of sanitized lines.
CodeMetrics compute_metrics(const std::vector<PhysicalLine>& reference,
                            const std::vector<PhysicalLine>& ported);

std::string collapse_whitespace(const std::string& s);
bool is_sentinel_line(const std::string& text); // !$OMP / !$acc ...

} // namespace hft

#endif
