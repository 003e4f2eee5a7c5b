#include <doctest.h>

#include <random>
#include <sstream>

#include "hft/source_text.hpp"
#include "hft/tokenize.hpp"

using namespace hft;

namespace {

std::vector<PhysicalLine> lines(const std::vector<std::string>& texts) {
  std::vector<PhysicalLine> out;
  int n = 1;
  for (const std::string& t : texts) out.push_back({"t.h90", n++, t});
  return out;
}

std::vector<std::string> token_texts(const std::string& line) {
  std::vector<std::string> out;
  for (const Token& t : tokenize(line, {}))
    if (t.kind != Token::Kind::End) out.push_back(t.text);
  return out;
}

} // namespace

TEST_CASE("merge joins trailing and leading ampersands") {
  auto merged = merge_continuations(lines({"a = b + &", "  & c"}));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].text == "a = b + c");
  REQUIRE(merged[0].spans.size() == 2);
  CHECK(merged[0].spans[0].line_no == 1);
  CHECK(merged[0].spans[1].line_no == 2);
}

TEST_CASE("merge rebuilds a four-line parallel region header") {
  auto merged = merge_continuations(lines({
      "@parallelRegion{ &",
      "  & domName(i,j), domSize(nx_mn:nx_mx,ny_mn:ny_mx), &",
      "  & startAt(nx_mn,ny_mn), endAt(nx_mx,ny_mx), template(TIGHT_STENCIL) &",
      "& }",
  }));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].text ==
        "@parallelRegion{ domName(i,j), domSize(nx_mn:nx_mx,ny_mn:ny_mx), "
        "startAt(nx_mn,ny_mn), endAt(nx_mx,ny_mx), template(TIGHT_STENCIL) }");
  CHECK(merged[0].spans.size() == 4);
}

TEST_CASE("merge identity for a plain line") {
  auto merged = merge_continuations(lines({"x = 1"}));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].text == "x = 1");
}

TEST_CASE("merge captures trailing comments and skips comment-only lines") {
  auto merged = merge_continuations(lines({"a = b + & ! first", "! interleaved", "  & c ! second"}));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].text == "a = b + c");
  REQUIRE(merged[0].trailing_comment.has_value());
  CHECK(merged[0].trailing_comment->find("first") != std::string::npos);
  CHECK(merged[0].trailing_comment->find("interleaved") != std::string::npos);
  CHECK(merged[0].trailing_comment->find("second") != std::string::npos);
  CHECK(merged[0].spans.size() == 3);
}

TEST_CASE("merge reports dangling continuation with file and line") {
  try {
    merge_continuations(lines({"a = b + &"}));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::Parse);
    CHECK(e.loc().file == "t.h90");
    CHECK(e.loc().line == 1);
  }
}

TEST_CASE("merge joins sentinel continuations") {
  auto merged = merge_continuations(
      lines({"!$OMP PARALLEL DO DEFAULT(firstprivate) &", "!$OMP& SHARED(a, b)"}));
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].text == "!$OMP PARALLEL DO DEFAULT(firstprivate) SHARED(a, b)");
}

TEST_CASE("spans of consecutive logical lines are disjoint and ordered") {
  auto merged = merge_continuations(lines({"a = 1", "b = a + &", " & 2", "c = b"}));
  int last = 0;
  for (const auto& l : merged)
    for (const auto& s : l.spans) {
      CHECK(s.line_no > last);
      last = s.line_no;
    }
}

TEST_CASE("sanitize strips comments and blanks and collapses whitespace") {
  auto out = sanitize(lines({"! header", "", "a   =  b + &", " & c ! note"}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].text == "a = b + c");
}

TEST_CASE("sanitize keeps sentinel directive lines") {
  // The damping kernel: 12 physical lines including both OMP sentinels.
  // Hand count: 12 physical - 3 merged continuation lines = 9 logical,
  // with both sentinel lines retained as code.
  std::vector<std::string> listing = {
      "!$OMP PARALLEL DO",
      "  do j = ny_mn, ny_mx",
      "  do i = nx_mn, nx_mx",
      "  do k = nz_mn, nz_mx",
      "    dens_ptb_damp(k,i,j) = &",
      "      &  mtratio_bnd * ( dens_ref_f(k,i,j) + dens_ptb_bnd(k,i,j,1) ) &",
      "      & + tratio_bnd * ( dens_ref_f(k,i,j) + dens_ptb_bnd(k,i,j,2) ) &",
      "      & - dens_ref_f(k,i,j)",
      "  end do",
      "  end do",
      "  end do",
      "!$OMP END PARALLEL DO",
  };
  REQUIRE(listing.size() == 12);
  auto out = sanitize(lines(listing));
  CHECK(out.size() == 9);
  CHECK(out.front().text == "!$OMP PARALLEL DO");
  CHECK(out.back().text == "!$OMP END PARALLEL DO");
  CHECK(out[4].text ==
        "dens_ptb_damp(k,i,j) = mtratio_bnd * ( dens_ref_f(k,i,j) + dens_ptb_bnd(k,i,j,1) ) + "
        "tratio_bnd * ( dens_ref_f(k,i,j) + dens_ptb_bnd(k,i,j,2) ) - dens_ref_f(k,i,j)");
}

TEST_CASE("sanitize of empty input is empty") {
  CHECK(sanitize({}).empty());
}

TEST_CASE("split_lines keeps short text unchanged") {
  std::string text = "a = b + c\nx = y\n";
  CHECK(split_lines(text, 132) == text);
}

TEST_CASE("split_lines folds a long assignment and merge restores the tokens") {
  std::ostringstream os;
  os << "result_variable = ";
  for (int i = 0; i < 24; ++i) os << (i ? " + " : "") << "some_longish_name_" << i;
  std::string line = os.str();
  REQUIRE(line.size() > 200);

  std::string split = split_lines(line, 132);
  std::istringstream ss(split);
  std::string phys;
  int count = 0;
  while (std::getline(ss, phys)) {
    CHECK(phys.size() <= 132);
    ++count;
  }
  CHECK(count > 1);

  auto merged = merge_continuations(physical_lines_from_text("g.f90", split));
  REQUIRE(merged.size() == 1);
  CHECK(token_texts(merged[0].text) == token_texts(line));
}

TEST_CASE("split_lines rejects an unsplittable token") {
  std::string token(200, 'a');
  CHECK_THROWS_AS(split_lines("x = " + token, 64), Error);
}

TEST_CASE("split then merge is identity on random expressions") {
  std::mt19937_64 rng(20240817);
  for (int round = 0; round < 50; ++round) {
    std::ostringstream os;
    os << "v" << round << " = ";
    int terms = 3 + static_cast<int>(rng() % 40);
    for (int t = 0; t < terms; ++t) {
      if (t) os << (rng() % 2 ? " + " : " * ");
      switch (rng() % 3) {
        case 0: os << "arr_" << rng() % 9 << "(i,j,k)"; break;
        case 1: os << "sqrt(x_" << rng() % 9 << ")"; break;
        default: os << (rng() % 1000) << "." << (rng() % 10) << "_r_size"; break;
      }
    }
    std::string line = os.str();
    int limit = 40 + static_cast<int>(rng() % 90);
    std::string split;
    try {
      split = split_lines(line, limit);
    } catch (const Error&) {
      continue; // a token wider than the drawn limit; not a round-trip case
    }
    auto merged = merge_continuations(physical_lines_from_text("r.f90", split));
    REQUIRE(merged.size() == 1);
    CHECK(token_texts(merged[0].text) == token_texts(line));
  }
}

TEST_CASE("metrics: identical corpora show full reuse") {
  auto corpus = lines({"a = 1", "b = 2", "! c", "c = a + b"});
  CodeMetrics m = compute_metrics(corpus, corpus);
  CHECK(m.total_lines == 4);
  CHECK(m.sanitized_lines == 3);
  CHECK(m.unchanged_lines == 3);
  CHECK(m.replaced_lines == 0);
  CHECK(m.added_lines == 0);
}

TEST_CASE("metrics: multiset accounting") {
  auto ref = lines({"a", "b", "c"});
  auto ported = lines({"a", "b", "d", "e"});
  CodeMetrics m = compute_metrics(ref, ported);
  CHECK(m.unchanged_lines == 2);
  CHECK(m.replaced_lines == 1);
  CHECK(m.added_lines == 2);
}

TEST_CASE("metrics: synthetic corpus with 50 known edits") {
  std::vector<std::string> ref, ported;
  for (int i = 0; i < 1000; ++i) {
    std::string l = "line_" + std::to_string(i) + " = " + std::to_string(i * 7);
    ref.push_back(l);
    // Every 20th line is edited in the ported corpus: 50 replacements.
    if (i % 20 == 0)
      ported.push_back("line_" + std::to_string(i) + " = edited_" + std::to_string(i));
    else
      ported.push_back(l);
  }
  CodeMetrics m = compute_metrics(lines(ref), lines(ported));
  CHECK(m.sanitized_lines == 1000);
  CHECK(m.replaced_lines == 50);
  CHECK(m.added_lines == 50);
  CHECK(m.unchanged_lines == 950);
}
