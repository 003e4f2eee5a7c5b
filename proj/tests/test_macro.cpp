#include <doctest.h>

#include "hft/macro.hpp"
#include "hft/parser.hpp"

using namespace hft;
using macro::MacroTable;
using macro::PermKind;
using macro::PermSpec;

TEST_CASE("wrap: rank-1 access gains the parallel-domain indices") {
  ast::Unit unit = parse_source("w.h90", R"(subroutine s(lt, u_f)
  implicit none
  integer(4), intent(in) :: lt
  real(r_size), intent(inout) :: u_f(4)
  u_f(lt) = u_f(lt) + 1.0_r_size
end subroutine
)");
  macro::WrapPlan plan;
  plan["u_f"] = {"AT", {"i", "j"}};
  int n = macro::wrap_accesses(unit.bare_routines[0].body, plan);
  CHECK(n == 2);
  CHECK(ast::print_stmt_line(*unit.bare_routines[0].body[0]) ==
        "u_f(AT(i,j,lt)) = u_f(AT(i,j,lt)) + 1.0_r_size");
}

TEST_CASE("wrap: explicit family macro on a rank-4 access") {
  ast::Unit unit = parse_source("w.h90", R"(subroutine s(k, i, j, dens_ptb_bnd)
  implicit none
  integer(4), intent(in) :: k, i, j
  real(r_size), intent(inout) :: dens_ptb_bnd(3,3,3,2)
  dens_ptb_bnd(k,i,j,2) = 0.0_r_size
end subroutine
)");
  macro::WrapPlan plan;
  plan["dens_ptb_bnd"] = {"AT4_TIGHT_STENCIL", {}};
  macro::wrap_accesses(unit.bare_routines[0].body, plan);
  CHECK(ast::print_stmt_line(*unit.bare_routines[0].body[0]) ==
        "dens_ptb_bnd(AT4_TIGHT_STENCIL(k,i,j,2)) = 0.0_r_size");
}

TEST_CASE("wrap: a bound scalar becomes an array access") {
  ast::Unit unit = parse_source("w.h90", R"(subroutine s()
  implicit none
  real(r_size) :: wind_mag
  wind_mag = 2.0_r_size
end subroutine
)");
  macro::WrapPlan plan;
  plan["wind_mag"] = {"AT", {"i", "j"}};
  macro::wrap_accesses(unit.bare_routines[0].body, plan);
  CHECK(ast::print_stmt_line(*unit.bare_routines[0].body[0]) == "wind_mag(AT(i,j)) = 2.0_r_size");
}

TEST_CASE("wrap: objects outside the plan stay untouched") {
  ast::Unit unit = parse_source("w.h90", R"(subroutine s()
  implicit none
  real(r_size) :: plain
  plain = 1.0_r_size
end subroutine
)");
  macro::WrapPlan plan;
  plan["other"] = {"AT", {"i"}};
  CHECK(macro::wrap_accesses(unit.bare_routines[0].body, plan) == 0);
  CHECK(unit.bare_routines[0].body[0]->source_text == "plain = 1.0_r_size");
}

TEST_CASE("wrap_dim_list builds declaration text with bounds") {
  ast::Unit unit = parse_source("w.h90", R"(module m
  implicit none
  integer(4) :: nz_mn, nz_mx, nx, ny
  real(r_size) :: a(nz_mn:nz_mx, nx, ny)
end module
)");
  const ast::VarDecl& d = unit.modules[0].vars.back();
  CHECK(macro::wrap_dim_list("DOM_TIGHT_STENCIL", {}, d) ==
        "DOM_TIGHT_STENCIL(nz_mn:nz_mx,nx,ny)");
  CHECK(macro::wrap_dim_list("DOM", {"nx", "ny"}, unit.modules[0].vars[0].dims.empty()
                                                      ? d
                                                      : d) // same decl, extended form
            .rfind("DOM(nx,ny,", 0) == 0);
}

TEST_CASE("expand applies a positional permutation") {
  MacroTable t;
  t.set_order("AT", {PermKind::Explicit, {3, 1, 2}});
  CHECK(macro::expand("u_f(AT(i,j,lt)) = 0.0_r_size\n", t) == "u_f(lt,i,j) = 0.0_r_size\n");
}

TEST_CASE("expand identity keeps the written order") {
  MacroTable t;
  CHECK(macro::expand("u_f(AT(i,j,lt))\n", t) == "u_f(i,j,lt)\n");
}

TEST_CASE("expand rotate-last-to-front works at any arity") {
  MacroTable t;
  t.set_order("AT", {PermKind::RotateLastToFront, {}});
  CHECK(macro::expand("a(AT(i,j))\n", t) == "a(j,i)\n");
  CHECK(macro::expand("a(AT(i,j,lt))\n", t) == "a(lt,i,j)\n");
  CHECK(macro::expand("a(AT(k,i,j,2))\n", t) == "a(2,k,i,j)\n");
}

TEST_CASE("expand handles declaration bounds and nested expressions") {
  MacroTable t;
  t.register_family("AT_TIGHT_STENCIL", "DOM_TIGHT_STENCIL");
  t.set_order("AT_TIGHT_STENCIL", {PermKind::Explicit, {2, 3, 1}});
  CHECK(macro::expand("real(r_size), device :: a(DOM_TIGHT_STENCIL(nz_mn:nz_mx,nx,ny))\n", t) ==
        "real(r_size),device :: a(nx,ny,nz_mn:nz_mx)\n");
  CHECK(macro::expand("a(AT_TIGHT_STENCIL(k,i - 1,j)) = 1\n", t) == "a(i - 1,j,k) = 1\n");
}

TEST_CASE("expand replaces block-size macros, template-suffixed included") {
  MacroTable t;
  t.set_block_size("TIGHT_STENCIL", {64, 2, 1});
  CHECK(macro::expand("cugridSizeX = ceiling(real(nx) / real(CUDA_BLOCKSIZE_X))\n", t) ==
        "cugridSizeX = ceiling(real(nx) / real(32))\n");
  CHECK(macro::expand("cublock = dim3(CUDA_BLOCKSIZE_X_TIGHT_STENCIL, "
                      "CUDA_BLOCKSIZE_Y_TIGHT_STENCIL, 1)\n",
                      t) == "cublock = dim3(64,2,1)\n");
}

TEST_CASE("expand works inside sentinel directive lines") {
  MacroTable t;
  CHECK(macro::expand("!$acc loop independent vector(CUDA_BLOCKSIZE_Y)\n", t) ==
        "!$acc loop independent vector(4)\n");
}

TEST_CASE("expand merges continuations before substitution") {
  MacroTable t;
  std::string in = "u_f(AT(i, &\n  & j,lt)) = 0\n";
  CHECK(macro::expand(in, t) == "u_f(i,j,lt) = 0\n");
}

TEST_CASE("expand errors: undefined block axis, bare macro, arity mismatch") {
  MacroTable t;
  t.set_order("AT", {PermKind::Explicit, {2, 1}});
  CHECK_THROWS_AS(macro::expand("x = CUDA_BLOCKSIZE_Q\n", t), Error);
  CHECK_THROWS_AS(macro::expand("x = AT + 1\n", t), Error);
  CHECK_THROWS_AS(macro::expand("x = a(AT(i,j,k))\n", t), Error);
}

TEST_CASE("non-bijective permutation is rejected") {
  MacroTable t;
  t.set_order("AT", {PermKind::Explicit, {1, 1}});
  CHECK_THROWS_AS(macro::expand("a(AT(i,j))\n", t), Error);
}

TEST_CASE("expand is idempotent on its own output") {
  MacroTable t;
  t.set_order("AT", {PermKind::Explicit, {3, 1, 2}});
  t.register_family("AT4", "DOM4");
  std::string in = "u_f(AT(i,j,lt)) = b(AT4(k,i,j,2)) * CUDA_BLOCKSIZE_X\n";
  std::string once = macro::expand(in, t);
  CHECK(macro::expand(once, t) == once);
}

TEST_CASE("declaration and access macros of one family share the permutation") {
  MacroTable t;
  t.register_family("AT_S", "DOM_S");
  t.set_order("DOM_S", {PermKind::Explicit, {3, 1, 2}}); // configured via the dom member
  CHECK(macro::expand("a(AT_S(x,y,z))\n", t) == "a(z,x,y)\n");
  CHECK(macro::expand("real(r_size) :: a(DOM_S(x,y,z))\n", t) == "real(r_size) :: a(z,x,y)\n");
}

TEST_CASE("unconfigured template falls back to default block sizes") {
  MacroTable t;
  t.set_block_size("", {16, 16, 1});
  CHECK(macro::expand("x = CUDA_BLOCKSIZE_X_SOME_TPL\n", t) == "x = 16\n");
}
