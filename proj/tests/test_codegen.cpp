#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hft/codegen.hpp"
#include "hft/parser.hpp"
#include "hft/source_text.hpp"
#include "hft/tokenize.hpp"

using namespace hft;
using analysis::ApplicationModel;
using codegen::GpuBackend;
using codegen::TargetConfig;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ApplicationModel load_app(const std::vector<std::string>& rel_paths) {
  std::vector<std::unique_ptr<ast::Unit>> units;
  for (const std::string& rel : rel_paths) {
    std::string path = std::string(HFT_TEST_DATA_DIR) + "/" + rel;
    units.push_back(std::make_unique<ast::Unit>(parse_source(rel, slurp(path))));
  }
  return analysis::build_model(std::move(units));
}

ApplicationModel surface_flux_model() {
  return load_app({"apps/surface_flux/sf_state.h90", "apps/surface_flux/surface_flux.h90",
                   "apps/surface_flux/driver.h90"});
}

std::vector<std::string> tokens_of(const std::string& text) {
  std::vector<std::string> out;
  for (const LogicalLine& l : merge_continuations(physical_lines_from_text("g", text))) {
    if (l.text.empty()) continue;
    std::string payload = l.text;
    size_t b = payload.find_first_not_of(" \t");
    if (b != std::string::npos) payload = payload.substr(b);
    if (is_sentinel_line(payload)) {
      size_t sp = payload.find_first_of(" \t");
      out.push_back(to_lower(payload.substr(0, sp)));
      payload = sp == std::string::npos ? "" : payload.substr(sp + 1);
    }
    for (const Token& t : tokenize(payload, {}))
      if (t.kind != Token::Kind::End) out.push_back(to_lower(t.text));
  }
  return out;
}

bool has_token_run(const std::string& haystack, const std::string& needle) {
  std::vector<std::string> h = tokens_of(haystack);
  std::vector<std::string> n = tokens_of(needle);
  if (n.empty()) return true;
  if (h.size() < n.size()) return false;
  for (size_t i = 0; i + n.size() <= h.size(); ++i) {
    bool match = true;
    for (size_t k = 0; k < n.size(); ++k)
      if (h[i + k] != n[k]) {
        match = false;
        break;
      }
    if (match) return true;
  }
  return false;
}

std::string file_text(const std::vector<codegen::GeneratedFile>& files, const std::string& name) {
  for (const auto& f : files)
    if (f.name == name) return f.text;
  FAIL("no generated file named ", name);
  return "";
}

TargetConfig cpu_config() {
  TargetConfig c;
  c.architecture = Target::CPU;
  return c;
}

TargetConfig gpu_config(GpuBackend b) {
  TargetConfig c;
  c.architecture = Target::GPU;
  c.gpu_backend = b;
  return c;
}

} // namespace

TEST_CASE("cpu backend: damping kernel becomes the j-outer OpenMP nest") {
  ApplicationModel m = load_app({"apps/damping/damping.h90"});
  auto files = codegen::generate_target_tree(m, cpu_config());
  std::string text = file_text(files, "damping.f90");

  CHECK(has_token_run(text,
                      "!$OMP PARALLEL DO DEFAULT(firstprivate) &\n"
                      "!$OMP& SHARED(dens_ptb_bnd, dens_ptb_damp, dens_ref_f)"));
  CHECK(has_token_run(text, "outerParallelLoop0: do j = ny_mn, ny_mx"));
  CHECK(has_token_run(text, "do i = nx_mn, nx_mx"));
  CHECK(has_token_run(text, "do k = nz_mn, nz_mx"));
  CHECK(has_token_run(text,
                      "dens_ptb_damp(AT_TIGHT_STENCIL(k,i,j)) = mtratio_bnd * "
                      "(dens_ref_f(AT_TIGHT_STENCIL(k,i,j)) + "
                      "dens_ptb_bnd(AT4_TIGHT_STENCIL(k,i,j,1)))"
                      " + tratio_bnd * (dens_ref_f(AT_TIGHT_STENCIL(k,i,j)) + "
                      "dens_ptb_bnd(AT4_TIGHT_STENCIL(k,i,j,2))) - "
                      "dens_ref_f(AT_TIGHT_STENCIL(k,i,j))"));
  CHECK(has_token_run(text, "end do outerParallelLoop0"));
  CHECK(has_token_run(text, "!$OMP END PARALLEL DO"));
  CHECK(has_token_run(text,
                      "real(r_size) :: dens_ref_f("
                      "DOM_TIGHT_STENCIL(nz_mn:nz_mx,nx_mn:nx_mx,ny_mn:ny_mx))"));
}

TEST_CASE("cpu backend: coarse physics kernel wraps the call chain") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, cpu_config());
  std::string text = file_text(files, "surface_flux.f90");

  CHECK(has_token_run(text,
                      "!$OMP PARALLEL DO DEFAULT(firstprivate) &\n!$OMP& SHARED(wind_speed)"));
  CHECK(has_token_run(text, "outerParallelLoop0: do j = 1, ny"));
  CHECK(has_token_run(text, "do i = 1, nx"));
  CHECK(has_token_run(text, "call physics_main(i, j, wind_speed)"));
}

TEST_CASE("cpu backend: code under the coarse kernel is byte-identical to user code") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, cpu_config());
  std::string text = file_text(files, "surface_flux.f90");

  std::string user = slurp(std::string(HFT_TEST_DATA_DIR) + "/apps/surface_flux/surface_flux.h90");
  std::vector<std::string> user_lines = sanitize_text("u", user);
  std::vector<std::string> gen_lines = sanitize_text("g", text);

  auto find_line = [](const std::vector<std::string>& lines, const std::string& needle) {
    for (size_t i = 0; i < lines.size(); ++i)
      if (lines[i] == needle) return static_cast<long>(i);
    return -1L;
  };
  long u0 = find_line(user_lines, "lt = tile_land");
  long g0 = find_line(gen_lines, "lt = tile_land");
  REQUIRE(u0 >= 0);
  REQUIRE(g0 >= 0);
  for (long off = 0;; ++off) {
    CHECK(user_lines[u0 + off] == gen_lines[g0 + off]);
    if (user_lines[u0 + off] == "swind(i, j) = u_f(lt)") break;
    REQUIRE(off < 40);
  }
  CHECK(text.find("AT(") == std::string::npos);
}

TEST_CASE("cuda backend: host routine matches the launch boilerplate shape") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "surface_flux.f90");

  CHECK(text.find("subroutine hfd_sf_slab_flx_tile_run(i, j, swind)") != std::string::npos);
  CHECK(has_token_run(text, "cuerror = cudaFuncSetCacheConfig(hfk0_sf_slab_flx_tile_run, "
                            "cudaFuncCachePreferL1)"));
  CHECK(has_token_run(text, "cugridSizeX = ceiling(real(nx) / real(CUDA_BLOCKSIZE_X))"));
  CHECK(has_token_run(text, "cugridSizeY = ceiling(real(ny) / real(CUDA_BLOCKSIZE_Y))"));
  CHECK(has_token_run(text, "cugridSizeZ = 1"));
  CHECK(has_token_run(text, "cugrid = dim3(cugridSizeX, cugridSizeY, cugridSizeZ)"));
  CHECK(has_token_run(text, "cublock = dim3(CUDA_BLOCKSIZE_X, CUDA_BLOCKSIZE_Y, 1)"));
  CHECK(has_token_run(text,
                      "call hfk0_sf_slab_flx_tile_run <<< cugrid, cublock >>>("
                      "nx, ny, tile_land, cover_frac, flx_sum_x, flx_sum_y, swind, "
                      "taux_tile_ex, tauy_tile_ex, tlcvr, u_f)"));
  CHECK(has_token_run(text, "cuerror = cudaThreadSynchronize()"));
  CHECK(has_token_run(text, "if (cuerror .NE. cudaSuccess) then\nstop 1\nend if"));
}

TEST_CASE("cuda backend: kernel routine matches the device shape") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "surface_flux.f90");

  CHECK(has_token_run(text, "attributes(global) subroutine hfk0_sf_slab_flx_tile_run("));
  CHECK(has_token_run(text, "real(r_size), device :: u_f(DOM(nx,ny,ntlm))"));
  CHECK(has_token_run(text, "real(r_size), device :: tlcvr(DOM(nx,ny,ntlm))"));
  CHECK(has_token_run(text, "integer(4), value :: nx"));
  CHECK(has_token_run(text, "integer(4), value :: tile_land"));
  CHECK(has_token_run(text, "i = (blockidx%x - 1) * blockdim%x + threadidx%x"));
  CHECK(has_token_run(text, "j = (blockidx%y - 1) * blockdim%y + threadidx%y"));
  CHECK(has_token_run(text, "if (i .GT. nx .OR. j .GT. ny) then\nreturn\nend if"));
  CHECK(has_token_run(text, "call hfd_sf_slab_flx_land_run(tlcvr(AT(i,j,lt)), "
                            "taux_tile_ex(AT(i,j,lt)), tauy_tile_ex(AT(i,j,lt)))"));
  CHECK(has_token_run(text, "u_f(AT(i,j,lt)) = sqrt(sqrt(taux_tile_ex(AT(i,j,lt)) ** 2 + "
                            "tauy_tile_ex(AT(i,j,lt)) ** 2))"));
  CHECK(has_token_run(text,
                      "attributes(device) subroutine hfd_sf_slab_flx_land_run(cf, taux, tauy)"));
  CHECK(has_token_run(text, "subroutine sf_slab_flx_land_run(cf, taux, tauy)"));
}

TEST_CASE("cuda backend: template block macros and bounded iterators") {
  ApplicationModel m = load_app({"apps/damping/damping.h90"});
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "damping.f90");

  CHECK(has_token_run(text, "cugridSizeX = ceiling(real(nx_mx - nx_mn + 1) / "
                            "real(CUDA_BLOCKSIZE_X_TIGHT_STENCIL))"));
  CHECK(has_token_run(text, "cublock = dim3(CUDA_BLOCKSIZE_X_TIGHT_STENCIL, "
                            "CUDA_BLOCKSIZE_Y_TIGHT_STENCIL, 1)"));
  CHECK(has_token_run(text, "i = (blockidx%x - 1) * blockdim%x + threadidx%x + nx_mn - 1"));
  CHECK(has_token_run(text, "if (i .GT. nx_mx .OR. j .GT. ny_mx) then"));
  CHECK(has_token_run(text, "real(r_size), device :: "
                            "dens_ptb_bnd(DOM4_TIGHT_STENCIL(nz_mn:nz_mx,nx_mn:nx_mx,"
                            "ny_mn:ny_mx,2))"));
}

TEST_CASE("openacc backend: kernels block with alphabetical deviceptr clauses") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::OpenAccStyle));
  std::string text = file_text(files, "surface_flux.f90");

  CHECK(has_token_run(text,
                      "!$acc kernels deviceptr(cover_frac) deviceptr(flx_sum_x) "
                      "deviceptr(flx_sum_y) deviceptr(swind) deviceptr(taux_tile_ex) "
                      "deviceptr(tauy_tile_ex) deviceptr(tlcvr) deviceptr(u_f)"));
  CHECK(has_token_run(text, "!$acc loop independent vector(CUDA_BLOCKSIZE_Y)"));
  CHECK(has_token_run(text, "outerParallelLoop0: do j=1,ny"));
  CHECK(has_token_run(text, "!$acc loop independent vector(CUDA_BLOCKSIZE_X)"));
  CHECK(has_token_run(text, "do i=1,nx"));
  CHECK(has_token_run(text, "u_f(AT(i,j,lt)) = sqrt(sqrt(taux_tile_ex(AT(i,j,lt)) ** 2 + "
                            "tauy_tile_ex(AT(i,j,lt)) ** 2))"));
  CHECK(has_token_run(text, "end do outerParallelLoop0"));
  CHECK(has_token_run(text, "!$acc end kernels"));
  CHECK(has_token_run(text, "call sf_slab_flx_land_run(tlcvr(AT(i,j,lt)), "
                            "taux_tile_ex(AT(i,j,lt)), tauy_tile_ex(AT(i,j,lt)))"));
}

TEST_CASE("openacc backend: sequential loops get seq markers, reductions forward") {
  ApplicationModel md = load_app({"apps/damping/damping.h90"});
  auto dfiles = codegen::generate_target_tree(md, gpu_config(GpuBackend::OpenAccStyle));
  std::string dtext = file_text(dfiles, "damping.f90");
  CHECK(has_token_run(dtext, "!$acc loop seq\ndo k = nz_mn, nz_mx"));

  ApplicationModel mr = load_app({"apps/reduction/reduction.h90"});
  auto rfiles = codegen::generate_target_tree(mr, gpu_config(GpuBackend::OpenAccStyle));
  std::string rtext = file_text(rfiles, "reduction.f90");
  CHECK(
      has_token_run(rtext, "!$acc loop independent vector(CUDA_BLOCKSIZE_Y) reduction(+:total)"));
  CHECK(
      has_token_run(rtext, "!$acc loop independent vector(CUDA_BLOCKSIZE_X) reduction(+:total)"));
}

TEST_CASE("cuda backend rejects reduction regions with a pointer to the acc backend") {
  ApplicationModel m = load_app({"apps/reduction/reduction.h90"});
  try {
    codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
    FAIL("expected codegen error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrKind::Codegen);
    CHECK(std::string(e.what()).find("OpenACC") != std::string::npos);
  }
}

TEST_CASE("cpu backend forwards reductions to the OMP directive") {
  ApplicationModel m = load_app({"apps/reduction/reduction.h90"});
  auto files = codegen::generate_target_tree(m, cpu_config());
  std::string text = file_text(files, "reduction.f90");
  CHECK(has_token_run(text, "!$OMP PARALLEL DO DEFAULT(firstprivate) REDUCTION(+:total) &\n"
                            "!$OMP& SHARED(y)"));
}

TEST_CASE("transfers follow intent: module objects copy both ways") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "driver.f90");

  CHECK(has_token_run(text, "subroutine hfd_simulation_run()"));
  CHECK(has_token_run(text, "call hfrt_copy_to_device(cover_frac)\n"
                            "call hfrt_copy_to_device(flx_sum_x)\n"
                            "call hfrt_copy_to_device(flx_sum_y)\n"
                            "call hfrt_copy_to_device(wind_speed)\n"
                            "call hfd_physics_run()\n"
                            "call hfrt_copy_from_device(cover_frac)"));
  CHECK(has_token_run(text, "call hfrt_copy_from_device(wind_speed)"));
}

TEST_CASE("transfers follow intent on dummy arguments") {
  const char* src = R"(module ts
  implicit none
  integer(4) :: n
end module
module tmod
contains
subroutine kern(arr_in, arr_out, arr_w)
  use ts, only : n
  implicit none
  real(r_size), intent(in) :: arr_in(n)
  real(r_size), intent(out) :: arr_out(n)
  real(r_size), intent(inout) :: arr_w(n)
  @domainDependant{attribute(autoDom, present)}
  arr_in, arr_out, arr_w
  @end domainDependant
  @parallelRegion{domName(i), domSize(n)}
  arr_out(i) = arr_in(i) + arr_w(i)
  arr_w(i) = arr_in(i)
  @end parallelRegion
end subroutine
subroutine mover(arr_in, arr_out, arr_w)
  use ts, only : n
  implicit none
  real(r_size), intent(in) :: arr_in(n)
  real(r_size), intent(out) :: arr_out(n)
  real(r_size), intent(inout) :: arr_w(n)
  @domainDependant{attribute(autoDom, transferHere)}
  arr_in, arr_out, arr_w
  @end domainDependant
  call kern(arr_in, arr_out, arr_w)
end subroutine
end module
)";
  std::vector<std::unique_ptr<ast::Unit>> units;
  units.push_back(std::make_unique<ast::Unit>(parse_source("t.h90", src)));
  ApplicationModel m = analysis::build_model(std::move(units));
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "t.f90");

  CHECK(has_token_run(text, "call hfrt_copy_to_device(arr_in)"));
  CHECK(has_token_run(text, "call hfrt_device_allocate(arr_out)"));
  CHECK(has_token_run(text, "call hfrt_copy_from_device(arr_out)"));
  CHECK(has_token_run(text, "call hfrt_copy_to_device(arr_w)"));
  CHECK(has_token_run(text, "call hfrt_copy_from_device(arr_w)"));
  CHECK_FALSE(has_token_run(text, "call hfrt_copy_from_device(arr_in)"));
}

TEST_CASE("host variant duplication and call-site selection") {
  ApplicationModel m = surface_flux_model();
  TargetConfig cfg = gpu_config(GpuBackend::CudaStyle);
  auto files = codegen::generate_target_tree(m, cfg);
  std::string text = file_text(files, "driver.f90");

  CHECK(has_token_run(text, "subroutine hfd_main()"));
  CHECK(has_token_run(text, "call setup()\ncall hfd_simulation_run()"));
  CHECK(has_token_run(text, "subroutine main()"));
  CHECK(has_token_run(text, "call setup()\ncall simulation_run()"));

  CHECK(codegen::call_target(m, cfg, false, "sf_slab_flx_tile_run") == "sf_slab_flx_tile_run");
  CHECK(codegen::call_target(m, cfg, true, "sf_slab_flx_tile_run") == "hfd_sf_slab_flx_tile_run");
  CHECK(codegen::call_target(m, cfg, true, "setup") == "setup");
  CHECK(codegen::call_target(m, cfg, true, "simulation_run") == "hfd_simulation_run");
}

TEST_CASE("coarse CPU-only region on the GPU build runs its body once") {
  ApplicationModel m = surface_flux_model();
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "surface_flux.f90");
  CHECK(has_token_run(text, "subroutine hfd_physics_run()"));
  CHECK(has_token_run(text, "i = 1\nj = 1\ncall hfd_physics_main(i, j, wind_speed)"));
}

TEST_CASE("uncovered GPU-only region degrades to plain loops on the CPU build") {
  const char* src = R"(module g
  implicit none
  integer(4) :: n
  real(r_size) :: v(n)
end module
module k
contains
subroutine solo()
  use g, only : n, v
  implicit none
  @domainDependant{attribute(autoDom, present)}
  v
  @end domainDependant
  @parallelRegion{appliesTo(GPU), domName(i), domSize(n)}
  v(i) = 1.0_r_size
  @end parallelRegion
end subroutine
end module
)";
  std::vector<std::unique_ptr<ast::Unit>> units;
  units.push_back(std::make_unique<ast::Unit>(parse_source("solo.h90", src)));
  ApplicationModel m = analysis::build_model(std::move(units));
  auto files = codegen::generate_target_tree(m, cpu_config());
  std::string text = file_text(files, "solo.f90");
  CHECK(has_token_run(text, "do i = 1, n"));
  CHECK(text.find("!$OMP") == std::string::npos);
}

TEST_CASE("1-D region launches a degenerate grid; rank > 3 is rejected") {
  const char* src = R"(module g
  implicit none
  integer(4) :: n
  real(r_size) :: v(n)
end module
module k
contains
subroutine one_d()
  use g, only : n, v
  implicit none
  @domainDependant{attribute(autoDom, present)}
  v
  @end domainDependant
  @parallelRegion{domName(i), domSize(n)}
  v(i) = 1.0_r_size
  @end parallelRegion
end subroutine
end module
)";
  std::vector<std::unique_ptr<ast::Unit>> units;
  units.push_back(std::make_unique<ast::Unit>(parse_source("one.h90", src)));
  ApplicationModel m = analysis::build_model(std::move(units));
  auto files = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  std::string text = file_text(files, "one.f90");
  CHECK(has_token_run(text, "cugridSizeX = ceiling(real(n) / real(CUDA_BLOCKSIZE_X))"));
  CHECK(has_token_run(text, "cugridSizeY = 1"));
  CHECK(has_token_run(text, "cugridSizeZ = 1"));
  CHECK(has_token_run(text, "cublock = dim3(CUDA_BLOCKSIZE_X, 1, 1)"));

  const char* rank4 = R"(module g4
  implicit none
  integer(4) :: n
  real(r_size) :: w(n,n,n,n)
end module
module k4
contains
subroutine too_many()
  use g4, only : n, w
  implicit none
  @domainDependant{attribute(autoDom, present)}
  w
  @end domainDependant
  @parallelRegion{domName(i,j,k,l), domSize(n,n,n,n)}
  w(i,j,k,l) = 0.0_r_size
  @end parallelRegion
end subroutine
end module
)";
  std::vector<std::unique_ptr<ast::Unit>> units4;
  units4.push_back(std::make_unique<ast::Unit>(parse_source("four.h90", rank4)));
  ApplicationModel m4 = analysis::build_model(std::move(units4));
  CHECK_THROWS_AS(codegen::generate_target_tree(m4, gpu_config(GpuBackend::CudaStyle)), Error);
}

TEST_CASE("every array in a kernel body appears exactly once in the capture") {
  ApplicationModel m = surface_flux_model();
  const analysis::RoutineEntry* entry = m.find_routine("sf_slab_flx_tile_run");
  REQUIRE(entry != nullptr);
  REQUIRE(entry->regions.size() == 1);
  codegen::RegionCapture cap = codegen::collect_region_objects(m, *entry, *entry->regions[0]);

  std::vector<std::string> want = {"cover_frac",   "flx_sum_x",    "flx_sum_y", "swind",
                                   "taux_tile_ex", "tauy_tile_ex", "tlcvr",     "u_f"};
  CHECK(cap.arrays == want);
  CHECK(cap.value_scalars == std::vector<std::string>{"nx", "ny", "tile_land"});
  CHECK(cap.local_scalars == std::vector<std::string>{"lt"});
}

TEST_CASE("generation is reproducible byte for byte") {
  ApplicationModel m = surface_flux_model();
  auto a = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  auto b = codegen::generate_target_tree(m, gpu_config(GpuBackend::CudaStyle));
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == b[i].name);
    CHECK(a[i].text == b[i].text);
  }
}

TEST_CASE("generated sources parse back cleanly") {
  ApplicationModel m = surface_flux_model();
  for (GpuBackend backend : {GpuBackend::CudaStyle, GpuBackend::OpenAccStyle}) {
    for (const auto& f : codegen::generate_target_tree(m, gpu_config(backend)))
      CHECK_NOTHROW(parse_source(f.name, f.text));
  }
  for (const auto& f : codegen::generate_target_tree(m, cpu_config()))
    CHECK_NOTHROW(parse_source(f.name, f.text));
}
