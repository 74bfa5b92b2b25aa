#include "veclens/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "veclens/costmodel.hpp"
#include "veclens/isa.hpp"
#include "veclens/vvm.hpp"

using namespace veclens;

namespace {

KernelConfig small_cfg(uint64_t nelem, uint32_t vector_size, uint64_t seed = 42) {
  KernelConfig cfg;
  cfg.nelem = nelem;
  cfg.vector_size = vector_size;
  cfg.seed = seed;
  return cfg;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

struct VariantRun {
  RunResult rr;
  AssemblyOutputs out;
};

VariantRun run_one(Variant v, const KernelConfig& cfg, const Mesh& mesh, uint32_t vl_max = 256,
                   const std::function<void(const TraceEvent&)>& hook = {}) {
  CostModelConfig cost;
  cost.vl_max = vl_max;
  MachineConfig mc;
  mc.vl_max = vl_max;
  MachineState m(mc);
  VariantRun r;
  r.rr = run_variant(v, cfg, mesh, cost, m, hook);
  r.out = read_outputs(m, build_layout(cfg), cfg, r.rr.skipped);
  return r;
}

void check_matches_reference(const VariantRun& got, const AssemblyOutputs& want) {
  CHECK(bitwise_equal(got.out.global_rhs, want.global_rhs));
  CHECK(bitwise_equal(got.out.global_mat, want.global_mat));
  CHECK(got.out.skipped == want.skipped);
}

uint64_t fnv1a(uint64_t h, const void* data, size_t nbytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < nbytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t output_checksum(const AssemblyOutputs& out) {
  uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(h, out.global_rhs.data(), out.global_rhs.size() * sizeof(double));
  h = fnv1a(h, out.global_mat.data(), out.global_mat.size() * sizeof(double));
  h = fnv1a(h, &out.skipped, sizeof(out.skipped));
  return h;
}

}  // namespace

TEST_CASE("mesh generation is deterministic in the seed") {
  const KernelConfig cfg = small_cfg(64, 16, 42);
  const Mesh a = build_mesh(cfg);
  const Mesh b = build_mesh(cfg);
  CHECK(a.nnode == b.nnode);
  CHECK(bitwise_equal(a.coords, b.coords));
  CHECK(bitwise_equal(a.velocity, b.velocity));
  CHECK(a.lnods == b.lnods);
  CHECK(bitwise_equal(a.elem_key, b.elem_key));

  const Mesh c = build_mesh(small_cfg(64, 16, 43));
  CHECK_FALSE(bitwise_equal(a.coords, c.coords));
}

TEST_CASE("mesh shape invariants") {
  const KernelConfig cfg = small_cfg(100, 16, 7);
  const Mesh mesh = build_mesh(cfg);
  CHECK(mesh.nnode > 0);
  REQUIRE(mesh.lnods.size() == 4 * cfg.nelem);
  for (int64_t node : mesh.lnods) {
    CHECK(node >= 0);
    CHECK(static_cast<uint64_t>(node) < mesh.nnode);
  }
  REQUIRE(mesh.coords.size() == 3 * mesh.nnode);
  for (double x : mesh.coords) {
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  REQUIRE(mesh.elem_key.size() == cfg.nelem);
  for (double k : mesh.elem_key) {
    CHECK(k >= 0.0);
    CHECK(k < 1.0);
  }
  // Neighbouring tetrahedra share nodes: there must be fewer nodes than 4x
  // the element count once more than one cell exists.
  CHECK(mesh.nnode < 4 * cfg.nelem);
}

TEST_CASE("reference assembly reproduces its frozen checksum") {
  // Golden pinned at first implementation; any change to mesh generation,
  // accumulation order or phase arithmetic shows up here.
  const KernelConfig cfg = small_cfg(64, 16, 42);
  const AssemblyOutputs out = reference_assembly(cfg, build_mesh(cfg));
  REQUIRE(out.global_rhs.size() == 3 * build_mesh(cfg).nnode);
  REQUIRE(out.global_mat.size() == 16 * cfg.nelem);
  CHECK(out.skipped == 0);
  CHECK(output_checksum(out) == 0xcc19971e6008e8fcull);
}

TEST_CASE("all six variants match the reference bitwise") {
  const KernelConfig cfg = small_cfg(48, 16, 7);
  const Mesh mesh = build_mesh(cfg);
  const AssemblyOutputs want = reference_assembly(cfg, mesh);
  for (Variant v : kAllVariants) {
    CAPTURE(variant_name(v));
    const VariantRun got = run_one(v, cfg, mesh);
    check_matches_reference(got, want);
    CHECK(got.rr.cycles > 0);
    CHECK(got.rr.instructions > 0);
  }
}

TEST_CASE("machine vl_max caps vector grants without changing results") {
  const KernelConfig cfg = small_cfg(96, 64, 11);
  const Mesh mesh = build_mesh(cfg);
  const AssemblyOutputs want = reference_assembly(cfg, mesh);

  uint64_t instr_at_8 = 0;
  uint64_t instr_at_64 = 0;
  for (uint32_t vl_max : {8u, 64u, 256u}) {
    CAPTURE(vl_max);
    uint16_t max_grant = 0;
    auto hook = [&](const TraceEvent& ev) {
      if (ev.opcode == Opcode::vsetvl) max_grant = std::max(max_grant, ev.vl);
    };
    const VariantRun got = run_one(Variant::FINAL, cfg, mesh, vl_max, hook);
    check_matches_reference(got, want);
    CHECK(max_grant <= vl_max);
    if (vl_max == 8) instr_at_8 = got.rr.instructions;
    if (vl_max == 64) {
      instr_at_64 = got.rr.instructions;
      CHECK(max_grant == 64);
    }
    // Requested length 64 is granted in full from vl_max = 64 on, so the
    // stream stops depending on vl_max there.
    if (vl_max == 256) CHECK(got.rr.instructions == instr_at_64);
  }
  CHECK(instr_at_8 > instr_at_64);
}

TEST_CASE("remainder strips shorten via vsetvl") {
  const KernelConfig cfg = small_cfg(37, 16, 5);
  const Mesh mesh = build_mesh(cfg);
  const AssemblyOutputs want = reference_assembly(cfg, mesh);

  std::set<uint16_t> phase3_grants;
  auto hook = [&](const TraceEvent& ev) {
    if (ev.phase == 3 && ev.opcode == Opcode::vsetvl) phase3_grants.insert(ev.vl);
  };
  const VariantRun got = run_one(Variant::AUTOVEC, cfg, mesh, 256, hook);
  check_matches_reference(got, want);
  // 37 elements in strips of 16: two full strips and a 5-element tail.
  CHECK(phase3_grants == std::set<uint16_t>{5, 16});
}

TEST_CASE("explicit two-node pairing pins phase-2 vector length at 4") {
  const KernelConfig cfg = small_cfg(128, 64, 3);
  const Mesh mesh = build_mesh(cfg);

  // The gather phase has no vector arithmetic; its vector work is the
  // indexed loads and stores, so the law covers every vector-class event.
  auto phase2_vector_vls = [&](Variant v) {
    std::set<uint16_t> vls;
    auto hook = [&](const TraceEvent& ev) {
      if (ev.phase == 2 && is_vector(ev.cls)) vls.insert(ev.vl);
    };
    run_one(v, cfg, mesh, 256, hook);
    return vls;
  };

  CHECK(phase2_vector_vls(Variant::VEC2) == std::set<uint16_t>{4});
  // The restructured variants run phase 2 at the full requested length.
  CHECK(phase2_vector_vls(Variant::IVEC2) == std::set<uint16_t>{64});
  CHECK(phase2_vector_vls(Variant::FINAL) == std::set<uint16_t>{64});
  // The naive vectorization leaves phase 2 scalar.
  CHECK(phase2_vector_vls(Variant::AUTOVEC).empty());
}

TEST_CASE("requested lengths above vl_max are granted at vl_max") {
  const KernelConfig cfg = small_cfg(512, 512, 9);
  const Mesh mesh = build_mesh(cfg);
  const AssemblyOutputs want = reference_assembly(cfg, mesh);

  std::set<uint16_t> grants;
  auto hook = [&](const TraceEvent& ev) {
    if (ev.phase == 3 && ev.opcode == Opcode::vsetvl) grants.insert(ev.vl);
  };
  const VariantRun got = run_one(Variant::FINAL, cfg, mesh, 256, hook);
  check_matches_reference(got, want);
  CHECK(grants == std::set<uint16_t>{256});
}

TEST_CASE("inverted elements are skipped identically on both paths") {
  const KernelConfig cfg = small_cfg(48, 16, 7);
  Mesh mesh = build_mesh(cfg);
  // Swapping two vertices flips the element's orientation; the phase-8
  // guard must reject it in the reference and in every emitted variant.
  std::swap(mesh.lnods[0 * cfg.nelem + 3], mesh.lnods[1 * cfg.nelem + 3]);
  std::swap(mesh.lnods[0 * cfg.nelem + 20], mesh.lnods[1 * cfg.nelem + 20]);

  const AssemblyOutputs want = reference_assembly(cfg, mesh);
  CHECK(want.skipped == 2);
  for (Variant v : {Variant::SCALAR, Variant::AUTOVEC, Variant::FINAL}) {
    CAPTURE(variant_name(v));
    const VariantRun got = run_one(v, cfg, mesh);
    check_matches_reference(got, want);
  }
}

TEST_CASE("explicit-only mode leaves the elemental matrix out") {
  KernelConfig cfg = small_cfg(48, 16, 7);
  cfg.semi_implicit = false;
  const Mesh mesh = build_mesh(cfg);
  const AssemblyOutputs want = reference_assembly(cfg, mesh);
  CHECK(want.global_mat.empty());
  CHECK(std::any_of(want.global_rhs.begin(), want.global_rhs.end(),
                    [](double x) { return x != 0.0; }));

  const VariantRun got = run_one(Variant::FINAL, cfg, mesh);
  check_matches_reference(got, want);
}

TEST_CASE("the guarded scatter stays scalar in every variant") {
  const KernelConfig cfg = small_cfg(16, 16, 2);
  const Mesh mesh = build_mesh(cfg);
  for (Variant v : kAllVariants) {
    CAPTURE(variant_name(v));
    for (const Instruction& ins : emit_phase(8, v, cfg, mesh))
      CHECK_FALSE(is_vector(classify(ins.opcode)));
  }
}

TEST_CASE("emitted streams round-trip through the text format") {
  const KernelConfig cfg = small_cfg(16, 16, 2);
  const Mesh mesh = build_mesh(cfg);
  for (Variant v : {Variant::SCALAR, Variant::VEC2, Variant::FINAL}) {
    for (unsigned phase = 1; phase <= 8; ++phase) {
      CAPTURE(variant_name(v));
      CAPTURE(phase);
      const std::vector<Instruction> program = emit_phase(phase, v, cfg, mesh);
      REQUIRE_FALSE(program.empty());
      std::string text;
      for (const Instruction& ins : program) {
        const Instruction back = parse_instruction(format_instruction(ins));
        CHECK(back == ins);
        text += format_instruction(ins);
        text += '\n';
      }
      CHECK(parse_program(text) == program);
    }
  }
}

TEST_CASE("variant names round-trip") {
  for (Variant v : kAllVariants) CHECK(variant_from_name(variant_name(v)) == v);
  CHECK_THROWS_AS(variant_from_name("turbo"), std::invalid_argument);
}
