#pragma once

// Synthetic element-assembly mini-app over the mini ISA: deterministic
// tetrahedral mesh, a scalar double-precision oracle for the eight phases,
// and per-variant instruction-stream emitters whose execution must reproduce
// the oracle bit for bit.
//
// Phases:
//   1  per-element material-table search (data-dependent trip count) and
//      velocity gather into elvel
//   2  coordinate gather into elcod
//   3  Jacobian, determinant and inverse; stores xjaci and gpdet
//   4  shape-derivative arrays gpcar at each integration point
//   5  time-integration scaling: gpvol and the elrhs initialization
//   6  convective residual accumulation into elrhs
//   7  viscous contribution: elmat (semi-implicit only) and elrhs
//   8  per-element validity guard, scatter of elrhs into global_rhs and
//      copy of elmat into global_mat (always scalar: neighbouring elements
//      share nodes, so the scatter has write conflicts)
//
// All elemental scratch arrays are vector_size-innermost: lane iv is the
// contiguous dimension, so vectorizing over elements yields unit stride and
// vectorizing over nodes yields stride vector_size*8.

#include <array>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "veclens/costmodel.hpp"
#include "veclens/isa.hpp"
#include "veclens/metrics.hpp"
#include "veclens/vvm.hpp"

namespace veclens {

struct KernelConfig {
  uint32_t vector_size = 256;  // elements per kernel call; sweep grid below
  uint64_t nelem = 4096;
  uint32_t pnode = 4;   // nodes per element (tetrahedra)
  uint32_t ndime = 3;
  uint32_t ngauss = 4;
  uint64_t seed = 42;
  bool semi_implicit = true;  // emit the phase-7 elemental matrices

  void validate() const;  // throws std::invalid_argument
};

inline constexpr std::array<uint32_t, 6> kSweepSizes = {16, 64, 128, 240, 256, 512};

struct Mesh {
  uint64_t nnode = 0;
  std::vector<double> coords;    // [ndime][nnode], plane-major
  std::vector<double> velocity;  // [ndime][nnode]
  std::vector<int64_t> lnods;    // [pnode][nelem], node ids
  std::array<double, 16> material_table{};
  std::vector<double> elem_key;  // [nelem], search keys in [0,1)
};

// Structured tetrahedral decomposition of a jittered cube grid; neighbouring
// elements share nodes. Deterministic in cfg.seed.
Mesh build_mesh(const KernelConfig& cfg);

enum class Variant { SCALAR, AUTOVEC, VEC2, IVEC2, VEC1, FINAL };
inline constexpr std::array<Variant, 6> kAllVariants = {Variant::SCALAR, Variant::AUTOVEC,
                                                        Variant::VEC2,   Variant::IVEC2,
                                                        Variant::VEC1,   Variant::FINAL};
std::string_view variant_name(Variant v);
Variant variant_from_name(std::string_view name);  // throws std::invalid_argument

struct AssemblyOutputs {
  std::vector<double> global_rhs;  // [ndime][nnode]
  std::vector<double> global_mat;  // [nelem][pnode*pnode]; empty when not semi-implicit
  uint64_t skipped = 0;            // elements rejected by the phase-8 guard
};

// Scalar ground truth: plain double evaluation of all phases in a fixed
// accumulation order (gauss outermost, then inode, jnode, idim). Every
// statement performs exactly one rounding, mirroring the emitted streams.
AssemblyOutputs reference_assembly(const KernelConfig& cfg, const Mesh& mesh);

// Machine-memory plan: every plane is 64-byte aligned. Global planes hold
// mesh-level data; elemental planes hold one chunk (vector_size lanes) and
// are reused across chunks.
struct MemoryLayout {
  uint32_t vs = 0;
  uint64_t nnode = 0, nelem = 0;
  uint64_t coords0 = 0, velocity0 = 0, lnods0 = 0, material0 = 0, key0 = 0;
  uint64_t rhs0 = 0, mat0 = 0;
  uint64_t elcod0 = 0, elvel0 = 0, elmut0 = 0, xjaci0 = 0, gpdet0 = 0;
  uint64_t gpcar0 = 0, gpvol0 = 0, gpvel0 = 0, elrhs0 = 0, elmat0 = 0;
  uint64_t total = 0;

  uint64_t coords(unsigned d) const { return coords0 + d * node_plane(); }
  uint64_t velocity(unsigned d) const { return velocity0 + d * node_plane(); }
  uint64_t lnods(unsigned n) const { return lnods0 + n * elem_plane(); }
  uint64_t global_rhs(unsigned d) const { return rhs0 + d * node_plane(); }
  uint64_t global_mat(uint64_t e) const { return mat0 + e * 16 * 8; }

  uint64_t elcod(unsigned d, unsigned n) const { return elcod0 + (d * 4 + n) * lane_plane(); }
  uint64_t elvel(unsigned d, unsigned n) const { return elvel0 + (d * 4 + n) * lane_plane(); }
  uint64_t xjaci(unsigned i, unsigned j) const { return xjaci0 + (i * 3 + j) * lane_plane(); }
  uint64_t gpcar(unsigned j, unsigned n, unsigned g) const {
    return gpcar0 + ((g * 4 + n) * 3 + j) * lane_plane();
  }
  uint64_t gpvol(unsigned g) const { return gpvol0 + g * lane_plane(); }
  uint64_t gpvel(unsigned d, unsigned g) const { return gpvel0 + (g * 3 + d) * lane_plane(); }
  uint64_t elrhs(unsigned d, unsigned n) const { return elrhs0 + (d * 4 + n) * lane_plane(); }
  uint64_t elmat(unsigned n, unsigned m) const { return elmat0 + (n * 4 + m) * lane_plane(); }

  uint64_t node_plane() const { return align64(nnode * 8); }
  uint64_t elem_plane() const { return align64(nelem * 8); }
  uint64_t lane_plane() const { return align64(uint64_t(vs) * 8); }
  static uint64_t align64(uint64_t bytes) { return (bytes + 63) & ~uint64_t(63); }
};

MemoryLayout build_layout(const KernelConfig& cfg);

// Copies mesh-level inputs into machine memory (debug path, no cache traffic).
void load_mesh(MachineState& m, const MemoryLayout& lay, const KernelConfig& cfg, const Mesh& mesh);

// Instruction stream of one phase under one variant, expanded over all
// chunks (loops arrive pre-expanded; data-dependent trip counts and guards
// are resolved against the mesh). Mainly a test/inspection surface; the
// sweep path streams the same instructions without materializing them.
std::vector<Instruction> emit_phase(unsigned phase, Variant variant, const KernelConfig& cfg,
                                    const Mesh& mesh);

struct RunResult {
  Aggregator agg;             // per-phase counters
  uint64_t skipped = 0;       // phase-8 guard rejections
  uint64_t instructions = 0;
  uint64_t cycles = 0;
};

// Executes all phases chunk by chunk on the given machine. The machine's
// vl_max may be smaller than cfg.vector_size; strips then shorten via vsetvl
// (vector-length-agnostic execution). `hook`, when set, sees every event.
RunResult run_variant(Variant variant, const KernelConfig& cfg, const Mesh& mesh,
                      const CostModelConfig& cost, MachineState& m,
                      const std::function<void(const TraceEvent&)>& hook = {});

// Reads assembled outputs back out of machine memory for comparison.
AssemblyOutputs read_outputs(const MachineState& m, const MemoryLayout& lay,
                             const KernelConfig& cfg, uint64_t skipped);

}  // namespace veclens
