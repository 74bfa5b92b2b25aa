#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

#include "kernel_math.hpp"
#include "veclens/kernels.hpp"

// Instruction emitters for the eight assembly phases under the six
// transformation variants. Streams arrive fully expanded: loops are unrolled
// into per-iteration instruction groups, data-dependent trip counts (the
// material-table walk, the phase-8 guard) are resolved against the mesh, and
// back-edges stay in the stream as branch cost tokens. Code generation is
// deliberately array-oriented: every statement reloads its operands from the
// elemental arrays and stores its result back, the way straightforward loop
// vectorization of the source kernels would.
//
// Register conventions
//   x4 lane byte offset (iv*8)      x5 vsetvl grant / comparison flag
//   x6 address scratch              x7 loop counter       x8 loop limit
//   x9 node id / table index        x10 scaled-index scratch
//   f1-f3 / v1-v2 operand loads     v3/v4 broadcast constants
//   f5-f9 / v5-v9 statement temps   f10.. / v10.. phase-3 geometry:
//   Jacobian 10-18, adjugate 19-27, products 28-29, determinant 30,
//   reciprocal 31.
//
// Branch displacements are cost tokens only: imm(-1) marks a loop back-edge,
// imm(1) the phase-8 guard skip.

namespace veclens {

namespace {

using detail::deriv_g;
using detail::kCof;
using detail::kDtInv;
using detail::kGaussW;
using detail::shape;

struct ChunkCtx {
  const KernelConfig& cfg;
  const Mesh& mesh;
  const MemoryLayout& lay;
  uint64_t e0;      // first element of the chunk
  uint32_t count;   // elements in the chunk
  uint32_t vl_max;  // machine cap mirrored by the vsetvl grants
};

template <class Sink>
class Asm {
 public:
  Asm(Sink& sink, uint8_t phase) : sink_(sink), phase_(phase) {}

  void op(Opcode o, Operand dest, Operand a = {}, Operand b = {}, Operand c = {}) {
    Instruction ins;
    ins.opcode = o;
    ins.phase = phase_;
    ins.dest = dest;
    ins.src = {a, b, c};
    sink_(ins);
  }

  // x6 <- x4 + plane: lane-indexed address in an elemental plane (or a
  // chunk-shifted element-indexed plane).
  void lane(uint64_t plane) { op(Opcode::add, xreg(6), xreg(4), imm(int64_t(plane))); }
  // x6 <- x10 + plane: node- or row-scaled address.
  void scaled(uint64_t plane) { op(Opcode::add, xreg(6), xreg(10), imm(int64_t(plane))); }
  // x6 <- absolute plane base (gather/scatter base operand).
  void fixed(uint64_t plane) { op(Opcode::add, xreg(6), xreg(0), imm(int64_t(plane))); }

  void sload(Operand dst, uint64_t plane) {
    lane(plane);
    op(Opcode::load, dst, xreg(6));
  }
  void sstore(Operand src, uint64_t plane) {
    lane(plane);
    op(Opcode::store, src, xreg(6));
  }
  void vload(unsigned vd, uint64_t plane) {
    lane(plane);
    op(Opcode::vload_unit, vreg(vd), xreg(6));
  }
  void vstore(unsigned vs, uint64_t plane) {
    lane(plane);
    op(Opcode::vstore_unit, vreg(vs), xreg(6));
  }

  // Scalar loop over the chunk's elements, one body expansion per element.
  template <class Body>
  void element_loop(uint32_t count, Body&& body) {
    op(Opcode::add, xreg(7), xreg(0), imm(0));
    op(Opcode::add, xreg(8), xreg(0), imm(count));
    for (uint32_t iv = 0; iv < count; ++iv) {
      op(Opcode::mul, xreg(4), xreg(7), imm(8));
      body(iv);
      op(Opcode::add, xreg(7), xreg(7), imm(1));
      op(Opcode::cmp, xreg(5), xreg(7), xreg(8));
      op(Opcode::branch, xreg(5), imm(-1));
    }
  }

  // Stripmined loop: every strip requests the remaining length and the
  // machine grants min(remaining, vl_max).
  template <class Body>
  void strip_loop(uint32_t count, uint32_t vl_max, Body&& body) {
    op(Opcode::add, xreg(7), xreg(0), imm(0));
    op(Opcode::add, xreg(8), xreg(0), imm(count));
    for (uint32_t done = 0; done < count;) {
      const uint32_t vl = std::min(count - done, vl_max);
      op(Opcode::vsetvl, xreg(5), imm(count - done));
      op(Opcode::mul, xreg(4), xreg(7), imm(8));
      body(vl);
      op(Opcode::add, xreg(7), xreg(7), xreg(5));
      op(Opcode::cmp, xreg(5), xreg(7), xreg(8));
      op(Opcode::branch, xreg(5), imm(-1));
      done += vl;
    }
  }

 private:
  Sink& sink_;
  uint8_t phase_;
};

enum class P2Style { Scalar, Packet4, Interchanged };

P2Style p2_style(Variant v) {
  if (v == Variant::VEC2) return P2Style::Packet4;
  if (v == Variant::IVEC2 || v == Variant::FINAL) return P2Style::Interchanged;
  return P2Style::Scalar;
}

bool p1_fissioned(Variant v) { return v == Variant::VEC1 || v == Variant::FINAL; }

// ---- phase 1: material lookup (A) and elemental velocity gather (B) -------

template <class Sink>
void p1_search(Asm<Sink>& a, const ChunkCtx& c, uint64_t e) {
  const MemoryLayout& L = c.lay;
  a.sload(freg(1), L.key0 + c.e0 * 8);
  a.op(Opcode::add, xreg(9), xreg(0), imm(0));
  const unsigned steps = detail::search_steps(c.mesh, e);
  for (unsigned p = 0; p <= steps; ++p) {
    a.op(Opcode::mul, xreg(10), xreg(9), imm(8));
    a.scaled(L.material0);
    a.op(Opcode::load, freg(2), xreg(6));
    a.op(Opcode::cmp, xreg(5), freg(2), freg(1));
    a.op(Opcode::branch, xreg(5), imm(-1));
    if (p < steps) a.op(Opcode::add, xreg(9), xreg(9), imm(1));
  }
  a.op(Opcode::fmul, freg(2), freg(2), fimm(0.1));
  a.op(Opcode::fadd, freg(2), freg(2), fimm(0.05));
  a.sstore(freg(2), L.elmut0);
}

template <class Sink>
void p1_gather_scalar(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned n = 0; n < 4; ++n) {
    a.sload(xreg(9), L.lnods(n) + c.e0 * 8);
    a.op(Opcode::mul, xreg(10), xreg(9), imm(8));
    for (unsigned d = 0; d < 3; ++d) {
      a.scaled(L.velocity(d));
      a.op(Opcode::load, freg(1), xreg(6));
      a.sstore(freg(1), L.elvel(d, n));
    }
  }
}

template <class Sink>
void p1(Asm<Sink>& a, const ChunkCtx& c, bool fissioned) {
  const MemoryLayout& L = c.lay;
  if (!fissioned) {
    a.element_loop(c.count, [&](uint32_t iv) {
      p1_search(a, c, c.e0 + iv);
      p1_gather_scalar(a, c);
    });
    return;
  }
  a.element_loop(c.count, [&](uint32_t iv) { p1_search(a, c, c.e0 + iv); });
  a.strip_loop(c.count, c.vl_max, [&](uint32_t) {
    for (unsigned n = 0; n < 4; ++n) {
      a.lane(L.lnods(n) + c.e0 * 8);
      a.op(Opcode::vload_unit, vreg(1), xreg(6));
      for (unsigned d = 0; d < 3; ++d) {
        a.fixed(L.velocity(d));
        a.op(Opcode::vload_indexed, vreg(2), xreg(6), vreg(1));
        a.vstore(2, L.elvel(d, n));
      }
    }
  });
}

// ---- phase 2: elemental coordinate gather ----------------------------------

template <class Sink>
void p2(Asm<Sink>& a, const ChunkCtx& c, Variant variant) {
  const MemoryLayout& L = c.lay;
  switch (p2_style(variant)) {
    case P2Style::Scalar:
      a.element_loop(c.count, [&](uint32_t) {
        for (unsigned n = 0; n < 4; ++n) {
          a.sload(xreg(9), L.lnods(n) + c.e0 * 8);
          a.op(Opcode::mul, xreg(10), xreg(9), imm(8));
          for (unsigned d = 0; d < 3; ++d) {
            a.scaled(L.coords(d));
            a.op(Opcode::load, freg(1), xreg(6));
            a.sstore(freg(1), L.elcod(d, n));
          }
        }
      });
      break;
    case P2Style::Packet4:
      // One short vector per element: the four node ids of one connectivity
      // column, then a gather and a strided spread into the elemental planes.
      a.element_loop(c.count, [&](uint32_t) {
        a.op(Opcode::vsetvl, xreg(5), imm(4));
        a.lane(L.lnods(0) + c.e0 * 8);
        a.op(Opcode::vload_strided, vreg(1), xreg(6), imm(int64_t(L.elem_plane())));
        for (unsigned d = 0; d < 3; ++d) {
          a.fixed(L.coords(d));
          a.op(Opcode::vload_indexed, vreg(2), xreg(6), vreg(1));
          a.lane(L.elcod(d, 0));
          a.op(Opcode::vstore_strided, vreg(2), xreg(6), imm(int64_t(L.lane_plane())));
        }
      });
      break;
    case P2Style::Interchanged:
      // Loop interchange: vectorize over the elements of the chunk, one
      // connectivity row per node position.
      a.strip_loop(c.count, c.vl_max, [&](uint32_t) {
        for (unsigned n = 0; n < 4; ++n) {
          a.lane(L.lnods(n) + c.e0 * 8);
          a.op(Opcode::vload_unit, vreg(1), xreg(6));
          for (unsigned d = 0; d < 3; ++d) {
            a.fixed(L.coords(d));
            a.op(Opcode::vload_indexed, vreg(2), xreg(6), vreg(1));
            a.vstore(2, L.elcod(d, n));
          }
        }
      });
      break;
  }
}

// ---- phase 3: Jacobian, determinant, inverse -------------------------------

template <class Sink>
void p3_scalar_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      a.sload(freg(1), L.elcod(i, j + 1));
      a.sload(freg(2), L.elcod(i, 0));
      a.op(Opcode::fmadd_unfused, freg(10 + 3 * i + j), freg(2), fimm(-1.0), freg(1));
    }
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      const detail::CofTerm& t = kCof[i][j];
      a.op(Opcode::fmul, freg(28), freg(10 + 3 * t.u0 + t.u1), freg(10 + 3 * t.u2 + t.u3));
      a.op(Opcode::fmul, freg(29), freg(10 + 3 * t.v0 + t.v1), freg(10 + 3 * t.v2 + t.v3));
      a.op(Opcode::fmadd_unfused, freg(19 + 3 * i + j), freg(29), fimm(-1.0), freg(28));
    }
  a.op(Opcode::fmul, freg(30), freg(10), freg(19));
  a.op(Opcode::fmadd_unfused, freg(30), freg(11), freg(22), freg(30));
  a.op(Opcode::fmadd_unfused, freg(30), freg(12), freg(25), freg(30));
  a.sstore(freg(30), L.gpdet0);
  a.op(Opcode::fdiv, freg(31), fimm(1.0), freg(30));
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      a.op(Opcode::fmul, freg(1), freg(19 + 3 * i + j), freg(31));
      a.sstore(freg(1), L.xjaci(i, j));
    }
}

template <class Sink>
void p3_vector_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      a.vload(1, L.elcod(i, j + 1));
      a.vload(2, L.elcod(i, 0));
      a.op(Opcode::vfsub, vreg(10 + 3 * i + j), vreg(1), vreg(2));
    }
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      const detail::CofTerm& t = kCof[i][j];
      a.op(Opcode::vfmul, vreg(28), vreg(10 + 3 * t.u0 + t.u1), vreg(10 + 3 * t.u2 + t.u3));
      a.op(Opcode::vfmul, vreg(29), vreg(10 + 3 * t.v0 + t.v1), vreg(10 + 3 * t.v2 + t.v3));
      a.op(Opcode::vfsub, vreg(19 + 3 * i + j), vreg(28), vreg(29));
    }
  a.op(Opcode::vfmul, vreg(30), vreg(10), vreg(19));
  a.op(Opcode::vfmacc, vreg(30), vreg(11), vreg(22), vreg(30));
  a.op(Opcode::vfmacc, vreg(30), vreg(12), vreg(25), vreg(30));
  a.vstore(30, L.gpdet0);
  a.op(Opcode::vbroadcast, vreg(28), fimm(1.0));
  a.op(Opcode::vfdiv, vreg(31), vreg(28), vreg(30));
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      a.op(Opcode::vfmul, vreg(1), vreg(19 + 3 * i + j), vreg(31));
      a.vstore(1, L.xjaci(i, j));
    }
}

// ---- phase 4: Cartesian shape derivatives ----------------------------------

// The inverse Jacobian is read-only here and shared by every integration
// point, so it is staged once into r10..r18 (where phase 3 kept it) and only
// the gpcar stores stream through memory.
constexpr unsigned p4_xjaci_reg(unsigned i, unsigned j) { return 10 + 3 * i + j; }

template <class Sink>
void p4_scalar_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) a.sload(freg(p4_xjaci_reg(i, j)), L.xjaci(i, j));
  for (unsigned g = 0; g < 4; ++g)
    for (unsigned n = 0; n < 4; ++n)
      for (unsigned j = 0; j < 3; ++j) {
        if (n == 0) {
          const double dg = deriv_g(0, 0, g);
          a.op(Opcode::fmul, freg(5), freg(p4_xjaci_reg(0, j)), fimm(dg));
          a.op(Opcode::fmadd_unfused, freg(5), freg(p4_xjaci_reg(1, j)), fimm(dg), freg(5));
          a.op(Opcode::fmadd_unfused, freg(5), freg(p4_xjaci_reg(2, j)), fimm(dg), freg(5));
        } else {
          a.op(Opcode::fmul, freg(5), freg(p4_xjaci_reg(n - 1, j)),
               fimm(deriv_g(n - 1, n, g)));
        }
        a.sstore(freg(5), L.gpcar(j, n, g));
      }
}

template <class Sink>
void p4_vector_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) a.vload(p4_xjaci_reg(i, j), L.xjaci(i, j));
  for (unsigned g = 0; g < 4; ++g) {
    a.op(Opcode::vbroadcast, vreg(3), fimm(deriv_g(0, 0, g)));  // node 0 (all axes)
    a.op(Opcode::vbroadcast, vreg(4), fimm(deriv_g(0, 1, g)));  // nodes 1-3
    for (unsigned n = 0; n < 4; ++n)
      for (unsigned j = 0; j < 3; ++j) {
        if (n == 0) {
          a.op(Opcode::vfmul, vreg(5), vreg(p4_xjaci_reg(0, j)), vreg(3));
          a.op(Opcode::vfmacc, vreg(5), vreg(p4_xjaci_reg(1, j)), vreg(3), vreg(5));
          a.op(Opcode::vfmacc, vreg(5), vreg(p4_xjaci_reg(2, j)), vreg(3), vreg(5));
        } else {
          a.op(Opcode::vfmul, vreg(5), vreg(p4_xjaci_reg(n - 1, j)), vreg(4));
        }
        a.vstore(5, L.gpcar(j, n, g));
      }
  }
}

// ---- phase 5: integration volumes and time-term right-hand side ------------

template <class Sink>
void p5_scalar_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned g = 0; g < 4; ++g) {
    a.sload(freg(1), L.gpdet0);
    a.op(Opcode::fmul, freg(2), freg(1), fimm(kGaussW));
    a.sstore(freg(2), L.gpvol(g));
  }
  for (unsigned n = 0; n < 4; ++n)
    for (unsigned d = 0; d < 3; ++d) {
      a.sload(freg(1), L.gpdet0);
      a.op(Opcode::fmul, freg(2), freg(1), fimm(kDtInv));
      a.sload(freg(3), L.elvel(d, n));
      a.op(Opcode::fmul, freg(5), freg(2), freg(3));
      a.sstore(freg(5), L.elrhs(d, n));
    }
}

template <class Sink>
void p5_vector_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  a.op(Opcode::vbroadcast, vreg(3), fimm(kGaussW));
  a.op(Opcode::vbroadcast, vreg(4), fimm(kDtInv));
  for (unsigned g = 0; g < 4; ++g) {
    a.vload(1, L.gpdet0);
    a.op(Opcode::vfmul, vreg(5), vreg(1), vreg(3));
    a.vstore(5, L.gpvol(g));
  }
  for (unsigned n = 0; n < 4; ++n)
    for (unsigned d = 0; d < 3; ++d) {
      a.vload(1, L.gpdet0);
      a.op(Opcode::vfmul, vreg(5), vreg(1), vreg(4));
      a.vload(2, L.elvel(d, n));
      a.op(Opcode::vfmul, vreg(6), vreg(5), vreg(2));
      a.vstore(6, L.elrhs(d, n));
    }
}

// ---- phase 6: convective term -----------------------------------------------

template <class Sink>
void p6_scalar_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned g = 0; g < 4; ++g) {
    for (unsigned d = 0; d < 3; ++d) {
      a.sload(freg(1), L.elvel(d, 0));
      a.op(Opcode::fmul, freg(5), freg(1), fimm(shape(0, g)));
      for (unsigned n = 1; n < 4; ++n) {
        a.sload(freg(1), L.elvel(d, n));
        a.op(Opcode::fmadd_unfused, freg(5), freg(1), fimm(shape(n, g)), freg(5));
      }
      a.sstore(freg(5), L.gpvel(d, g));
    }
    for (unsigned n = 0; n < 4; ++n) {
      a.sload(freg(1), L.gpvel(0, g));
      a.sload(freg(2), L.gpcar(0, n, g));
      a.op(Opcode::fmul, freg(5), freg(1), freg(2));
      for (unsigned d = 1; d < 3; ++d) {
        a.sload(freg(1), L.gpvel(d, g));
        a.sload(freg(2), L.gpcar(d, n, g));
        a.op(Opcode::fmadd_unfused, freg(5), freg(1), freg(2), freg(5));
      }
      a.sload(freg(1), L.gpvol(g));
      a.op(Opcode::fmul, freg(6), freg(1), freg(5));
      a.op(Opcode::fmul, freg(7), freg(6), fimm(shape(n, g)));
      for (unsigned i = 0; i < 3; ++i) {
        a.sload(freg(1), L.elrhs(i, n));
        a.op(Opcode::fadd, freg(2), freg(1), freg(7));
        a.sstore(freg(2), L.elrhs(i, n));
      }
    }
  }
}

template <class Sink>
void p6_vector_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned g = 0; g < 4; ++g) {
    for (unsigned d = 0; d < 3; ++d) {
      a.vload(1, L.elvel(d, 0));
      a.op(Opcode::vbroadcast, vreg(3), fimm(shape(0, g)));
      a.op(Opcode::vfmul, vreg(5), vreg(1), vreg(3));
      for (unsigned n = 1; n < 4; ++n) {
        a.vload(1, L.elvel(d, n));
        a.op(Opcode::vbroadcast, vreg(3), fimm(shape(n, g)));
        a.op(Opcode::vfmacc, vreg(5), vreg(1), vreg(3), vreg(5));
      }
      a.vstore(5, L.gpvel(d, g));
    }
    for (unsigned n = 0; n < 4; ++n) {
      a.vload(1, L.gpvel(0, g));
      a.vload(2, L.gpcar(0, n, g));
      a.op(Opcode::vfmul, vreg(5), vreg(1), vreg(2));
      for (unsigned d = 1; d < 3; ++d) {
        a.vload(1, L.gpvel(d, g));
        a.vload(2, L.gpcar(d, n, g));
        a.op(Opcode::vfmacc, vreg(5), vreg(1), vreg(2), vreg(5));
      }
      a.vload(1, L.gpvol(g));
      a.op(Opcode::vfmul, vreg(6), vreg(1), vreg(5));
      a.op(Opcode::vbroadcast, vreg(3), fimm(shape(n, g)));
      a.op(Opcode::vfmul, vreg(7), vreg(6), vreg(3));
      for (unsigned i = 0; i < 3; ++i) {
        a.vload(1, L.elrhs(i, n));
        a.op(Opcode::vfadd, vreg(2), vreg(1), vreg(7));
        a.vstore(2, L.elrhs(i, n));
      }
    }
  }
}

// ---- phase 7: viscous stiffness ---------------------------------------------

// The jnode-side operands of one integration point are staged into registers
// before the node-pair loops (gpcar -> r6..r17, elvel -> r18..r29); the
// inode-side factors and the scalar coefficients are re-read per pair.  Those
// re-reads sit a few planes apart and stay L1-resident at every sweep size,
// so the phase's miss traffic is dominated by first touches.
constexpr unsigned p7_gpcar_reg(unsigned d, unsigned m) { return 6 + 3 * m + d; }
constexpr unsigned p7_elvel_reg(unsigned d, unsigned m) { return 18 + 3 * m + d; }

template <class Sink>
void p7_scalar_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned g = 0; g < 4; ++g) {
    for (unsigned m = 0; m < 4; ++m)
      for (unsigned d = 0; d < 3; ++d) a.sload(freg(p7_gpcar_reg(d, m)), L.gpcar(d, m, g));
    for (unsigned m = 0; m < 4; ++m)
      for (unsigned d = 0; d < 3; ++d) a.sload(freg(p7_elvel_reg(d, m)), L.elvel(d, m));
    for (unsigned n = 0; n < 4; ++n)
      for (unsigned m = 0; m < 4; ++m) {
        a.sload(freg(1), L.gpcar(0, n, g));
        a.op(Opcode::fmul, freg(2), freg(1), freg(p7_gpcar_reg(0, m)));
        for (unsigned d = 1; d < 3; ++d) {
          a.sload(freg(1), L.gpcar(d, n, g));
          a.op(Opcode::fmadd_unfused, freg(2), freg(1), freg(p7_gpcar_reg(d, m)), freg(2));
        }
        a.sload(freg(1), L.elmut0);
        a.sload(freg(3), L.gpvol(g));
        a.op(Opcode::fmul, freg(4), freg(1), freg(3));
        a.op(Opcode::fmul, freg(3), freg(4), freg(2));
        if (c.cfg.semi_implicit) {
          if (g == 0) {
            a.sstore(freg(3), L.elmat(n, m));
          } else {
            a.sload(freg(1), L.elmat(n, m));
            a.op(Opcode::fadd, freg(5), freg(1), freg(3));
            a.sstore(freg(5), L.elmat(n, m));
          }
        }
        for (unsigned d = 0; d < 3; ++d) {
          a.op(Opcode::fmul, freg(5), freg(3), freg(p7_elvel_reg(d, m)));
          a.sload(freg(1), L.elrhs(d, n));
          a.op(Opcode::fmadd_unfused, freg(2), freg(5), fimm(-1.0), freg(1));
          a.sstore(freg(2), L.elrhs(d, n));
        }
      }
  }
}

template <class Sink>
void p7_vector_body(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  for (unsigned g = 0; g < 4; ++g) {
    for (unsigned m = 0; m < 4; ++m)
      for (unsigned d = 0; d < 3; ++d) a.vload(p7_gpcar_reg(d, m), L.gpcar(d, m, g));
    for (unsigned m = 0; m < 4; ++m)
      for (unsigned d = 0; d < 3; ++d) a.vload(p7_elvel_reg(d, m), L.elvel(d, m));
    for (unsigned n = 0; n < 4; ++n)
      for (unsigned m = 0; m < 4; ++m) {
        a.vload(1, L.gpcar(0, n, g));
        a.op(Opcode::vfmul, vreg(2), vreg(1), vreg(p7_gpcar_reg(0, m)));
        for (unsigned d = 1; d < 3; ++d) {
          a.vload(1, L.gpcar(d, n, g));
          a.op(Opcode::vfmacc, vreg(2), vreg(1), vreg(p7_gpcar_reg(d, m)), vreg(2));
        }
        a.vload(1, L.elmut0);
        a.vload(3, L.gpvol(g));
        a.op(Opcode::vfmul, vreg(4), vreg(1), vreg(3));
        a.op(Opcode::vfmul, vreg(3), vreg(4), vreg(2));
        if (c.cfg.semi_implicit) {
          if (g == 0) {
            a.vstore(3, L.elmat(n, m));
          } else {
            a.vload(1, L.elmat(n, m));
            a.op(Opcode::vfadd, vreg(5), vreg(1), vreg(3));
            a.vstore(5, L.elmat(n, m));
          }
        }
        for (unsigned d = 0; d < 3; ++d) {
          a.op(Opcode::vfmul, vreg(5), vreg(3), vreg(p7_elvel_reg(d, m)));
          a.vload(1, L.elrhs(d, n));
          a.op(Opcode::vfsub, vreg(2), vreg(1), vreg(5));
          a.vstore(2, L.elrhs(d, n));
        }
      }
  }
}

// ---- phase 8: guarded scatter into the global system ------------------------

template <class Sink>
void p8(Asm<Sink>& a, const ChunkCtx& c) {
  const MemoryLayout& L = c.lay;
  a.element_loop(c.count, [&](uint32_t iv) {
    const uint64_t e = c.e0 + iv;
    a.sload(freg(1), L.gpdet0);
    a.op(Opcode::cmp, xreg(5), fimm(0.0), freg(1));
    a.op(Opcode::branch, xreg(5), imm(1));
    if (!(detail::element_geom(c.mesh, c.cfg.nelem, e).det > 0.0)) return;
    for (unsigned n = 0; n < 4; ++n) {
      a.sload(xreg(9), L.lnods(n) + c.e0 * 8);
      a.op(Opcode::mul, xreg(10), xreg(9), imm(8));
      for (unsigned d = 0; d < 3; ++d) {
        a.scaled(L.global_rhs(d));
        a.op(Opcode::load, freg(1), xreg(6));
        a.sload(freg(2), L.elrhs(d, n));
        a.op(Opcode::fadd, freg(1), freg(1), freg(2));
        a.scaled(L.global_rhs(d));
        a.op(Opcode::store, freg(1), xreg(6));
      }
    }
    if (c.cfg.semi_implicit) {
      a.op(Opcode::mul, xreg(10), xreg(7), imm(128));  // row stride of the matrix block
      for (unsigned n = 0; n < 4; ++n)
        for (unsigned m = 0; m < 4; ++m) {
          a.sload(freg(1), L.elmat(n, m));
          a.scaled(L.global_mat(c.e0) + (n * 4 + m) * 8);
          a.op(Opcode::store, freg(1), xreg(6));
        }
    }
  });
}

template <class Sink>
void emit_chunk_phase(Sink& sink, unsigned phase, Variant variant, const ChunkCtx& c) {
  Asm<Sink> a(sink, static_cast<uint8_t>(phase));
  const bool vec = variant != Variant::SCALAR;  // phases 3-7
  switch (phase) {
    case 1: p1(a, c, p1_fissioned(variant)); break;
    case 2: p2(a, c, variant); break;
    case 3:
      if (vec)
        a.strip_loop(c.count, c.vl_max, [&](uint32_t) { p3_vector_body(a, c); });
      else
        a.element_loop(c.count, [&](uint32_t) { p3_scalar_body(a, c); });
      break;
    case 4:
      if (vec)
        a.strip_loop(c.count, c.vl_max, [&](uint32_t) { p4_vector_body(a, c); });
      else
        a.element_loop(c.count, [&](uint32_t) { p4_scalar_body(a, c); });
      break;
    case 5:
      if (vec)
        a.strip_loop(c.count, c.vl_max, [&](uint32_t) { p5_vector_body(a, c); });
      else
        a.element_loop(c.count, [&](uint32_t) { p5_scalar_body(a, c); });
      break;
    case 6:
      if (vec)
        a.strip_loop(c.count, c.vl_max, [&](uint32_t) { p6_vector_body(a, c); });
      else
        a.element_loop(c.count, [&](uint32_t) { p6_scalar_body(a, c); });
      break;
    case 7:
      if (vec)
        a.strip_loop(c.count, c.vl_max, [&](uint32_t) { p7_vector_body(a, c); });
      else
        a.element_loop(c.count, [&](uint32_t) { p7_scalar_body(a, c); });
      break;
    case 8: p8(a, c); break;
    default: throw std::invalid_argument("phase must be in 1..8");
  }
}

struct Executor {
  MachineState& m;
  const CostModelConfig& cost;
  Aggregator& agg;
  const std::function<void(const TraceEvent&)>& hook;
  uint64_t seq = 0;

  void operator()(const Instruction& ins) {
    const TraceEvent ev = m.step(ins, cost, seq++);
    agg.add(ev);
    if (hook) hook(ev);
  }
};

}  // namespace

MemoryLayout build_layout(const KernelConfig& cfg) {
  cfg.validate();
  MemoryLayout L;
  L.vs = cfg.vector_size;
  uint64_t n = 1;
  while (6 * n * n * n < cfg.nelem) ++n;
  L.nnode = (n + 1) * (n + 1) * (n + 1);
  L.nelem = cfg.nelem;

  uint64_t at = 64;  // keep address zero unused
  L.coords0 = at;
  at += 3 * L.node_plane();
  L.velocity0 = at;
  at += 3 * L.node_plane();
  L.lnods0 = at;
  at += 4 * L.elem_plane();
  L.material0 = at;
  at += MemoryLayout::align64(16 * 8);
  L.key0 = at;
  at += L.elem_plane();
  L.rhs0 = at;
  at += 3 * L.node_plane();
  L.mat0 = at;
  at += MemoryLayout::align64(L.nelem * 16 * 8);
  L.elcod0 = at;
  at += 12 * L.lane_plane();
  L.elvel0 = at;
  at += 12 * L.lane_plane();
  L.elmut0 = at;
  at += L.lane_plane();
  L.xjaci0 = at;
  at += 9 * L.lane_plane();
  L.gpdet0 = at;
  at += L.lane_plane();
  L.gpcar0 = at;
  at += 48 * L.lane_plane();
  L.gpvol0 = at;
  at += 4 * L.lane_plane();
  L.gpvel0 = at;
  at += 12 * L.lane_plane();
  L.elrhs0 = at;
  at += 12 * L.lane_plane();
  L.elmat0 = at;
  at += 16 * L.lane_plane();
  L.total = at;
  return L;
}

void load_mesh(MachineState& m, const MemoryLayout& lay, const KernelConfig& cfg,
               const Mesh& mesh) {
  if (mesh.nnode != lay.nnode || mesh.lnods.size() != 4 * cfg.nelem ||
      mesh.elem_key.size() != cfg.nelem)
    throw std::invalid_argument("mesh does not match the layout's configuration");
  for (unsigned d = 0; d < 3; ++d)
    for (uint64_t i = 0; i < mesh.nnode; ++i) {
      m.poke_f64(lay.coords(d) + i * 8, mesh.coords[d * mesh.nnode + i]);
      m.poke_f64(lay.velocity(d) + i * 8, mesh.velocity[d * mesh.nnode + i]);
    }
  for (unsigned n = 0; n < 4; ++n)
    for (uint64_t e = 0; e < cfg.nelem; ++e)
      m.poke_i64(lay.lnods(n) + e * 8, mesh.lnods[n * cfg.nelem + e]);
  for (unsigned i = 0; i < 16; ++i) m.poke_f64(lay.material0 + i * 8, mesh.material_table[i]);
  for (uint64_t e = 0; e < cfg.nelem; ++e) m.poke_f64(lay.key0 + e * 8, mesh.elem_key[e]);
  // Global outputs start from zero even on a reused machine.
  for (unsigned d = 0; d < 3; ++d)
    for (uint64_t i = 0; i < mesh.nnode; ++i) m.poke_f64(lay.global_rhs(d) + i * 8, 0.0);
  for (uint64_t e = 0; e < cfg.nelem; ++e)
    for (unsigned k = 0; k < 16; ++k) m.poke_f64(lay.global_mat(e) + k * 8, 0.0);
}

std::vector<Instruction> emit_phase(unsigned phase, Variant variant, const KernelConfig& cfg,
                                    const Mesh& mesh) {
  cfg.validate();
  if (phase < 1 || phase > 8) throw std::invalid_argument("phase must be in 1..8");
  const MemoryLayout lay = build_layout(cfg);
  const uint32_t vl_max = MachineConfig{}.vl_max;
  std::vector<Instruction> out;
  auto sink = [&](const Instruction& ins) { out.push_back(ins); };
  for (uint64_t e0 = 0; e0 < cfg.nelem; e0 += cfg.vector_size) {
    const auto count = static_cast<uint32_t>(
        std::min<uint64_t>(cfg.vector_size, cfg.nelem - e0));
    const ChunkCtx c{cfg, mesh, lay, e0, count, vl_max};
    emit_chunk_phase(sink, phase, variant, c);
  }
  return out;
}

RunResult run_variant(Variant variant, const KernelConfig& cfg, const Mesh& mesh,
                      const CostModelConfig& cost, MachineState& m,
                      const std::function<void(const TraceEvent&)>& hook) {
  cfg.validate();
  const MemoryLayout lay = build_layout(cfg);
  load_mesh(m, lay, cfg, mesh);

  RunResult res;
  Executor exec{m, cost, res.agg, hook, 0};
  const uint32_t vl_max = m.config().vl_max;
  for (uint64_t e0 = 0; e0 < cfg.nelem; e0 += cfg.vector_size) {
    const auto count = static_cast<uint32_t>(
        std::min<uint64_t>(cfg.vector_size, cfg.nelem - e0));
    const ChunkCtx c{cfg, mesh, lay, e0, count, vl_max};
    for (unsigned phase = 1; phase <= 8; ++phase) emit_chunk_phase(exec, phase, variant, c);
  }
  for (uint64_t e = 0; e < cfg.nelem; ++e)
    if (!(detail::element_geom(mesh, cfg.nelem, e).det > 0.0)) ++res.skipped;

  const RawCounters total = res.agg.total();
  res.instructions = total.i_t;
  res.cycles = total.c_t;
  return res;
}

AssemblyOutputs read_outputs(const MachineState& m, const MemoryLayout& lay,
                             const KernelConfig& cfg, uint64_t skipped) {
  AssemblyOutputs out;
  out.skipped = skipped;
  out.global_rhs.resize(3 * lay.nnode);
  for (unsigned d = 0; d < 3; ++d)
    for (uint64_t i = 0; i < lay.nnode; ++i)
      out.global_rhs[d * lay.nnode + i] = m.peek_f64(lay.global_rhs(d) + i * 8);
  if (cfg.semi_implicit) {
    out.global_mat.resize(cfg.nelem * 16);
    for (uint64_t e = 0; e < cfg.nelem; ++e)
      for (unsigned k = 0; k < 16; ++k)
        out.global_mat[e * 16 + k] = m.peek_f64(lay.global_mat(e) + k * 8);
  }
  return out;
}

}  // namespace veclens
