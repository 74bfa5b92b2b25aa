#pragma once

// Shared numeric core of the mini-app: constants, the per-element geometry
// helper, and the phase-1 table-search arithmetic. Both the scalar oracle and
// the instruction emitters fold host-side values through these functions, so
// they must stay the single source of truth — any divergence breaks the
// bitwise-equivalence contract between oracle and emulated runs.

#include <cstdint>

#include "veclens/kernels.hpp"

namespace veclens::detail {

inline uint64_t splitmix64(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double unit_double(uint64_t bits) {  // [0, 1), 53-bit resolution
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Reference shape-function derivatives of a linear tetrahedron: row i is the
// d/dxi_i derivative over the four nodes.
inline constexpr double kDerivRef[3][4] = {
    {-1.0, 1.0, 0.0, 0.0},
    {-1.0, 0.0, 1.0, 0.0},
    {-1.0, 0.0, 0.0, 1.0},
};

// 4-point tetrahedral quadrature shape values (barycentric a/b pattern).
inline constexpr double kShapeDiag = 0.5854101966249685;
inline constexpr double kShapeOff = 0.13819660112501052;
inline double shape(unsigned n, unsigned g) { return n == g ? kShapeDiag : kShapeOff; }

inline constexpr double kGaussW = 1.0 / 24.0;
inline constexpr double kGaussMod[4] = {1.0, 1.0625, 0.9375, 1.03125};
inline constexpr double kDtInv = 2.5;

// Host-folded integration-point derivative modifier (exact products: the
// reference derivatives are -1/0/1).
inline double deriv_g(unsigned i, unsigned n, unsigned g) {
  return kDerivRef[i][n] * kGaussMod[g];
}

// adj(i,j) = m[u0][u1]*m[u2][u3] - m[v0][v1]*m[v2][v3]; the sign of each
// cofactor is absorbed into the operand order so no negation is emitted.
struct CofTerm {
  uint8_t u0, u1, u2, u3, v0, v1, v2, v3;
};
inline constexpr CofTerm kCof[3][3] = {
    {{1, 1, 2, 2, 1, 2, 2, 1}, {0, 2, 2, 1, 0, 1, 2, 2}, {0, 1, 1, 2, 0, 2, 1, 1}},
    {{1, 2, 2, 0, 1, 0, 2, 2}, {0, 0, 2, 2, 0, 2, 2, 0}, {0, 2, 1, 0, 0, 0, 1, 2}},
    {{1, 0, 2, 1, 1, 1, 2, 0}, {0, 1, 2, 0, 0, 0, 2, 1}, {0, 0, 1, 1, 0, 1, 1, 0}},
};

struct ElemGeom {
  double elcod[3][4];
  double xjacm[3][3];
  double adj[3][3];
  double det;
};

// Phase-2/3 arithmetic for one element, statement for statement the sequence
// the emitters issue: gather, 9 edge subtractions, 9 cofactors (two products
// and a difference each), 3-term determinant expansion.
inline ElemGeom element_geom(const Mesh& mesh, uint64_t nelem, uint64_t e) {
  ElemGeom g;
  for (unsigned n = 0; n < 4; ++n) {
    int64_t node = mesh.lnods[n * nelem + e];
    for (unsigned d = 0; d < 3; ++d)
      g.elcod[d][n] = mesh.coords[d * mesh.nnode + static_cast<uint64_t>(node)];
  }
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) g.xjacm[i][j] = g.elcod[i][j + 1] - g.elcod[i][0];
  const auto& m = g.xjacm;
  for (unsigned i = 0; i < 3; ++i)
    for (unsigned j = 0; j < 3; ++j) {
      const CofTerm& t = kCof[i][j];
      double u = m[t.u0][t.u1] * m[t.u2][t.u3];
      double v = m[t.v0][t.v1] * m[t.v2][t.v3];
      g.adj[i][j] = u - v;
    }
  double d0 = m[0][0] * g.adj[0][0];
  double d1 = m[0][1] * g.adj[1][0] + d0;
  g.det = m[0][2] * g.adj[2][0] + d1;
  return g;
}

// Phase-1 work A: first table entry not below the element key. The table is
// ascending and ends at 1.0 while keys stay below 1.0, so the walk always
// terminates in bounds. Returns the probe count before the hit.
inline unsigned search_steps(const Mesh& mesh, uint64_t e) {
  double key = mesh.elem_key[e];
  unsigned idx = 0;
  while (mesh.material_table[idx] < key) ++idx;
  return idx;
}

inline double elmut_value(const Mesh& mesh, uint64_t e) {
  double t = mesh.material_table[search_steps(mesh, e)] * 0.1;
  return t + 0.05;
}

}  // namespace veclens::detail
