#include "kernel_math.hpp"
#include "veclens/kernels.hpp"

// Scalar ground truth for the eight-phase assembly. Statements below map
// one-to-one onto emitted instructions (one rounding each; a*b + c is two
// roundings, matching the unfused multiply-add), so emulated runs must agree
// bitwise with these results whatever the vector length.

namespace veclens {

using namespace detail;

AssemblyOutputs reference_assembly(const KernelConfig& cfg, const Mesh& mesh) {
  cfg.validate();

  AssemblyOutputs out;
  out.global_rhs.assign(3 * mesh.nnode, 0.0);
  if (cfg.semi_implicit) out.global_mat.assign(cfg.nelem * 16, 0.0);

  for (uint64_t e = 0; e < cfg.nelem; ++e) {
    // Phase 1: material lookup and elemental velocity gather.
    const double elmut = elmut_value(mesh, e);
    double elvel[3][4];
    for (unsigned n = 0; n < 4; ++n) {
      int64_t node = mesh.lnods[n * cfg.nelem + e];
      for (unsigned d = 0; d < 3; ++d)
        elvel[d][n] = mesh.velocity[d * mesh.nnode + static_cast<uint64_t>(node)];
    }

    // Phases 2-3: coordinate gather, Jacobian, determinant, inverse.
    const ElemGeom geom = element_geom(mesh, cfg.nelem, e);
    const double gpdet = geom.det;
    const double recip = 1.0 / gpdet;
    double xjaci[3][3];
    for (unsigned i = 0; i < 3; ++i)
      for (unsigned j = 0; j < 3; ++j) xjaci[i][j] = geom.adj[i][j] * recip;

    // Phase 4: Cartesian shape derivatives at each integration point. Node 0
    // sums all three reference derivatives (all equal); nodes 1-3 keep a
    // single nonzero term.
    double gpcar[4][4][3];  // [g][n][j]
    for (unsigned g = 0; g < 4; ++g)
      for (unsigned n = 0; n < 4; ++n)
        for (unsigned j = 0; j < 3; ++j) {
          if (n == 0) {
            const double dg = deriv_g(0, 0, g);
            double acc = xjaci[0][j] * dg;
            acc = xjaci[1][j] * dg + acc;
            acc = xjaci[2][j] * dg + acc;
            gpcar[g][n][j] = acc;
          } else {
            gpcar[g][n][j] = xjaci[n - 1][j] * deriv_g(n - 1, n, g);
          }
        }

    // Phase 5: integration volumes and the time-term right-hand side.
    double gpvol[4];
    for (unsigned g = 0; g < 4; ++g) gpvol[g] = gpdet * kGaussW;
    double elrhs[3][4];
    for (unsigned n = 0; n < 4; ++n)
      for (unsigned d = 0; d < 3; ++d) {
        double c = gpdet * kDtInv;
        elrhs[d][n] = c * elvel[d][n];
      }

    // Phase 6: velocity at the integration points, then the convective term.
    for (unsigned g = 0; g < 4; ++g) {
      double gpvel[3];
      for (unsigned d = 0; d < 3; ++d) {
        double acc = elvel[d][0] * shape(0, g);
        for (unsigned n = 1; n < 4; ++n) acc = elvel[d][n] * shape(n, g) + acc;
        gpvel[d] = acc;
      }
      for (unsigned n = 0; n < 4; ++n) {
        double conv = gpvel[0] * gpcar[g][n][0];
        for (unsigned d = 1; d < 3; ++d) conv = gpvel[d] * gpcar[g][n][d] + conv;
        double t0 = gpvol[g] * conv;
        double t1 = t0 * shape(n, g);
        for (unsigned i = 0; i < 3; ++i) elrhs[i][n] = elrhs[i][n] + t1;
      }
    }

    // Phase 7: viscous stiffness. The matrix entries are kept only in
    // semi-implicit mode; the right-hand-side update always runs.
    double elmat[4][4] = {};
    for (unsigned g = 0; g < 4; ++g)
      for (unsigned n = 0; n < 4; ++n)
        for (unsigned m = 0; m < 4; ++m) {
          double dot = gpcar[g][n][0] * gpcar[g][m][0];
          for (unsigned d = 1; d < 3; ++d) dot = gpcar[g][n][d] * gpcar[g][m][d] + dot;
          double c = elmut * gpvol[g];
          double t = c * dot;
          if (cfg.semi_implicit) elmat[n][m] = g == 0 ? t : elmat[n][m] + t;
          for (unsigned d = 0; d < 3; ++d) {
            double u = t * elvel[d][m];
            elrhs[d][n] = elrhs[d][n] - u;
          }
        }

    // Phase 8: guarded scatter into the global system.
    if (gpdet > 0.0) {
      for (unsigned n = 0; n < 4; ++n) {
        int64_t node = mesh.lnods[n * cfg.nelem + e];
        for (unsigned d = 0; d < 3; ++d) {
          uint64_t at = d * mesh.nnode + static_cast<uint64_t>(node);
          out.global_rhs[at] = out.global_rhs[at] + elrhs[d][n];
        }
      }
      if (cfg.semi_implicit)
        for (unsigned n = 0; n < 4; ++n)
          for (unsigned m = 0; m < 4; ++m) out.global_mat[e * 16 + n * 4 + m] = elmat[n][m];
    } else {
      ++out.skipped;
    }
  }

  return out;
}

}  // namespace veclens
