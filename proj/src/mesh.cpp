#include <stdexcept>
#include <string>

#include "kernel_math.hpp"
#include "veclens/kernels.hpp"

namespace veclens {

void KernelConfig::validate() const {
  if (vector_size < 1 || vector_size > 512)
    throw std::invalid_argument("vector_size must be in 1..512");
  if (nelem < 1) throw std::invalid_argument("nelem must be positive");
  if (ndime != 3 || pnode != 4 || ngauss != 4)
    throw std::invalid_argument(
        "only the tetrahedral configuration pnode=4, ndime=3, ngauss=4 is supported");
}

namespace {

// Six path tetrahedra per grid cell: 0 -> corner a -> corner a|b -> 7 along
// each axis permutation. Vertex order is fixed up so the unjittered element
// has positive orientation (the phase-8 guard expects det > 0).
struct CellTet {
  uint8_t v[4];
};

constexpr int det3i(const int a[3], const int b[3], const int c[3]) {
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
         a[2] * (b[0] * c[1] - b[1] * c[0]);
}

std::array<CellTet, 6> kuhn_tets() {
  constexpr uint8_t axes[6][3] = {{1, 2, 4}, {1, 4, 2}, {2, 1, 4},
                                  {2, 4, 1}, {4, 1, 2}, {4, 2, 1}};
  std::array<CellTet, 6> tets{};
  for (unsigned t = 0; t < 6; ++t) {
    uint8_t a = axes[t][0];
    tets[t] = {{0, a, static_cast<uint8_t>(a | axes[t][1]), 7}};
    int edge[3][3];
    for (unsigned k = 0; k < 3; ++k) {
      uint8_t corner = tets[t].v[k + 1];
      edge[k][0] = corner & 1;
      edge[k][1] = (corner >> 1) & 1;
      edge[k][2] = (corner >> 2) & 1;
    }
    if (det3i(edge[0], edge[1], edge[2]) < 0) std::swap(tets[t].v[1], tets[t].v[2]);
  }
  return tets;
}

}  // namespace

Mesh build_mesh(const KernelConfig& cfg) {
  cfg.validate();

  // Smallest grid whose tetrahedral decomposition covers nelem elements.
  uint64_t n = 1;
  while (6 * n * n * n < cfg.nelem) ++n;
  const uint64_t nodes_per_axis = n + 1;

  Mesh mesh;
  mesh.nnode = nodes_per_axis * nodes_per_axis * nodes_per_axis;
  mesh.coords.resize(3 * mesh.nnode);
  mesh.velocity.resize(3 * mesh.nnode);
  mesh.lnods.resize(4 * cfg.nelem);
  mesh.elem_key.resize(cfg.nelem);

  uint64_t state = cfg.seed;

  // Grid nodes jittered inside their own cell pocket: coordinates stay in
  // [0,1) and elements stay positively oriented by a comfortable margin.
  const double h = 1.0 / (static_cast<double>(n) + 0.2);
  for (uint64_t k = 0; k < nodes_per_axis; ++k)
    for (uint64_t j = 0; j < nodes_per_axis; ++j)
      for (uint64_t i = 0; i < nodes_per_axis; ++i) {
        uint64_t node = (k * nodes_per_axis + j) * nodes_per_axis + i;
        const double base[3] = {double(i), double(j), double(k)};
        for (unsigned d = 0; d < 3; ++d) {
          double u = detail::unit_double(detail::splitmix64(state));
          mesh.coords[d * mesh.nnode + node] = (base[d] + 0.1 + 0.1 * (2.0 * u - 1.0)) * h;
        }
      }

  for (uint64_t node = 0; node < mesh.nnode; ++node)
    for (unsigned d = 0; d < 3; ++d) {
      double u = detail::unit_double(detail::splitmix64(state));
      mesh.velocity[d * mesh.nnode + node] = 2.0 * u - 1.0;
    }

  const auto tets = kuhn_tets();
  uint64_t e = 0;
  for (uint64_t ck = 0; ck < n && e < cfg.nelem; ++ck)
    for (uint64_t cj = 0; cj < n && e < cfg.nelem; ++cj)
      for (uint64_t ci = 0; ci < n && e < cfg.nelem; ++ci)
        for (unsigned t = 0; t < 6 && e < cfg.nelem; ++t) {
          for (unsigned v = 0; v < 4; ++v) {
            uint8_t c = tets[t].v[v];
            uint64_t node = ((ck + ((c >> 2) & 1)) * nodes_per_axis + (cj + ((c >> 1) & 1))) *
                                nodes_per_axis +
                            (ci + (c & 1));
            mesh.lnods[v * cfg.nelem + e] = static_cast<int64_t>(node);
          }
          ++e;
        }

  for (unsigned i = 0; i < 16; ++i) mesh.material_table[i] = (i + 1) / 16.0;
  for (uint64_t el = 0; el < cfg.nelem; ++el)
    mesh.elem_key[el] = detail::unit_double(detail::splitmix64(state));

  return mesh;
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::SCALAR: return "scalar";
    case Variant::AUTOVEC: return "autovec";
    case Variant::VEC2: return "vec2";
    case Variant::IVEC2: return "ivec2";
    case Variant::VEC1: return "vec1";
    case Variant::FINAL: return "final";
  }
  throw std::invalid_argument("bad variant value");
}

Variant variant_from_name(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  throw std::invalid_argument("unknown variant '" + std::string(name) +
                              "' (expected scalar|autovec|vec2|ivec2|vec1|final)");
}

}  // namespace veclens
