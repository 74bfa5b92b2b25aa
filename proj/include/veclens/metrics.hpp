#pragma once

// Per-phase counter aggregation and the five derived vectorization metrics:
//
//   M_v  = i_v / i_t    vector instruction mix
//   A_v  = c_v / c_t    vector cycle share
//   vCPI = c_v / i_v    cycles per vector instruction
//   AVL  = sum_vl / i_v average vector length
//   E_v  = AVL / vl_max vector occupancy
//
// Degenerate ratios are absent values, never NaN: a report must be able to
// tell "not vectorized" (M_v = 0) apart from "no data" (absent).

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "veclens/isa.hpp"
#include "veclens/vvm.hpp"

namespace veclens {

struct RawCounters {
  uint64_t i_t = 0;     // all retired instructions
  uint64_t i_v = 0;     // VectorArithmetic + VectorMemory + VectorControlLane
  uint64_t i_cfg = 0;   // VectorConfig (counts toward i_t, not i_v)
  uint64_t c_t = 0;
  uint64_t c_v = 0;
  uint64_t sum_vl = 0;  // over vector instructions
  uint64_t m_l1 = 0;
  uint64_t m_l2 = 0;
  uint64_t mem_ops = 0;  // memory-touching instructions, scalar and vector
  std::array<uint64_t, kInstrClassCount> class_counts{};

  void add(const TraceEvent& ev);
  void merge(const RawCounters& other);  // associative + commutative
  bool operator==(const RawCounters&) const = default;
};

struct MetricSet {
  std::optional<double> m_v;
  std::optional<double> a_v;
  std::optional<double> vcpi;
  std::optional<double> avl;
  std::optional<double> e_v;
};

// i_t = 0 leaves every metric absent; i_v = 0 pins m_v to 0 and leaves the
// per-vector-instruction ratios absent.
MetricSet compute_metrics(const RawCounters& rc, uint32_t vl_max);

inline constexpr unsigned kPhaseCount = 8;

// Streaming per-phase aggregation. Every event lands in exactly one phase
// bucket, so the phase totals partition the whole-run totals.
class Aggregator {
 public:
  void add(const TraceEvent& ev);
  void merge(const Aggregator& other);
  const RawCounters& phase(unsigned p) const { return phases_.at(p - 1); }  // p in 1..8
  const std::array<RawCounters, kPhaseCount>& phases() const { return phases_; }
  const RawCounters& total() const { return total_; }

 private:
  std::array<RawCounters, kPhaseCount> phases_{};
  RawCounters total_{};
};

// Percentage of total cycles spent per phase, order-preserving; sums to 100
// (zero-cycle input yields all zeros).
std::array<double, kPhaseCount> phase_weight_table(const std::array<RawCounters, kPhaseCount>& phases);

struct IncompleteSweep : std::runtime_error {
  std::vector<std::pair<uint32_t, unsigned>> missing;  // (vector_size, phase)
  explicit IncompleteSweep(std::vector<std::pair<uint32_t, unsigned>> missing_);
};

struct MixCell {
  uint32_t vector_size = 0;
  unsigned phase = 0;  // 1..8
  double m_v = 0.0;
};

// [vector_size x phase] matrix of M_v; rows follow `sizes`, columns phases
// 1..8. Throws IncompleteSweep listing every missing (size, phase) cell.
std::vector<std::array<double, kPhaseCount>> mix_heatmap(const std::vector<MixCell>& cells,
                                                         const std::vector<uint32_t>& sizes);

struct SingularDesign : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OlsResult {
  std::vector<double> coefficients;  // one per regressor column
  double intercept = 0.0;
  double r_squared = 0.0;  // centered definition, 1 - SS_res/SS_tot
};

// Least-squares fit of y on X plus an intercept, via Householder QR.
// X is row-major: X[i] holds the regressor values of observation i.
// Requires len(y) == rows(X) >= cols(X) + 2 and X of full column rank.
OlsResult ols_regression(const std::vector<double>& y, const std::vector<std::vector<double>>& X);

}  // namespace veclens
