#pragma once

// Benchmark sweep driver: runs a (variant x vector_size) grid, checks every
// run bitwise against the scalar oracle, and writes the results directory
//
//   <out>/<variant>/vs<N>/phase<k>.vtr   per-phase traces (aggregated by
//                                        default, full event streams opt-in)
//   <out>/summary.csv                    one row per variant x size x phase
//   <out>/mix_<variant>.csv              M_v heatmap, vector_size x phase
//
// plus a speedup-vs-SCALAR-at-size-16 table on the report stream.
//
// When nelem is not a multiple of vector_size the run is normalized to the
// largest multiple (the mesh and oracle shrink with it) so measured AVL stays
// exactly min(vector_size, vl_max); remainder stripmining itself is covered
// by tests at odd nelem.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "veclens/costmodel.hpp"
#include "veclens/kernels.hpp"
#include "veclens/metrics.hpp"

namespace veclens {

struct SweepSpec {
  std::vector<uint32_t> vector_sizes{kSweepSizes.begin(), kSweepSizes.end()};
  std::vector<Variant> variants{kAllVariants.begin(), kAllVariants.end()};
  KernelConfig kernel;    // per-run copies override vector_size (and nelem, see above)
  CostModelConfig cost;
  std::string out_dir;    // empty: run in memory only, write no files
  unsigned jobs = 1;      // worker threads across (variant, size) runs
  bool full_traces = false;

  void validate() const;  // throws std::invalid_argument
};

// One (variant, vector_size, phase) cell of the sweep.
struct SweepRow {
  Variant variant{};
  uint32_t vector_size = 0;
  unsigned phase = 0;  // 1..8
  RawCounters counters;
  MetricSet metrics;
};

// Whole-run totals of one (variant, vector_size) grid point.
struct SweepRun {
  Variant variant{};
  uint32_t vector_size = 0;
  uint64_t nelem = 0;  // effective element count after normalization
  uint64_t cycles = 0;
  uint64_t instructions = 0;
  uint64_t skipped = 0;
  bool equivalent = false;  // bitwise match against reference_assembly
};

struct SweepResult {
  std::vector<SweepRow> rows;        // grid-ordered: variant, then size, then phase
  std::vector<SweepRun> runs;      // grid-ordered: variant, then size
  std::vector<std::string> failures; // human-readable equivalence failures
  uint16_t vl_max = 0;
  bool ok() const { return failures.empty(); }
};

uint64_t effective_nelem(uint64_t nelem, uint32_t vector_size);

// Runs the grid (optionally in parallel) and, when out_dir is set, writes
// traces, summary.csv and the per-variant mix heatmaps. Throws on I/O errors;
// equivalence failures are reported in the result, not thrown.
SweepResult run_sweep(const SweepSpec& spec);

// summary.csv schema, frozen:
//   variant,vector_size,phase,i_t,i_v,i_cfg,c_t,c_v,sum_vl,m_l1,m_l2,mem_ops,
//   l1_mpki,mem_ratio,m_v,a_v,vcpi,avl,e_v
// Absent metrics are empty cells; floating-point cells use max_digits10.
extern const char* const kSummaryColumns;
void write_summary_csv(const SweepResult& result, std::ostream& out);

// Speedup of every grid point relative to (SCALAR, 16); that baseline must be
// part of the grid, otherwise only absolute cycles are printed.
void write_speedup_table(const SweepResult& result, std::ostream& out);

// vector_size x phase M_v matrix for one variant (header row phase1..phase8).
void write_mix_csv(const SweepResult& result, Variant variant, std::ostream& out);

// Parsed summary.csv, for compare/regress. Cells stay strings; numeric
// interpretation happens at use. Throws std::runtime_error on a malformed
// file and reports missing columns by name.
struct SummaryTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  size_t column(const std::string& name) const;  // throws naming the column
  bool has_column(const std::string& name) const;
};
SummaryTable read_summary_csv(std::istream& in);

}  // namespace veclens
