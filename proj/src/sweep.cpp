#include "veclens/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "veclens/tracefmt.hpp"

namespace veclens {

namespace fs = std::filesystem;

void SweepSpec::validate() const {
  if (vector_sizes.empty()) throw std::invalid_argument("sweep: empty vector_size list");
  if (variants.empty()) throw std::invalid_argument("sweep: empty variant list");
  if (jobs == 0) throw std::invalid_argument("sweep: jobs must be >= 1");
  if (cost.lanes == 0) throw std::invalid_argument("sweep: lanes must be >= 1");
  if (cost.fsm_chunk == 0) throw std::invalid_argument("sweep: fsm_chunk must be >= 1");
  if (cost.vl_max == 0 || cost.vl_max > 65535)
    throw std::invalid_argument("sweep: vl_max must be in [1, 65535]");
  for (uint32_t vs : vector_sizes) {
    KernelConfig k = kernel;
    k.vector_size = vs;
    k.nelem = effective_nelem(kernel.nelem, vs);
    k.validate();
  }
}

uint64_t effective_nelem(uint64_t nelem, uint32_t vector_size) {
  const uint64_t eff = nelem / vector_size * vector_size;
  return eff == 0 ? nelem : eff;
}

namespace {

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

// First index at which two double vectors differ bitwise (sizes already equal).
uint64_t first_diff(const std::vector<double>& a, const std::vector<double>& b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) return i;
  return a.size();
}

struct MeshOracle {
  KernelConfig cfg;  // nelem already normalized; vector_size unset per run
  Mesh mesh;
  AssemblyOutputs expect;
};

struct RunTask {
  Variant variant{};
  uint32_t vector_size = 0;
  const MeshOracle* base = nullptr;
};

struct RunOutput {
  SweepRun run;
  std::array<RawCounters, kPhaseCount> phases{};
  std::string failure;  // empty on success
};

void atomic_rename(const fs::path& tmp, const fs::path& final_path) {
  std::error_code ec;
  fs::rename(tmp, final_path, ec);
  if (ec) throw std::runtime_error("sweep: cannot move " + tmp.string() + " to " +
                                   final_path.string() + ": " + ec.message());
}

// Event traces stream to disk while the run executes; aggregated traces are
// written afterwards from the per-phase counters. Both go through a temp file
// and a rename so readers never observe a half-written trace.
class PhaseTraceFiles {
 public:
  PhaseTraceFiles(const fs::path& dir, uint16_t vl_max, bool full)
      : dir_(dir), vl_max_(vl_max), full_(full) {
    fs::create_directories(dir_);
    if (!full_) return;
    for (unsigned p = 1; p <= kPhaseCount; ++p) {
      auto tmp = path(p).string() + ".tmp";
      streams_[p - 1] = std::make_unique<std::ofstream>(tmp, std::ios::binary | std::ios::trunc);
      if (!*streams_[p - 1]) throw std::runtime_error("sweep: cannot open " + tmp);
      writers_[p - 1] = std::make_unique<TraceWriter>(*streams_[p - 1], vl_max_, false);
    }
  }

  void on_event(const TraceEvent& ev) {
    if (full_) writers_[ev.phase - 1]->write(ev);
  }

  void finish(const std::array<RawCounters, kPhaseCount>& phases) {
    for (unsigned p = 1; p <= kPhaseCount; ++p) {
      if (full_) {
        writers_[p - 1]->close();
        streams_[p - 1].reset();
      } else {
        const auto tmp = path(p).string() + ".tmp";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("sweep: cannot open " + tmp);
        TraceWriter w(out, vl_max_, true);
        w.write(p, phases[p - 1]);
        w.close();
        out.close();
      }
      atomic_rename(path(p).string() + ".tmp", path(p));
    }
  }

 private:
  fs::path path(unsigned phase) const { return dir_ / ("phase" + std::to_string(phase) + ".vtr"); }

  fs::path dir_;
  uint16_t vl_max_;
  bool full_;
  std::array<std::unique_ptr<std::ofstream>, kPhaseCount> streams_{};
  std::array<std::unique_ptr<TraceWriter>, kPhaseCount> writers_{};
};

RunOutput execute_run(const RunTask& task, const SweepSpec& spec) {
  RunOutput out;
  out.run.variant = task.variant;
  out.run.vector_size = task.vector_size;
  out.run.nelem = task.base->cfg.nelem;

  KernelConfig cfg = task.base->cfg;
  cfg.vector_size = task.vector_size;

  MachineConfig mc;
  mc.vl_max = spec.cost.vl_max;
  MachineState m(mc);

  std::unique_ptr<PhaseTraceFiles> traces;
  if (!spec.out_dir.empty()) {
    const fs::path dir = fs::path(spec.out_dir) / std::string(variant_name(task.variant)) /
                         ("vs" + std::to_string(task.vector_size));
    traces = std::make_unique<PhaseTraceFiles>(dir, static_cast<uint16_t>(mc.vl_max),
                                               spec.full_traces);
  }

  std::function<void(const TraceEvent&)> hook;
  if (traces && spec.full_traces) hook = [&](const TraceEvent& ev) { traces->on_event(ev); };

  const RunResult rr = run_variant(task.variant, cfg, task.base->mesh, spec.cost, m, hook);
  out.run.cycles = rr.cycles;
  out.run.instructions = rr.instructions;
  out.run.skipped = rr.skipped;
  out.phases = rr.agg.phases();

  const AssemblyOutputs got = read_outputs(m, build_layout(cfg), cfg, rr.skipped);
  const AssemblyOutputs& want = task.base->expect;
  out.run.equivalent = bitwise_equal(got.global_rhs, want.global_rhs) &&
                       bitwise_equal(got.global_mat, want.global_mat) &&
                       got.skipped == want.skipped;
  if (!out.run.equivalent) {
    std::ostringstream msg;
    msg << "equivalence failure: variant=" << variant_name(task.variant)
        << " vector_size=" << task.vector_size << " nelem=" << cfg.nelem;
    if (!bitwise_equal(got.global_rhs, want.global_rhs))
      msg << " global_rhs differs at index " << first_diff(got.global_rhs, want.global_rhs);
    else if (!bitwise_equal(got.global_mat, want.global_mat))
      msg << " global_mat differs at index " << first_diff(got.global_mat, want.global_mat);
    else
      msg << " skipped " << got.skipped << " != " << want.skipped;
    out.failure = msg.str();
  }

  if (traces) traces->finish(out.phases);
  return out;
}

void write_atomic_file(const fs::path& final_path,
                       const std::function<void(std::ostream&)>& body) {
  const auto tmp = final_path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("sweep: cannot open " + tmp);
    body(out);
    if (!out) throw std::runtime_error("sweep: write failed for " + tmp);
  }
  atomic_rename(tmp, final_path);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();

  // One mesh + oracle per distinct effective element count.
  std::map<uint64_t, MeshOracle> bases;
  for (uint32_t vs : spec.vector_sizes) {
    const uint64_t eff = effective_nelem(spec.kernel.nelem, vs);
    if (bases.count(eff)) continue;
    MeshOracle& b = bases[eff];
    b.cfg = spec.kernel;
    b.cfg.nelem = eff;
    b.mesh = build_mesh(b.cfg);
    b.expect = reference_assembly(b.cfg, b.mesh);
  }

  std::vector<RunTask> tasks;
  for (Variant v : spec.variants)
    for (uint32_t vs : spec.vector_sizes)
      tasks.push_back({v, vs, &bases.at(effective_nelem(spec.kernel.nelem, vs))});

  std::vector<RunOutput> outputs(tasks.size());
  const unsigned workers = std::min<unsigned>(spec.jobs, static_cast<unsigned>(tasks.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < tasks.size(); ++i) outputs[i] = execute_run(tasks[i], spec);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::mutex error_mutex;
    std::string first_error;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
          try {
            outputs[i] = execute_run(tasks[i], spec);
          } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (first_error.empty()) first_error = ex.what();
          }
        }
      });
    for (auto& t : pool) t.join();
    if (!first_error.empty()) throw std::runtime_error(first_error);
  }

  SweepResult result;
  result.vl_max = static_cast<uint16_t>(spec.cost.vl_max);
  for (size_t i = 0; i < tasks.size(); ++i) {
    const RunOutput& o = outputs[i];
    result.runs.push_back(o.run);
    if (!o.failure.empty()) result.failures.push_back(o.failure);
    for (unsigned p = 1; p <= kPhaseCount; ++p) {
      SweepRow row;
      row.variant = o.run.variant;
      row.vector_size = o.run.vector_size;
      row.phase = p;
      row.counters = o.phases[p - 1];
      row.metrics = compute_metrics(row.counters, spec.cost.vl_max);
      result.rows.push_back(row);
    }
  }

  if (!spec.out_dir.empty()) {
    write_atomic_file(fs::path(spec.out_dir) / "summary.csv",
                      [&](std::ostream& out) { write_summary_csv(result, out); });
    for (Variant v : spec.variants) {
      const auto name = "mix_" + std::string(variant_name(v)) + ".csv";
      write_atomic_file(fs::path(spec.out_dir) / name,
                        [&](std::ostream& out) { write_mix_csv(result, v, out); });
    }
  }
  return result;
}

const char* const kSummaryColumns =
    "variant,vector_size,phase,i_t,i_v,i_cfg,c_t,c_v,sum_vl,m_l1,m_l2,mem_ops,"
    "l1_mpki,mem_ratio,m_v,a_v,vcpi,avl,e_v";

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << *v;
}

}  // namespace

void write_summary_csv(const SweepResult& result, std::ostream& out) {
  out << kSummaryColumns << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const SweepRow& r : result.rows) {
    const RawCounters& c = r.counters;
    out << variant_name(r.variant) << ',' << r.vector_size << ',' << r.phase << ',' << c.i_t
        << ',' << c.i_v << ',' << c.i_cfg << ',' << c.c_t << ',' << c.c_v << ',' << c.sum_vl
        << ',' << c.m_l1 << ',' << c.m_l2 << ',' << c.mem_ops;
    put_opt(out, c.i_t ? std::optional<double>(1000.0 * double(c.m_l1) / double(c.i_t))
                       : std::nullopt);
    put_opt(out, c.i_t ? std::optional<double>(double(c.mem_ops) / double(c.i_t)) : std::nullopt);
    put_opt(out, r.metrics.m_v);
    put_opt(out, r.metrics.a_v);
    put_opt(out, r.metrics.vcpi);
    put_opt(out, r.metrics.avl);
    put_opt(out, r.metrics.e_v);
    out << '\n';
  }
}

void write_speedup_table(const SweepResult& result, std::ostream& out) {
  const SweepRun* base = nullptr;
  for (const SweepRun& r : result.runs)
    if (r.variant == Variant::SCALAR && r.vector_size == 16) base = &r;

  // Axes in first-seen run order, so the table follows the sweep grid.
  std::vector<uint32_t> sizes;
  std::vector<Variant> variants;
  for (const SweepRun& r : result.runs) {
    if (std::find(sizes.begin(), sizes.end(), r.vector_size) == sizes.end())
      sizes.push_back(r.vector_size);
    if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
      variants.push_back(r.variant);
  }

  auto cycles_of = [&](Variant v, uint32_t vs) -> const SweepRun* {
    for (const SweepRun& r : result.runs)
      if (r.variant == v && r.vector_size == vs) return &r;
    return nullptr;
  };

  if (base)
    out << "speedup vs scalar at vector_size=16 (baseline " << base->cycles << " cycles)\n";
  else
    out << "total simulated cycles (no scalar/16 baseline in grid)\n";

  out << std::left << std::setw(12) << "vector_size";
  for (Variant v : variants) out << std::right << std::setw(10) << variant_name(v);
  out << '\n';
  for (uint32_t vs : sizes) {
    out << std::left << std::setw(12) << vs;
    for (Variant v : variants) {
      const SweepRun* r = cycles_of(v, vs);
      out << std::right << std::setw(10);
      if (!r)
        out << "-";
      else if (base) {
        std::ostringstream cell;
        cell << std::fixed << std::setprecision(3)
             << double(base->cycles) / double(r->cycles);
        out << cell.str();
      } else {
        out << r->cycles;
      }
    }
    out << '\n';
  }
}

void write_mix_csv(const SweepResult& result, Variant variant, std::ostream& out) {
  std::vector<uint32_t> sizes;
  std::vector<MixCell> cells;
  for (const SweepRow& r : result.rows) {
    if (r.variant != variant) continue;
    if (std::find(sizes.begin(), sizes.end(), r.vector_size) == sizes.end())
      sizes.push_back(r.vector_size);
    cells.push_back({r.vector_size, r.phase, r.metrics.m_v.value_or(0.0)});
  }
  const auto matrix = mix_heatmap(cells, sizes);

  out << "vector_size";
  for (unsigned p = 1; p <= kPhaseCount; ++p) out << ",phase" << p;
  out << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (size_t i = 0; i < sizes.size(); ++i) {
    out << sizes[i];
    for (unsigned p = 0; p < kPhaseCount; ++p) out << ',' << matrix[i][p];
    out << '\n';
  }
}

size_t SummaryTable::column(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::runtime_error("summary.csv: missing column '" + name + "'");
}

bool SummaryTable::has_column(const std::string& name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

SummaryTable read_summary_csv(std::istream& in) {
  SummaryTable table;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!s.empty() && s.back() == ',') cells.push_back("");
    return cells;
  };
  if (!std::getline(in, line)) throw std::runtime_error("summary.csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.columns = split(line);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != table.columns.size())
      throw std::runtime_error("summary.csv: line " + std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(table.columns.size()));
    table.rows.push_back(std::move(cells));
  }
  return table;
}

}  // namespace veclens
