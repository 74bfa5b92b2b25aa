#include "veclens/cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "veclens/costmodel.hpp"
#include "veclens/kernels.hpp"
#include "veclens/metrics.hpp"
#include "veclens/sweep.hpp"
#include "veclens/tracefmt.hpp"

namespace veclens {
namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Formatting helpers

std::string fixed_str(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string full_str(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string metric_str(const std::optional<double>& v, int prec) {
  return v ? fixed_str(*v, prec) : std::string("-");
}

std::string metric_cell(const std::optional<double>& v) {
  return v ? full_str(*v) : std::string();
}

// ---------------------------------------------------------------------------
// Summary-table access

SummaryTable load_summary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_summary_csv(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

// Numeric view of one cell; line numbers are 1-based file lines (header = 1).
double numeric_cell(const SummaryTable& t, size_t row, size_t col, const std::string& path) {
  const std::string& s = t.rows[row][col];
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::runtime_error(path + " line " + std::to_string(row + 2) + ": column '" +
                             t.columns[col] + "' is not numeric ('" + s + "')");
  }
}

std::optional<double> optional_cell(const SummaryTable& t, size_t row, size_t col,
                                    const std::string& path) {
  if (t.rows[row][col].empty()) return std::nullopt;
  return numeric_cell(t, row, col, path);
}

// Requires the column up front so the error names what the caller asked for.
size_t require_column(const SummaryTable& t, const std::string& name, const std::string& path) {
  if (!t.has_column(name)) {
    std::string cols;
    for (const auto& c : t.columns) {
      if (!cols.empty()) cols += ", ";
      cols += c;
    }
    throw std::invalid_argument(path + ": missing column '" + name + "' (available: " + cols + ")");
  }
  return t.column(name);
}

// ---------------------------------------------------------------------------
// Flat config file: `key = value` lines, UTF-8, `#` starts a comment, keys
// are the sweep command's long flag names. Values given as flags win over
// the file.

std::string trim(const std::string& s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::map<std::string, std::string> parse_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + " line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument(path + " line " + std::to_string(lineno) + ": empty key");
    kv[key] = value;  // last assignment wins, like repeated flags
  }
  return kv;
}

uint64_t config_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long r = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw std::invalid_argument("config key '" + key + "': invalid integer '" + v + "'");
  }
}

uint32_t config_u32(const std::string& key, const std::string& v) {
  const uint64_t r = config_u64(key, v);
  if (r > std::numeric_limits<uint32_t>::max())
    throw std::invalid_argument("config key '" + key + "': value out of range '" + v + "'");
  return static_cast<uint32_t>(r);
}

bool config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config key '" + key + "': invalid boolean '" + v + "'");
}

// One configurable sweep option: the CLI option (to detect explicit flags)
// plus the setter applying a config-file value.
struct ConfigBinding {
  CLI::Option* opt = nullptr;
  std::function<void(const std::string&)> set;
};

void apply_config_file(const std::string& path,
                       const std::map<std::string, ConfigBinding>& bindings) {
  for (const auto& [key, value] : parse_flat_config(path)) {
    auto it = bindings.find(key);
    if (it == bindings.end())
      throw std::invalid_argument(path + ": unknown config key '" + key + "'");
    if (it->second.opt->count() > 0) continue;  // flag overrides file
    it->second.set(value);
  }
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOptions {
  std::string out_dir;
  std::vector<uint32_t> sizes{kSweepSizes.begin(), kSweepSizes.end()};
  std::vector<std::string> variant_names;
  KernelConfig kernel;
  CostModelConfig cost;
  unsigned jobs = 1;
  bool full_traces = false;
  std::string config_path;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  SweepSpec spec;
  spec.vector_sizes = o.sizes;
  if (!o.variant_names.empty()) {
    spec.variants.clear();
    for (const auto& name : o.variant_names) spec.variants.push_back(variant_from_name(name));
  }
  spec.kernel = o.kernel;
  spec.cost = o.cost;
  spec.out_dir = o.out_dir;
  spec.jobs = o.jobs;
  spec.full_traces = o.full_traces;
  spec.validate();

  SweepResult result = run_sweep(spec);

  out << "sweep: " << result.runs.size() << " runs (" << spec.variants.size() << " variants x "
      << spec.vector_sizes.size() << " sizes), nelem=" << spec.kernel.nelem
      << ", vl_max=" << spec.cost.vl_max << "\n";
  if (!spec.out_dir.empty()) out << "results written to " << spec.out_dir << "\n";
  out << "\n";
  write_speedup_table(result, out);

  if (!result.ok()) {
    for (const auto& f : result.failures) err << "error: " << f << "\n";
    return 1;
  }
  out << "\nall equivalence checks passed\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string trace_path;
  std::vector<unsigned> phases;  // empty = all with data
  std::string format = "table";
};

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out, std::ostream&) {
  std::ifstream in(o.trace_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + o.trace_path);
  TraceReader reader(in);

  std::array<RawCounters, kPhaseCount> phases{};
  if (reader.header().aggregated()) {
    while (auto rec = reader.next_phase()) phases[rec->first - 1].merge(rec->second);
  } else {
    Aggregator agg;
    while (auto ev = reader.next()) agg.add(*ev);
    phases = agg.phases();
  }
  // Old traces may carry vl_max = 0 (streaming writer on a pipe); fall back
  // to the architectural default rather than dividing by zero.
  uint32_t vl_max = reader.header().vl_max != 0 ? reader.header().vl_max : 256;

  std::array<bool, kPhaseCount> selected{};
  for (unsigned p = 1; p <= kPhaseCount; ++p) {
    bool in_filter = o.phases.empty() ||
                     std::find(o.phases.begin(), o.phases.end(), p) != o.phases.end();
    selected[p - 1] = in_filter && phases[p - 1].i_t > 0;
  }
  const std::array<double, kPhaseCount> weights = phase_weight_table(phases);

  if (o.format == "csv") {
    out << "phase,weight,i_t,i_v,i_cfg,c_t,c_v,sum_vl,m_l1,m_l2,mem_ops,m_v,a_v,vcpi,avl,e_v\n";
    for (unsigned p = 1; p <= kPhaseCount; ++p) {
      if (!selected[p - 1]) continue;
      const RawCounters& rc = phases[p - 1];
      const MetricSet ms = compute_metrics(rc, vl_max);
      out << p << ',' << full_str(weights[p - 1]) << ',' << rc.i_t << ',' << rc.i_v << ','
          << rc.i_cfg << ',' << rc.c_t << ',' << rc.c_v << ',' << rc.sum_vl << ',' << rc.m_l1
          << ',' << rc.m_l2 << ',' << rc.mem_ops << ',' << metric_cell(ms.m_v) << ','
          << metric_cell(ms.a_v) << ',' << metric_cell(ms.vcpi) << ',' << metric_cell(ms.avl)
          << ',' << metric_cell(ms.e_v) << "\n";
    }
    return 0;
  }

  out << std::left << std::setw(6) << "phase" << std::right << std::setw(8) << "weight%"
      << std::setw(12) << "i_t" << std::setw(12) << "i_v" << std::setw(8) << "i_cfg"
      << std::setw(14) << "c_t" << std::setw(14) << "c_v" << std::setw(9) << "M_v" << std::setw(9)
      << "A_v" << std::setw(9) << "vCPI" << std::setw(9) << "AVL" << std::setw(9) << "E_v"
      << "\n";
  auto row = [&](const std::string& label, const RawCounters& rc, double weight) {
    const MetricSet ms = compute_metrics(rc, vl_max);
    out << std::left << std::setw(6) << label << std::right << std::setw(8)
        << fixed_str(weight, 2) << std::setw(12) << rc.i_t << std::setw(12) << rc.i_v
        << std::setw(8) << rc.i_cfg << std::setw(14) << rc.c_t << std::setw(14) << rc.c_v
        << std::setw(9) << metric_str(ms.m_v, 4) << std::setw(9) << metric_str(ms.a_v, 4)
        << std::setw(9) << metric_str(ms.vcpi, 2) << std::setw(9) << metric_str(ms.avl, 2)
        << std::setw(9) << metric_str(ms.e_v, 4) << "\n";
  };
  RawCounters total;
  double total_weight = 0.0;
  bool any = false;
  for (unsigned p = 1; p <= kPhaseCount; ++p) {
    if (!selected[p - 1]) continue;
    row(std::to_string(p), phases[p - 1], weights[p - 1]);
    total.merge(phases[p - 1]);
    total_weight += weights[p - 1];
    any = true;
  }
  if (any) row("all", total, total_weight);
  return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::string dir_a;
  std::string dir_b;
};

int cmd_compare(const CompareOptions& o, std::ostream& out, std::ostream&) {
  const std::string path_a = (fs::path(o.dir_a) / "summary.csv").string();
  const std::string path_b = (fs::path(o.dir_b) / "summary.csv").string();
  const SummaryTable a = load_summary_file(path_a);
  const SummaryTable b = load_summary_file(path_b);
  if (a.columns != b.columns)
    throw std::runtime_error("summary schema mismatch between " + path_a + " and " + path_b);

  const size_t col_variant = require_column(a, "variant", path_a);
  const size_t col_size = require_column(a, "vector_size", path_a);
  const size_t col_phase = require_column(a, "phase", path_a);
  const size_t col_ct = require_column(a, "c_t", path_a);
  const size_t col_mv = require_column(a, "m_v", path_a);
  const size_t col_avl = require_column(a, "avl", path_a);

  auto variant_set = [&](const SummaryTable& t) {
    std::set<std::string> s;
    for (const auto& r : t.rows) s.insert(r[col_variant]);
    return s;
  };
  const std::set<std::string> va = variant_set(a);
  const std::set<std::string> vb = variant_set(b);

  // Same variants on both sides: join on (variant, size, phase). One variant
  // per side (e.g. VEC2 vs AUTOVEC): join on (size, phase) across variants.
  bool join_on_variant = (va == vb);
  if (!join_on_variant && (va.size() != 1 || vb.size() != 1))
    throw std::runtime_error("variant sets differ between runs (" + std::to_string(va.size()) +
                             " vs " + std::to_string(vb.size()) +
                             " variants); compare matching sweeps or one variant per side");

  using Key = std::tuple<std::string, std::string, std::string>;
  std::map<Key, size_t> b_index;
  for (size_t i = 0; i < b.rows.size(); ++i) {
    const auto& r = b.rows[i];
    b_index[{join_on_variant ? r[col_variant] : std::string(), r[col_size], r[col_phase]}] = i;
  }

  out << "A: " << path_a << "\nB: " << path_b << "\n";
  if (!join_on_variant)
    out << "comparing variant '" << *va.begin() << "' (A) against '" << *vb.begin() << "' (B)\n";
  out << "\n";
  out << std::left << std::setw(9) << "variant" << std::right << std::setw(6) << "size"
      << std::setw(7) << "phase" << std::setw(14) << "c_t_a" << std::setw(14) << "c_t_b"
      << std::setw(10) << "ratio" << std::setw(11) << "d_m_v" << std::setw(11) << "d_avl"
      << "  flag\n";

  size_t compared = 0;
  size_t regressions = 0;
  for (size_t i = 0; i < a.rows.size(); ++i) {
    const auto& ra = a.rows[i];
    const Key key{join_on_variant ? ra[col_variant] : std::string(), ra[col_size], ra[col_phase]};
    auto it = b_index.find(key);
    if (it == b_index.end())
      throw std::runtime_error(path_b + ": no row matching variant=" + ra[col_variant] +
                               " vector_size=" + ra[col_size] + " phase=" + ra[col_phase]);
    const size_t j = it->second;

    const double ct_a = numeric_cell(a, i, col_ct, path_a);
    const double ct_b = numeric_cell(b, j, col_ct, path_b);
    std::optional<double> ratio;
    if (ct_a > 0.0)
      ratio = ct_b / ct_a;
    else if (ct_b == 0.0)
      ratio = 1.0;
    const bool slower = ratio ? *ratio > 1.0 : ct_b > 0.0;

    auto delta = [&](size_t col) -> std::optional<double> {
      const auto ma = optional_cell(a, i, col, path_a);
      const auto mb = optional_cell(b, j, col, path_b);
      if (!ma || !mb) return std::nullopt;
      return *mb - *ma;
    };

    out << std::left << std::setw(9) << ra[col_variant] << std::right << std::setw(6)
        << ra[col_size] << std::setw(7) << ra[col_phase] << std::setw(14)
        << static_cast<uint64_t>(ct_a) << std::setw(14) << static_cast<uint64_t>(ct_b)
        << std::setw(10) << metric_str(ratio, 4) << std::setw(11) << metric_str(delta(col_mv), 4)
        << std::setw(11) << metric_str(delta(col_avl), 2) << (slower ? "  *" : "") << "\n";
    ++compared;
    if (slower) ++regressions;
  }
  out << "\n" << compared << " rows compared, " << regressions
      << " regressions (cycle ratio > 1, flagged *)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// regress

struct RegressOptions {
  std::string summary_path;
  std::string dependent;
  std::vector<std::string> independents;
  std::string variant_filter;
  std::vector<unsigned> phase_filter;
};

int cmd_regress(const RegressOptions& o, std::ostream& out, std::ostream&) {
  const SummaryTable t = load_summary_file(o.summary_path);
  const size_t col_y = require_column(t, o.dependent, o.summary_path);
  std::vector<size_t> col_x;
  for (const auto& name : o.independents)
    col_x.push_back(require_column(t, name, o.summary_path));

  std::optional<size_t> col_variant;
  if (!o.variant_filter.empty()) col_variant = require_column(t, "variant", o.summary_path);
  std::optional<size_t> col_phase;
  if (!o.phase_filter.empty()) col_phase = require_column(t, "phase", o.summary_path);

  std::vector<double> y;
  std::vector<std::vector<double>> X;
  size_t dropped = 0;
  for (size_t i = 0; i < t.rows.size(); ++i) {
    if (col_variant && t.rows[i][*col_variant] != o.variant_filter) continue;
    if (col_phase) {
      const unsigned p = static_cast<unsigned>(numeric_cell(t, i, *col_phase, o.summary_path));
      if (std::find(o.phase_filter.begin(), o.phase_filter.end(), p) == o.phase_filter.end())
        continue;
    }
    // Listwise deletion: metric cells are legitimately empty (e.g. vCPI of a
    // scalar-only phase), so such rows drop out instead of failing the fit.
    bool complete = !t.rows[i][col_y].empty();
    for (size_t c : col_x) complete = complete && !t.rows[i][c].empty();
    if (!complete) {
      ++dropped;
      continue;
    }
    y.push_back(numeric_cell(t, i, col_y, o.summary_path));
    std::vector<double> xrow;
    for (size_t c : col_x) xrow.push_back(numeric_cell(t, i, c, o.summary_path));
    X.push_back(std::move(xrow));
  }

  const OlsResult fit = ols_regression(y, X);

  out << "regression: " << o.dependent << " ~ ";
  for (size_t k = 0; k < o.independents.size(); ++k)
    out << (k ? " + " : "") << o.independents[k];
  out << "\n";
  out << "rows: " << y.size() << " used, " << dropped << " dropped (missing cells)\n";
  out << std::setprecision(12);
  for (size_t k = 0; k < o.independents.size(); ++k)
    out << "coefficient  " << std::left << std::setw(16) << o.independents[k] << std::right << " "
        << fit.coefficients[k] << "\n";
  out << "intercept    " << std::setw(17) << ' ' << fit.intercept << "\n";
  out << "r_squared    " << std::setw(17) << ' ' << fit.r_squared << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// export

struct ExportOptions {
  std::string trace_path;
  std::string out_path;  // empty = stdout
};

int cmd_export(const ExportOptions& o, std::ostream& out, std::ostream&) {
  std::ifstream in(o.trace_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + o.trace_path);

  if (o.out_path.empty()) {
    export_csv(in, out);
    return 0;
  }
  const fs::path target(o.out_path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream csv(tmp);
    if (!csv) throw std::runtime_error("cannot open " + tmp.string());
    const uint64_t rows = export_csv(in, csv);
    csv.flush();
    if (!csv) throw std::runtime_error("write failed: " + tmp.string());
    out << o.out_path << ": " << rows << " rows\n";
  }
  fs::rename(tmp, target);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"long-vector instruction emulation, cycle costing and vectorization metrics"};
  app.name("veclens");
  app.require_subcommand(1);

  SweepOptions sweep_opts;
  CLI::App* sweep = app.add_subcommand("sweep", "run the variant x vector-size grid");
  std::map<std::string, ConfigBinding> sweep_config;
  auto bind = [&](CLI::Option* opt, const char* key, std::function<void(const std::string&)> set) {
    sweep_config[key] = ConfigBinding{opt, std::move(set)};
    return opt;
  };
  bind(sweep->add_option("--out", sweep_opts.out_dir, "output directory (created if missing)"),
       "out", [&](const std::string& v) { sweep_opts.out_dir = v; });
  bind(sweep->add_option("--sizes", sweep_opts.sizes, "vector sizes to sweep")
           ->delimiter(',')
           ->capture_default_str(),
       "sizes", [&](const std::string& v) {
         sweep_opts.sizes.clear();
         for (const auto& p : split_list(v)) sweep_opts.sizes.push_back(config_u32("sizes", p));
       });
  bind(sweep->add_option("--variants", sweep_opts.variant_names,
                         "variants to run (default: all six)")
           ->delimiter(','),
       "variants", [&](const std::string& v) { sweep_opts.variant_names = split_list(v); });
  bind(sweep->add_option("--nelem", sweep_opts.kernel.nelem, "mesh element count")
           ->capture_default_str(),
       "nelem", [&](const std::string& v) { sweep_opts.kernel.nelem = config_u64("nelem", v); });
  bind(sweep->add_option("--seed", sweep_opts.kernel.seed, "mesh generator seed")
           ->capture_default_str(),
       "seed", [&](const std::string& v) { sweep_opts.kernel.seed = config_u64("seed", v); });
  bind(sweep->add_flag("--semi-implicit,!--no-semi-implicit", sweep_opts.kernel.semi_implicit,
                       "assemble the elemental matrices in phase 7"),
       "semi-implicit", [&](const std::string& v) {
         sweep_opts.kernel.semi_implicit = config_bool("semi-implicit", v);
       });
  bind(sweep->add_option("--jobs", sweep_opts.jobs, "worker threads")
           ->check(CLI::Range(1u, 256u))
           ->capture_default_str(),
       "jobs", [&](const std::string& v) { sweep_opts.jobs = config_u32("jobs", v); });
  bind(sweep->add_flag("--full-traces", sweep_opts.full_traces,
                       "write per-instruction event traces instead of per-phase aggregates"),
       "full-traces", [&](const std::string& v) {
         sweep_opts.full_traces = config_bool("full-traces", v);
       });
  bind(sweep->add_option("--lanes", sweep_opts.cost.lanes, "vector lanes")->capture_default_str(),
       "lanes", [&](const std::string& v) { sweep_opts.cost.lanes = config_u32("lanes", v); });
  bind(sweep->add_option("--fsm-chunk", sweep_opts.cost.fsm_chunk, "issue-FSM chunk (lane groups)")
           ->capture_default_str(),
       "fsm-chunk",
       [&](const std::string& v) { sweep_opts.cost.fsm_chunk = config_u32("fsm-chunk", v); });
  bind(sweep->add_option("--vl-max", sweep_opts.cost.vl_max, "architectural max vector length")
           ->check(CLI::Range(1u, 65535u))
           ->capture_default_str(),
       "vl-max", [&](const std::string& v) { sweep_opts.cost.vl_max = config_u32("vl-max", v); });
  bind(sweep->add_option("--vmem-base", sweep_opts.cost.vmem_base, "vector memory startup cycles")
           ->capture_default_str(),
       "vmem-base",
       [&](const std::string& v) { sweep_opts.cost.vmem_base = config_u32("vmem-base", v); });
  bind(sweep->add_option("--vmem-per-elem", sweep_opts.cost.vmem_per_elem,
                         "strided/indexed per-element cycles")
           ->capture_default_str(),
       "vmem-per-elem", [&](const std::string& v) {
         sweep_opts.cost.vmem_per_elem = config_u32("vmem-per-elem", v);
       });
  bind(sweep->add_option("--l1-penalty", sweep_opts.cost.l1_miss_penalty, "cycles per L1 miss")
           ->capture_default_str(),
       "l1-penalty", [&](const std::string& v) {
         sweep_opts.cost.l1_miss_penalty = config_u32("l1-penalty", v);
       });
  bind(sweep->add_option("--l2-penalty", sweep_opts.cost.l2_miss_penalty, "cycles per L2 miss")
           ->capture_default_str(),
       "l2-penalty", [&](const std::string& v) {
         sweep_opts.cost.l2_miss_penalty = config_u32("l2-penalty", v);
       });
  sweep->add_option("--config", sweep_opts.config_path,
                    "flat key = value config file; flags override")
      ->envname("VECLENS_CONFIG");

  AnalyzeOptions analyze_opts;
  CLI::App* analyze = app.add_subcommand("analyze", "per-phase metrics from one trace file");
  analyze->add_option("trace", analyze_opts.trace_path, "trace file (.vtr)")->required();
  analyze->add_option("--phases", analyze_opts.phases, "restrict to these phases")
      ->delimiter(',')
      ->check(CLI::Range(1, 8));
  analyze->add_option("--format", analyze_opts.format, "output format")
      ->check(CLI::IsMember({"table", "csv"}))
      ->capture_default_str();

  CompareOptions compare_opts;
  CLI::App* compare = app.add_subcommand("compare", "per-phase cycle ratios between two sweeps");
  compare->add_option("run_a", compare_opts.dir_a, "baseline sweep directory")->required();
  compare->add_option("run_b", compare_opts.dir_b, "candidate sweep directory")->required();

  RegressOptions regress_opts;
  CLI::App* regress = app.add_subcommand("regress", "OLS fit over summary.csv columns");
  regress->add_option("summary", regress_opts.summary_path, "summary.csv path")->required();
  regress->add_option("--dependent", regress_opts.dependent, "response column")->required();
  regress->add_option("--independent", regress_opts.independents, "regressor columns")
      ->delimiter(',')
      ->required();
  regress->add_option("--variant", regress_opts.variant_filter, "restrict to one variant");
  regress->add_option("--phases", regress_opts.phase_filter, "restrict to these phases")
      ->delimiter(',')
      ->check(CLI::Range(1, 8));

  ExportOptions export_opts;
  CLI::App* exp = app.add_subcommand("export", "trace file to CSV");
  exp->add_option("trace", export_opts.trace_path, "trace file (.vtr)")->required();
  exp->add_option("--out", export_opts.out_path, "destination file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (*sweep) {
      if (!sweep_opts.config_path.empty()) apply_config_file(sweep_opts.config_path, sweep_config);
      if (sweep_opts.out_dir.empty())
        throw std::invalid_argument("sweep: --out is required (flag or config key 'out')");
      return cmd_sweep(sweep_opts, out, err);
    }
    if (*analyze) return cmd_analyze(analyze_opts, out, err);
    if (*compare) return cmd_compare(compare_opts, out, err);
    if (*regress) return cmd_regress(regress_opts, out, err);
    if (*exp) return cmd_export(export_opts, out, err);
    return 2;  // unreachable: require_subcommand(1)
  } catch (const CLI::ParseError& e) {
    // --help and friends land here with exit code 0.
    return app.exit(e, out, err) == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace veclens
