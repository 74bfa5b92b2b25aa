#include "veclens/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace veclens {

namespace {

bool is_vector_class(InstrClass cls) {
  return cls == InstrClass::VectorArithmetic || cls == InstrClass::VectorMemory ||
         cls == InstrClass::VectorControlLane;
}

}  // namespace

void RawCounters::add(const TraceEvent& ev) {
  i_t += 1;
  c_t += ev.cycles;
  class_counts[static_cast<size_t>(ev.cls)] += 1;
  if (ev.cls == InstrClass::VectorConfig) i_cfg += 1;
  if (is_vector_class(ev.cls)) {
    i_v += 1;
    c_v += ev.cycles;
    sum_vl += ev.vl;
  }
  if (is_memory_op(ev.opcode)) mem_ops += 1;
  m_l1 += ev.l1_misses;
  m_l2 += ev.l2_misses;
}

void RawCounters::merge(const RawCounters& o) {
  i_t += o.i_t;
  i_v += o.i_v;
  i_cfg += o.i_cfg;
  c_t += o.c_t;
  c_v += o.c_v;
  sum_vl += o.sum_vl;
  m_l1 += o.m_l1;
  m_l2 += o.m_l2;
  mem_ops += o.mem_ops;
  for (size_t k = 0; k < class_counts.size(); ++k) class_counts[k] += o.class_counts[k];
}

MetricSet compute_metrics(const RawCounters& rc, uint32_t vl_max) {
  MetricSet m;
  if (rc.i_t == 0) return m;
  m.m_v = static_cast<double>(rc.i_v) / static_cast<double>(rc.i_t);
  if (rc.i_v == 0) return m;  // m_v = 0, per-vector ratios stay absent
  m.a_v = static_cast<double>(rc.c_v) / static_cast<double>(rc.c_t);
  m.vcpi = static_cast<double>(rc.c_v) / static_cast<double>(rc.i_v);
  m.avl = static_cast<double>(rc.sum_vl) / static_cast<double>(rc.i_v);
  m.e_v = *m.avl / static_cast<double>(vl_max);
  return m;
}

void Aggregator::add(const TraceEvent& ev) {
  phases_.at(ev.phase - 1).add(ev);
  total_.add(ev);
}

void Aggregator::merge(const Aggregator& other) {
  for (unsigned k = 0; k < kPhaseCount; ++k) phases_[k].merge(other.phases_[k]);
  total_.merge(other.total_);
}

std::array<double, kPhaseCount> phase_weight_table(
    const std::array<RawCounters, kPhaseCount>& phases) {
  std::array<double, kPhaseCount> w{};
  uint64_t total = 0;
  for (const auto& p : phases) total += p.c_t;
  if (total == 0) return w;
  for (unsigned k = 0; k < kPhaseCount; ++k)
    w[k] = 100.0 * static_cast<double>(phases[k].c_t) / static_cast<double>(total);
  return w;
}

IncompleteSweep::IncompleteSweep(std::vector<std::pair<uint32_t, unsigned>> missing_)
    : std::runtime_error([&] {
        std::string msg = "incomplete sweep; missing (vector_size, phase):";
        for (const auto& [vs, ph] : missing_)
          msg += " (" + std::to_string(vs) + "," + std::to_string(ph) + ")";
        return msg;
      }()),
      missing(std::move(missing_)) {}

std::vector<std::array<double, kPhaseCount>> mix_heatmap(const std::vector<MixCell>& cells,
                                                         const std::vector<uint32_t>& sizes) {
  std::vector<std::array<double, kPhaseCount>> grid(sizes.size());
  std::vector<std::array<bool, kPhaseCount>> seen(sizes.size());
  for (auto& row : seen) row.fill(false);
  for (const auto& c : cells) {
    if (c.phase < 1 || c.phase > kPhaseCount) continue;
    for (size_t r = 0; r < sizes.size(); ++r) {
      if (sizes[r] == c.vector_size) {
        grid[r][c.phase - 1] = c.m_v;
        seen[r][c.phase - 1] = true;
      }
    }
  }
  std::vector<std::pair<uint32_t, unsigned>> missing;
  for (size_t r = 0; r < sizes.size(); ++r)
    for (unsigned p = 0; p < kPhaseCount; ++p)
      if (!seen[r][p]) missing.emplace_back(sizes[r], p + 1);
  if (!missing.empty()) throw IncompleteSweep(std::move(missing));
  return grid;
}

OlsResult ols_regression(const std::vector<double>& y, const std::vector<std::vector<double>>& X) {
  const size_t n = y.size();
  const size_t k = X.empty() ? 0 : X.front().size();
  if (X.size() != n) throw SingularDesign("regressor row count does not match observation count");
  for (const auto& row : X)
    if (row.size() != k) throw SingularDesign("ragged regressor matrix");
  if (n < k + 2) throw SingularDesign("need at least cols+2 observations for a residual fit");

  double mean_y = 0.0;
  for (double v : y) mean_y += v;
  mean_y /= static_cast<double>(n);
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - mean_y) * (v - mean_y);
  if (ss_tot == 0.0) throw DegenerateResponse("response has zero variance");

  // Design matrix with a leading intercept column, factored in place by
  // Householder reflections; rhs carries Q^T y along.
  const size_t p = k + 1;
  std::vector<double> a(n * p);
  std::vector<double> rhs = y;
  for (size_t i = 0; i < n; ++i) {
    a[i * p] = 1.0;
    for (size_t j = 0; j < k; ++j) a[i * p + 1 + j] = X[i][j];
  }

  double max_diag = 0.0;
  for (size_t j = 0; j < p; ++j) {
    double norm = 0.0;
    for (size_t i = j; i < n; ++i) norm += a[i * p + j] * a[i * p + j];
    norm = std::sqrt(norm);
    if (norm != 0.0 && a[j * p + j] > 0.0) norm = -norm;
    double diag = a[j * p + j];
    double denom = diag - norm;
    if (norm != 0.0 && denom != 0.0) {
      // v = x - norm*e1, applied as rank-one update with beta = 1/(v1*|v|^2/2)
      a[j * p + j] = denom;
      double vsq = 0.0;
      for (size_t i = j; i < n; ++i) vsq += a[i * p + j] * a[i * p + j];
      double beta = 2.0 / vsq;
      for (size_t c = j + 1; c < p; ++c) {
        double dot = 0.0;
        for (size_t i = j; i < n; ++i) dot += a[i * p + j] * a[i * p + c];
        dot *= beta;
        for (size_t i = j; i < n; ++i) a[i * p + c] -= dot * a[i * p + j];
      }
      double dot = 0.0;
      for (size_t i = j; i < n; ++i) dot += a[i * p + j] * rhs[i];
      dot *= beta;
      for (size_t i = j; i < n; ++i) rhs[i] -= dot * a[i * p + j];
      a[j * p + j] = norm;  // R diagonal
    }
    double dj = std::fabs(a[j * p + j]);
    if (dj > max_diag) max_diag = dj;
  }

  const double tol = 1e-12 * (max_diag > 1.0 ? max_diag : 1.0);
  for (size_t j = 0; j < p; ++j)
    if (std::fabs(a[j * p + j]) <= tol)
      throw SingularDesign("rank-deficient design (column " + std::to_string(j) + ")");

  std::vector<double> beta(p, 0.0);
  for (size_t jj = p; jj-- > 0;) {
    double s = rhs[jj];
    for (size_t c = jj + 1; c < p; ++c) s -= a[jj * p + c] * beta[c];
    beta[jj] = s / a[jj * p + jj];
  }

  double ss_res = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double fit = beta[0];
    for (size_t j = 0; j < k; ++j) fit += beta[1 + j] * X[i][j];
    double r = y[i] - fit;
    ss_res += r * r;
  }

  OlsResult out;
  out.intercept = beta[0];
  out.coefficients.assign(beta.begin() + 1, beta.end());
  out.r_squared = 1.0 - ss_res / ss_tot;
  return out;
}

}  // namespace veclens
