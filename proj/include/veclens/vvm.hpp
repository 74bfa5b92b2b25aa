#pragma once

// Vector-length-agnostic emulator. Executes one instruction stream against a
// machine state (scalar int/fp files, 32 vector registers of vl_max 64-bit
// lanes, sparse byte-addressable memory, two-level LRU cache) and produces
// one TraceEvent per retired instruction.
//
// Vector register lanes hold raw 64-bit values. Arithmetic interprets lanes
// as IEEE doubles; memory instructions move lanes verbatim; indexed memory
// instructions interpret lanes of the index register as signed element
// indices (scaled by 8 to form byte offsets). Streams are executed-
// instruction traces: loops arrive pre-expanded, so `branch` retires as a
// cost token and transfers no control.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "veclens/costmodel.hpp"
#include "veclens/isa.hpp"

namespace veclens {

struct TraceEvent {
  uint64_t seq = 0;
  uint8_t phase = 1;
  InstrClass cls = InstrClass::Scalar;
  Opcode opcode = Opcode::add;
  uint16_t vl = 0;  // granted vl for vsetvl, active vl for vector ops, else 0
  uint32_t cycles = 0;
  uint16_t l1_misses = 0;
  uint16_t l2_misses = 0;

  bool operator==(const TraceEvent&) const = default;
};

struct MemoryFault : std::runtime_error {
  uint64_t addr;
  uint64_t seq;
  MemoryFault(const std::string& what, uint64_t addr_, uint64_t seq_)
      : std::runtime_error(what), addr(addr_), seq(seq_) {}
};

struct CacheGeometry {
  uint32_t size_bytes = 0;
  uint32_t line_bytes = 64;
  uint32_t ways = 8;
};

struct CacheConfig {
  CacheGeometry l1{32 * 1024, 64, 8};
  CacheGeometry l2{1024 * 1024, 64, 16};
};

// Set-associative LRU cache directory (tags only; no data storage).
class LruCache {
 public:
  explicit LruCache(CacheGeometry geom);
  bool access(uint64_t line_addr);  // true on hit; inserts on miss
  void reset();
  const CacheGeometry& geometry() const { return geom_; }

 private:
  CacheGeometry geom_;
  uint32_t sets_;
  std::vector<uint64_t> tags_;  // sets_ x ways, most-recent first
};

struct CacheState {
  explicit CacheState(const CacheConfig& cfg);
  struct Touch {
    bool l1_miss = false;
    bool l2_miss = false;
  };
  // One lookup per distinct line per instruction. An L2 miss implies an L1
  // miss, so m_l2 <= m_l1 always holds.
  Touch touch_line(uint64_t line_addr);

  LruCache l1;
  LruCache l2;
  uint64_t m_l1 = 0;
  uint64_t m_l2 = 0;
};

struct MachineConfig {
  uint32_t vl_max = 256;
  uint64_t mem_size = 256ull << 20;
  CacheConfig cache;
};

class MachineState {
 public:
  explicit MachineState(const MachineConfig& cfg = {});

  // Executes one instruction; seq is stamped into the event and any fault.
  TraceEvent step(const Instruction& ins, const CostModelConfig& cost, uint64_t seq = 0);

  uint32_t vl_max() const { return cfg_.vl_max; }
  uint32_t active_vl() const { return active_vl_; }
  uint32_t set_vl(uint32_t requested);  // grants min(requested, vl_max)

  int64_t x(unsigned i) const { return i == 0 ? 0 : x_[i]; }
  void set_x(unsigned i, int64_t v) {
    if (i != 0) x_[i] = v;
  }
  double f(unsigned i) const { return f_[i]; }
  void set_f(unsigned i, double v) { f_[i] = v; }
  uint64_t vlane(unsigned reg, unsigned lane) const { return v_[reg * cfg_.vl_max + lane]; }
  void set_vlane(unsigned reg, unsigned lane, uint64_t bits) { v_[reg * cfg_.vl_max + lane] = bits; }

  // Debug/loader access. Bypasses the cache model entirely.
  uint64_t peek_u64(uint64_t addr) const;
  double peek_f64(uint64_t addr) const;
  int64_t peek_i64(uint64_t addr) const;
  void poke_u64(uint64_t addr, uint64_t bits);
  void poke_f64(uint64_t addr, double value);
  void poke_i64(uint64_t addr, int64_t value);

  CacheState& cache() { return cache_; }
  const CacheState& cache() const { return cache_; }
  const MachineConfig& config() const { return cfg_; }

 private:
  void check_addr(uint64_t addr, uint64_t seq) const;
  uint64_t mem_read(uint64_t addr) const;
  void mem_write(uint64_t addr, uint64_t bits);

  int64_t xval(const Operand& o, uint64_t seq) const;
  double fval(const Operand& o) const;

  MachineConfig cfg_;
  std::array<int64_t, 32> x_{};
  std::array<double, 32> f_{};
  std::vector<uint64_t> v_;
  uint32_t active_vl_ = 0;
  CacheState cache_;

  static constexpr uint64_t kPageBits = 16;
  static constexpr uint64_t kPageSize = 1ull << kPageBits;
  mutable std::unordered_map<uint64_t, std::unique_ptr<uint8_t[]>> pages_;
};

struct RunSummary {
  uint64_t total_instructions = 0;
  uint64_t total_cycles = 0;
};

// Streaming executor: pulls instructions from `next` (returning
// std::optional<Instruction> or a pointer convertible to bool) until
// exhausted, forwarding every event to `sink`. The stream is never
// materialized.
template <typename Source, typename Sink>
RunSummary run(Source&& next, MachineState& machine, const CostModelConfig& cost, Sink&& sink) {
  RunSummary summary;
  for (;;) {
    auto ins = next();
    if (!ins) break;
    TraceEvent ev = machine.step(*ins, cost, summary.total_instructions);
    summary.total_instructions += 1;
    summary.total_cycles += ev.cycles;
    sink(ev);
  }
  return summary;
}

}  // namespace veclens
