#include "veclens/costmodel.hpp"

namespace veclens {

namespace {
uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }
}  // namespace

uint32_t arith_cycles(uint32_t vl, const CostModelConfig& cfg) {
  if (vl == 0) return 1;
  uint64_t groups = ceil_div(vl, cfg.lanes);
  return static_cast<uint32_t>(cfg.fsm_chunk * ceil_div(groups, cfg.fsm_chunk));
}

uint32_t mem_cycles(MemMode mode, uint32_t vl, uint32_t line_count, uint32_t l1_misses,
                    uint32_t l2_misses, const CostModelConfig& cfg) {
  if (vl == 0) return 1;
  uint64_t cycles = cfg.vmem_base;
  if (mode == MemMode::UnitStride)
    cycles += line_count;
  else
    cycles += uint64_t(vl) * cfg.vmem_per_elem;
  cycles += uint64_t(l1_misses) * cfg.l1_miss_penalty;
  cycles += uint64_t(l2_misses) * cfg.l2_miss_penalty;
  return static_cast<uint32_t>(cycles);
}

uint32_t scalar_cycles(Opcode op, const CostModelConfig& cfg) {
  auto it = cfg.scalar_cycles.find(op);
  return it != cfg.scalar_cycles.end() ? it->second : cfg.scalar_default_cycles;
}

uint32_t instr_cycles(InstrClass cls, Opcode op, uint32_t vl, uint32_t line_count,
                      uint32_t l1_misses, uint32_t l2_misses, const CostModelConfig& cfg) {
  switch (cls) {
    case InstrClass::Scalar:
      return scalar_cycles(op, cfg);
    case InstrClass::VectorConfig:
      return 1;
    case InstrClass::VectorArithmetic:
      return arith_cycles(vl, cfg);
    case InstrClass::VectorMemory:
      return mem_cycles(mem_mode(op), vl, line_count, l1_misses, l2_misses, cfg);
    case InstrClass::VectorControlLane: {
      uint32_t c = static_cast<uint32_t>(ceil_div(arith_cycles(vl, cfg), cfg.fsm_chunk));
      return c == 0 ? 1 : c;
    }
  }
  return 1;
}

}  // namespace veclens
