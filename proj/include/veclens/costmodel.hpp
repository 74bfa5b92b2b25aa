#pragma once

// Cycle cost model for the emulated long-vector core: an 8-lane vector unit
// whose arithmetic issue is quantized in chunks of 5 lane-groups, a flat
// per-line unit-stride memory path and per-element strided/indexed paths,
// plus cache miss penalties. Scalar instructions price from a small table.

#include <cstdint>
#include <unordered_map>

#include "veclens/isa.hpp"

namespace veclens {

struct CostModelConfig {
  uint32_t lanes = 8;       // vector lanes (elements retired per group)
  uint32_t fsm_chunk = 5;   // issue-FSM quantum, in lane-groups
  uint32_t vl_max = 256;    // architectural maximum vector length

  uint32_t scalar_default_cycles = 1;
  std::unordered_map<Opcode, uint32_t> scalar_cycles = {{Opcode::fdiv, 20}};

  uint32_t vmem_base = 10;      // fixed vector-memory startup cost
  uint32_t vmem_per_elem = 1;   // per-element cost for strided/indexed
  uint32_t l1_miss_penalty = 10;
  uint32_t l2_miss_penalty = 80;
};

// Vector arithmetic cost. The FSM rounds the lane-group count up to a
// multiple of fsm_chunk, which makes vl a multiple of lanes*fsm_chunk (40 by
// default) the per-element sweet spot: arith_cycles(240)=30 < 35=arith_cycles(256).
// vl = 0 is a 1-cycle no-op.
uint32_t arith_cycles(uint32_t vl, const CostModelConfig& cfg);

// Vector memory cost. Unit stride pays vmem_base plus one cycle per cache
// line touched; strided/indexed pay vmem_base plus vmem_per_elem per element.
// Both add l1/l2 miss penalties. vl = 0 is a 1-cycle no-op.
uint32_t mem_cycles(MemMode mode, uint32_t vl, uint32_t line_count, uint32_t l1_misses,
                    uint32_t l2_misses, const CostModelConfig& cfg);

uint32_t scalar_cycles(Opcode op, const CostModelConfig& cfg);

// Full dispatch used by the emulator for every retired instruction.
//   Scalar            -> scalar_cycles table
//   VectorConfig      -> 1
//   VectorArithmetic  -> arith_cycles(vl)
//   VectorMemory      -> mem_cycles(...)
//   VectorControlLane -> ceil(arith_cycles(vl) / fsm_chunk), min 1
uint32_t instr_cycles(InstrClass cls, Opcode op, uint32_t vl, uint32_t line_count,
                      uint32_t l1_misses, uint32_t l2_misses, const CostModelConfig& cfg);

}  // namespace veclens
