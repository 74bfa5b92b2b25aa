#include "veclens/vvm.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace veclens {

namespace {

constexpr uint64_t kEmptyTag = ~0ull;

uint64_t wrap_add(int64_t a, int64_t b) { return static_cast<uint64_t>(a) + static_cast<uint64_t>(b); }
uint64_t wrap_mul(int64_t a, int64_t b) { return static_cast<uint64_t>(a) * static_cast<uint64_t>(b); }

}  // namespace

LruCache::LruCache(CacheGeometry geom) : geom_(geom) {
  sets_ = geom_.size_bytes / (geom_.line_bytes * geom_.ways);
  tags_.assign(static_cast<size_t>(sets_) * geom_.ways, kEmptyTag);
}

bool LruCache::access(uint64_t line_addr) {
  uint32_t set = static_cast<uint32_t>(line_addr % sets_);
  uint64_t* way = tags_.data() + static_cast<size_t>(set) * geom_.ways;
  for (uint32_t i = 0; i < geom_.ways; ++i) {
    if (way[i] == line_addr) {
      // Move to front: ways are kept most-recently-used first.
      for (uint32_t j = i; j > 0; --j) way[j] = way[j - 1];
      way[0] = line_addr;
      return true;
    }
  }
  for (uint32_t j = geom_.ways - 1; j > 0; --j) way[j] = way[j - 1];
  way[0] = line_addr;
  return false;
}

void LruCache::reset() { tags_.assign(tags_.size(), kEmptyTag); }

CacheState::CacheState(const CacheConfig& cfg) : l1(cfg.l1), l2(cfg.l2) {}

CacheState::Touch CacheState::touch_line(uint64_t line_addr) {
  Touch t;
  if (!l1.access(line_addr)) {
    t.l1_miss = true;
    m_l1 += 1;
    if (!l2.access(line_addr)) {
      t.l2_miss = true;
      m_l2 += 1;
    }
  }
  return t;
}

MachineState::MachineState(const MachineConfig& cfg)
    : cfg_(cfg), v_(32ull * cfg.vl_max, 0), cache_(cfg.cache) {}

uint32_t MachineState::set_vl(uint32_t requested) {
  active_vl_ = requested < cfg_.vl_max ? requested : cfg_.vl_max;
  return active_vl_;
}

void MachineState::check_addr(uint64_t addr, uint64_t seq) const {
  if (addr % 8 != 0)
    throw MemoryFault("misaligned access at 0x" + std::to_string(addr), addr, seq);
  if (addr + 8 > cfg_.mem_size)
    throw MemoryFault("out-of-range access at 0x" + std::to_string(addr), addr, seq);
}

uint64_t MachineState::mem_read(uint64_t addr) const {
  auto it = pages_.find(addr >> kPageBits);
  if (it == pages_.end()) return 0;  // untouched memory reads as zero
  uint64_t bits;
  std::memcpy(&bits, it->second.get() + (addr & (kPageSize - 1)), 8);
  return bits;
}

void MachineState::mem_write(uint64_t addr, uint64_t bits) {
  auto& page = pages_[addr >> kPageBits];
  if (!page) page = std::make_unique<uint8_t[]>(kPageSize);
  std::memcpy(page.get() + (addr & (kPageSize - 1)), &bits, 8);
}

uint64_t MachineState::peek_u64(uint64_t addr) const {
  check_addr(addr, 0);
  return mem_read(addr);
}
double MachineState::peek_f64(uint64_t addr) const { return std::bit_cast<double>(peek_u64(addr)); }
int64_t MachineState::peek_i64(uint64_t addr) const { return static_cast<int64_t>(peek_u64(addr)); }
void MachineState::poke_u64(uint64_t addr, uint64_t bits) {
  check_addr(addr, 0);
  mem_write(addr, bits);
}
void MachineState::poke_f64(uint64_t addr, double value) { poke_u64(addr, std::bit_cast<uint64_t>(value)); }
void MachineState::poke_i64(uint64_t addr, int64_t value) { poke_u64(addr, static_cast<uint64_t>(value)); }

int64_t MachineState::xval(const Operand& o, uint64_t) const {
  if (o.kind == Operand::Kind::Int) return o.ival;
  return x(o.reg.index);
}

double MachineState::fval(const Operand& o) const {
  if (o.kind == Operand::Kind::Fp) return o.fval;
  return f(o.reg.index);
}

TraceEvent MachineState::step(const Instruction& ins, const CostModelConfig& cost, uint64_t seq) {
  TraceEvent ev;
  ev.seq = seq;
  ev.phase = ins.phase;
  ev.opcode = ins.opcode;
  ev.cls = classify(ins.opcode);

  const uint32_t line_bytes = cache_.l1.geometry().line_bytes;
  uint32_t line_count = 0;

  // Distinct cache lines in first-touch order; one probe per line.
  std::vector<uint64_t> seen_lines;
  auto touch = [&](uint64_t addr) {
    uint64_t line = addr / line_bytes;
    for (uint64_t s : seen_lines)
      if (s == line) return;
    seen_lines.push_back(line);
    line_count += 1;
    auto t = cache_.touch_line(line);
    if (t.l1_miss) ev.l1_misses += 1;
    if (t.l2_miss) ev.l2_misses += 1;
  };

  const uint32_t vl = active_vl_;
  auto vload_addr = [&](unsigned dreg, auto&& lane_addr) {
    for (uint32_t i = 0; i < vl; ++i) {
      uint64_t addr = lane_addr(i);
      check_addr(addr, seq);
      touch(addr);
      set_vlane(dreg, i, mem_read(addr));
    }
  };
  auto vstore_addr = [&](unsigned dreg, auto&& lane_addr) {
    for (uint32_t i = 0; i < vl; ++i) {
      uint64_t addr = lane_addr(i);
      check_addr(addr, seq);
      touch(addr);
      mem_write(addr, vlane(dreg, i));
    }
  };
  auto vbinary = [&](auto&& op) {
    unsigned d = ins.dest.reg.index, a = ins.src[0].reg.index, b = ins.src[1].reg.index;
    for (uint32_t i = 0; i < vl; ++i) {
      double r = op(std::bit_cast<double>(vlane(a, i)), std::bit_cast<double>(vlane(b, i)));
      set_vlane(d, i, std::bit_cast<uint64_t>(r));
    }
  };

  switch (ins.opcode) {
    case Opcode::add:
      set_x(ins.dest.reg.index, static_cast<int64_t>(wrap_add(xval(ins.src[0], seq), xval(ins.src[1], seq))));
      break;
    case Opcode::mul:
      set_x(ins.dest.reg.index, static_cast<int64_t>(wrap_mul(xval(ins.src[0], seq), xval(ins.src[1], seq))));
      break;
    case Opcode::load: {
      uint64_t addr = wrap_add(xval(ins.src[0], seq),
                               ins.src[1].kind == Operand::Kind::None ? 0 : ins.src[1].ival);
      check_addr(addr, seq);
      touch(addr);
      uint64_t bits = mem_read(addr);
      if (ins.dest.reg.file == RegFile::FpF)
        set_f(ins.dest.reg.index, std::bit_cast<double>(bits));
      else
        set_x(ins.dest.reg.index, static_cast<int64_t>(bits));
      break;
    }
    case Opcode::store: {
      uint64_t addr = wrap_add(xval(ins.src[0], seq),
                               ins.src[1].kind == Operand::Kind::None ? 0 : ins.src[1].ival);
      check_addr(addr, seq);
      touch(addr);
      uint64_t bits = ins.dest.reg.file == RegFile::FpF
                          ? std::bit_cast<uint64_t>(f(ins.dest.reg.index))
                          : static_cast<uint64_t>(x(ins.dest.reg.index));
      mem_write(addr, bits);
      break;
    }
    case Opcode::branch:
      break;  // pre-expanded stream: a branch is a retired cost token
    case Opcode::cmp: {
      bool lt;
      if (ins.src[0].kind == Operand::Kind::Fp ||
          (ins.src[0].kind == Operand::Kind::Register && ins.src[0].reg.file == RegFile::FpF))
        lt = fval(ins.src[0]) < fval(ins.src[1]);
      else
        lt = xval(ins.src[0], seq) < xval(ins.src[1], seq);
      set_x(ins.dest.reg.index, lt ? 1 : 0);
      break;
    }
    case Opcode::fadd:
      set_f(ins.dest.reg.index, fval(ins.src[0]) + fval(ins.src[1]));
      break;
    case Opcode::fmul:
      set_f(ins.dest.reg.index, fval(ins.src[0]) * fval(ins.src[1]));
      break;
    case Opcode::fdiv:
      set_f(ins.dest.reg.index, fval(ins.src[0]) / fval(ins.src[1]));
      break;
    case Opcode::fmadd_unfused: {
      // Two IEEE roundings by construction: product first, then the add.
      double p = fval(ins.src[0]) * fval(ins.src[1]);
      set_f(ins.dest.reg.index, p + fval(ins.src[2]));
      break;
    }
    case Opcode::vsetvl: {
      int64_t req = xval(ins.src[0], seq);
      uint32_t granted = set_vl(req < 0 ? 0 : static_cast<uint32_t>(
                                                  req > static_cast<int64_t>(cfg_.vl_max) ? cfg_.vl_max : req));
      set_x(ins.dest.reg.index, granted);
      ev.vl = static_cast<uint16_t>(granted);
      break;
    }
    case Opcode::vfadd:
      vbinary([](double a, double b) { return a + b; });
      break;
    case Opcode::vfsub:
      vbinary([](double a, double b) { return a - b; });
      break;
    case Opcode::vfmul:
      vbinary([](double a, double b) { return a * b; });
      break;
    case Opcode::vfdiv:
      vbinary([](double a, double b) { return a / b; });
      break;
    case Opcode::vfmacc: {
      unsigned d = ins.dest.reg.index, a = ins.src[0].reg.index, b = ins.src[1].reg.index,
               c = ins.src[2].reg.index;
      for (uint32_t i = 0; i < vl; ++i) {
        double p = std::bit_cast<double>(vlane(a, i)) * std::bit_cast<double>(vlane(b, i));
        set_vlane(d, i, std::bit_cast<uint64_t>(p + std::bit_cast<double>(vlane(c, i))));
      }
      break;
    }
    case Opcode::vload_unit: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      vload_addr(ins.dest.reg.index, [&](uint32_t i) { return base + 8ull * i; });
      break;
    }
    case Opcode::vstore_unit: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      vstore_addr(ins.dest.reg.index, [&](uint32_t i) { return base + 8ull * i; });
      break;
    }
    case Opcode::vload_strided: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      int64_t stride = xval(ins.src[1], seq);
      vload_addr(ins.dest.reg.index,
                 [&](uint32_t i) { return base + static_cast<uint64_t>(stride) * i; });
      break;
    }
    case Opcode::vstore_strided: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      int64_t stride = xval(ins.src[1], seq);
      vstore_addr(ins.dest.reg.index,
                  [&](uint32_t i) { return base + static_cast<uint64_t>(stride) * i; });
      break;
    }
    case Opcode::vload_indexed: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      unsigned idx = ins.src[1].reg.index;
      vload_addr(ins.dest.reg.index, [&](uint32_t i) {
        return base + static_cast<uint64_t>(static_cast<int64_t>(vlane(idx, i))) * 8ull;
      });
      break;
    }
    case Opcode::vstore_indexed: {
      uint64_t base = static_cast<uint64_t>(xval(ins.src[0], seq));
      unsigned idx = ins.src[1].reg.index;
      vstore_addr(ins.dest.reg.index, [&](uint32_t i) {
        return base + static_cast<uint64_t>(static_cast<int64_t>(vlane(idx, i))) * 8ull;
      });
      break;
    }
    case Opcode::vmv: {
      unsigned d = ins.dest.reg.index, s = ins.src[0].reg.index;
      for (uint32_t i = 0; i < vl; ++i) set_vlane(d, i, vlane(s, i));
      break;
    }
    case Opcode::vbroadcast: {
      uint64_t bits = std::bit_cast<uint64_t>(fval(ins.src[0]));
      unsigned d = ins.dest.reg.index;
      for (uint32_t i = 0; i < vl; ++i) set_vlane(d, i, bits);
      break;
    }
    case Opcode::vslide: {
      // Slide down: lane i reads source lane i+offset, upper lanes zero-fill.
      unsigned d = ins.dest.reg.index, s = ins.src[0].reg.index;
      int64_t off = ins.src[1].ival;
      for (uint32_t i = 0; i < vl; ++i) {
        int64_t j = static_cast<int64_t>(i) + off;
        uint64_t bits = (j >= 0 && j < static_cast<int64_t>(vl)) ? vlane(s, static_cast<uint32_t>(j)) : 0;
        set_vlane(d, i, bits);
      }
      break;
    }
  }

  if (ev.cls != InstrClass::Scalar && ev.cls != InstrClass::VectorConfig)
    ev.vl = static_cast<uint16_t>(vl);
  ev.cycles = instr_cycles(ev.cls, ins.opcode, ev.vl, line_count, ev.l1_misses, ev.l2_misses, cost);
  return ev;
}

}  // namespace veclens
