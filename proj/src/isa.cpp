#include "veclens/isa.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cstring>

namespace veclens {

namespace {

// Operand slot admission masks, one per textual position.
enum : uint8_t {
  XR = 1 << 0,  // x register
  FR = 1 << 1,  // f register
  VR = 1 << 2,  // v register
  II = 1 << 3,  // integer immediate
  FI = 1 << 4,  // floating immediate
};

struct OpInfo {
  std::string_view name;
  InstrClass cls;
  uint8_t min_ops;
  uint8_t max_ops;
  std::array<uint8_t, 4> slot;  // admission mask per operand position
};

// Indexed by the Opcode enumeration value.
constexpr OpInfo kOps[kOpcodeCount] = {
    {"add", InstrClass::Scalar, 3, 3, {XR, XR, XR | II, 0}},
    {"mul", InstrClass::Scalar, 3, 3, {XR, XR, XR | II, 0}},
    {"load", InstrClass::Scalar, 2, 3, {XR | FR, XR, II, 0}},
    {"store", InstrClass::Scalar, 2, 3, {XR | FR, XR, II, 0}},
    {"branch", InstrClass::Scalar, 1, 2, {XR, II, 0, 0}},
    {"cmp", InstrClass::Scalar, 3, 3, {XR, XR | FR | II | FI, XR | FR | II | FI, 0}},
    {"fadd", InstrClass::Scalar, 3, 3, {FR, FR | FI, FR | FI, 0}},
    {"fmul", InstrClass::Scalar, 3, 3, {FR, FR | FI, FR | FI, 0}},
    {"fdiv", InstrClass::Scalar, 3, 3, {FR, FR | FI, FR | FI, 0}},
    {"fmadd_unfused", InstrClass::Scalar, 4, 4, {FR, FR | FI, FR | FI, FR}},
    {"vsetvl", InstrClass::VectorConfig, 2, 2, {XR, XR | II, 0, 0}},
    {"vfadd", InstrClass::VectorArithmetic, 3, 3, {VR, VR, VR, 0}},
    {"vfsub", InstrClass::VectorArithmetic, 3, 3, {VR, VR, VR, 0}},
    {"vfmul", InstrClass::VectorArithmetic, 3, 3, {VR, VR, VR, 0}},
    {"vfdiv", InstrClass::VectorArithmetic, 3, 3, {VR, VR, VR, 0}},
    {"vfmacc", InstrClass::VectorArithmetic, 4, 4, {VR, VR, VR, VR}},
    {"vload_unit", InstrClass::VectorMemory, 2, 2, {VR, XR, 0, 0}},
    {"vload_strided", InstrClass::VectorMemory, 3, 3, {VR, XR, XR | II, 0}},
    {"vload_indexed", InstrClass::VectorMemory, 3, 3, {VR, XR, VR, 0}},
    {"vstore_unit", InstrClass::VectorMemory, 2, 2, {VR, XR, 0, 0}},
    {"vstore_strided", InstrClass::VectorMemory, 3, 3, {VR, XR, XR | II, 0}},
    {"vstore_indexed", InstrClass::VectorMemory, 3, 3, {VR, XR, VR, 0}},
    {"vmv", InstrClass::VectorControlLane, 2, 2, {VR, VR, 0, 0}},
    {"vbroadcast", InstrClass::VectorControlLane, 2, 2, {VR, FR | FI, 0, 0}},
    {"vslide", InstrClass::VectorControlLane, 3, 3, {VR, VR, II, 0}},
};

const OpInfo& info(Opcode op) {
  auto raw = static_cast<size_t>(op);
  if (raw >= kOpcodeCount)
    throw UnknownOpcode("unknown opcode value " + std::to_string(raw));
  return kOps[raw];
}

uint8_t operand_mask_bit(const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::Register:
      switch (o.reg.file) {
        case RegFile::IntX: return XR;
        case RegFile::FpF: return FR;
        case RegFile::Vec: return VR;
      }
      return 0;
    case Operand::Kind::Int: return II;
    case Operand::Kind::Fp: return FI;
    case Operand::Kind::None: return 0;
  }
  return 0;
}

}  // namespace

bool Operand::operator==(const Operand& o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case Kind::None: return true;
    case Kind::Register: return reg == o.reg;
    case Kind::Int: return ival == o.ival;
    case Kind::Fp: return std::bit_cast<uint64_t>(fval) == std::bit_cast<uint64_t>(o.fval);
  }
  return false;
}

Operand xreg(unsigned index) { return {Operand::Kind::Register, {RegFile::IntX, uint8_t(index)}, 0, 0.0}; }
Operand freg(unsigned index) { return {Operand::Kind::Register, {RegFile::FpF, uint8_t(index)}, 0, 0.0}; }
Operand vreg(unsigned index) { return {Operand::Kind::Register, {RegFile::Vec, uint8_t(index)}, 0, 0.0}; }
Operand imm(int64_t value) { return {Operand::Kind::Int, {}, value, 0.0}; }
Operand fimm(double value) { return {Operand::Kind::Fp, {}, 0, value}; }

const std::vector<Opcode>& opcode_set() {
  static const std::vector<Opcode> all = [] {
    std::vector<Opcode> v;
    v.reserve(kOpcodeCount);
    for (size_t i = 0; i < kOpcodeCount; ++i) v.push_back(static_cast<Opcode>(i));
    return v;
  }();
  return all;
}

InstrClass classify(Opcode op) { return info(op).cls; }

bool is_vector(InstrClass cls) {
  return cls == InstrClass::VectorArithmetic || cls == InstrClass::VectorMemory ||
         cls == InstrClass::VectorControlLane;
}

MemMode mem_mode(Opcode op) {
  switch (op) {
    case Opcode::load:
    case Opcode::store:
    case Opcode::vload_unit:
    case Opcode::vstore_unit:
      return MemMode::UnitStride;
    case Opcode::vload_strided:
    case Opcode::vstore_strided:
      return MemMode::Strided;
    case Opcode::vload_indexed:
    case Opcode::vstore_indexed:
      return MemMode::Indexed;
    default:
      return MemMode::None;
  }
}

bool is_memory_op(Opcode op) { return mem_mode(op) != MemMode::None; }

std::string_view opcode_name(Opcode op) { return info(op).name; }

Opcode opcode_from_name(std::string_view name) {
  for (size_t i = 0; i < kOpcodeCount; ++i)
    if (kOps[i].name == name) return static_cast<Opcode>(i);
  throw UnknownOpcode("unknown opcode '" + std::string(name) + "'");
}

std::string_view class_name(InstrClass cls) {
  switch (cls) {
    case InstrClass::Scalar: return "scalar";
    case InstrClass::VectorConfig: return "vconfig";
    case InstrClass::VectorArithmetic: return "varith";
    case InstrClass::VectorMemory: return "vmem";
    case InstrClass::VectorControlLane: return "vlane";
  }
  return "?";
}

namespace {

void format_operand(std::string& out, const Operand& o) {
  char buf[40];
  switch (o.kind) {
    case Operand::Kind::Register: {
      char prefix = o.reg.file == RegFile::IntX ? 'x' : o.reg.file == RegFile::FpF ? 'f' : 'v';
      out += prefix;
      out += std::to_string(o.reg.index);
      return;
    }
    case Operand::Kind::Int:
      out += std::to_string(o.ival);
      return;
    case Operand::Kind::Fp: {
      // Shortest round-trip form; reparsed exactly by std::from_chars. Keep a
      // floating marker ('.', exponent, inf/nan) so the text never reparses
      // as an integer immediate in slots that admit both.
      auto res = std::to_chars(buf, buf + sizeof buf, o.fval);
      std::string_view text(buf, static_cast<size_t>(res.ptr - buf));
      out += text;
      if (text.find_first_of(".eEin") == std::string_view::npos) out += ".0";
      return;
    }
    case Operand::Kind::None:
      return;
  }
}

}  // namespace

std::string format_instruction(const Instruction& ins) {
  const OpInfo& oi = info(ins.opcode);
  std::string out(oi.name);
  bool first = true;
  auto put = [&](const Operand& o) {
    if (o.kind == Operand::Kind::None) return;
    out += first ? " " : ", ";
    first = false;
    format_operand(out, o);
  };
  put(ins.dest);
  for (const Operand& s : ins.src) put(s);
  out += " #phase=";
  out += std::to_string(ins.phase);
  return out;
}

namespace {

struct Cursor {
  std::string_view text;
  size_t pos = 0;
  size_t line = 1;

  [[noreturn]] void fail(const std::string& msg, size_t at) const {
    throw ParseError(msg, line, at + 1);
  }
  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
};

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

Operand parse_operand(Cursor& c, uint8_t slot_mask, std::string_view op_name) {
  c.skip_ws();
  size_t start = c.pos;
  if (start >= c.text.size()) c.fail("missing operand", start);

  char first = c.text[start];
  // Register: single-letter file prefix followed by digits.
  if ((first == 'x' || first == 'f' || first == 'v') && start + 1 < c.text.size() &&
      std::isdigit(static_cast<unsigned char>(c.text[start + 1]))) {
    size_t p = start + 1;
    while (p < c.text.size() && std::isdigit(static_cast<unsigned char>(c.text[p]))) ++p;
    unsigned idx = 0;
    std::from_chars(c.text.data() + start + 1, c.text.data() + p, idx);
    if (idx > 31) c.fail("unknown register name", start);
    c.pos = p;
    RegFile file = first == 'x' ? RegFile::IntX : first == 'f' ? RegFile::FpF : RegFile::Vec;
    uint8_t bit = file == RegFile::IntX ? XR : file == RegFile::FpF ? FR : VR;
    if (!(slot_mask & bit))
      c.fail("operand of '" + std::string(op_name) + "' does not accept a " + first +
                 "-register here",
             start);
    return {Operand::Kind::Register, {file, uint8_t(idx)}, 0, 0.0};
  }

  // Numeric literal. The slot type decides int vs fp when both are possible;
  // a '.', exponent, 'inf' or 'nan' forces floating point.
  size_t p = start;
  if (p < c.text.size() && (c.text[p] == '+' || c.text[p] == '-')) ++p;
  bool fp_form = false;
  while (p < c.text.size()) {
    char ch = c.text[p];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      ++p;
    } else if (ch == '.' || ch == 'e' || ch == 'E') {
      fp_form = true;
      ++p;
      if (p < c.text.size() && (c.text[p] == '+' || c.text[p] == '-')) ++p;
    } else if (ident_char(ch)) {
      fp_form = true;  // inf / nan forms
      ++p;
    } else {
      break;
    }
  }
  if (p == start) c.fail("expected register or immediate", start);
  std::string_view tok = c.text.substr(start, p - start);

  bool want_fp = (slot_mask & FI) && (fp_form || !(slot_mask & II));
  if (want_fp) {
    double value = 0.0;
    const char* b = tok.data();
    auto res = std::from_chars(b, b + tok.size(), value);
    if (res.ec != std::errc() || res.ptr != b + tok.size())
      c.fail("bad floating immediate '" + std::string(tok) + "'", start);
    c.pos = p;
    return {Operand::Kind::Fp, {}, 0, value};
  }
  if (!(slot_mask & II))
    c.fail("operand of '" + std::string(op_name) + "' does not accept an immediate here", start);
  if (fp_form) c.fail("expected integer immediate, got '" + std::string(tok) + "'", start);
  int64_t value = 0;
  const char* b = tok.data();
  auto res = std::from_chars(b, b + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != b + tok.size())
    c.fail("bad integer immediate '" + std::string(tok) + "'", start);
  c.pos = p;
  return {Operand::Kind::Int, {}, value, 0.0};
}

Instruction parse_line(Cursor& c) {
  // Strip comment.
  size_t semi = c.text.find(';');
  if (semi != std::string_view::npos) c.text = c.text.substr(0, semi);

  // Phase tag, if present, terminates the operand list.
  uint8_t phase = 1;
  size_t hash = c.text.find('#');
  if (hash != std::string_view::npos) {
    std::string_view tag = c.text.substr(hash);
    constexpr std::string_view kPrefix = "#phase=";
    if (tag.substr(0, kPrefix.size()) != kPrefix)
      c.fail("expected '#phase=N' tag", hash);
    unsigned value = 0;
    const char* b = tag.data() + kPrefix.size();
    const char* e = tag.data() + tag.size();
    auto res = std::from_chars(b, e, value);
    if (res.ec != std::errc() || value < 1 || value > 8)
      c.fail("phase tag out of range (1..8)", hash);
    for (const char* q = res.ptr; q != e; ++q)
      if (*q != ' ' && *q != '\t') c.fail("trailing characters after phase tag", q - tag.data() + hash);
    c.text = c.text.substr(0, hash);
    phase = static_cast<uint8_t>(value);
  }

  c.skip_ws();
  size_t mstart = c.pos;
  while (c.pos < c.text.size() && ident_char(c.text[c.pos])) ++c.pos;
  if (c.pos == mstart) c.fail("expected instruction mnemonic", mstart);
  std::string_view mnemonic = c.text.substr(mstart, c.pos - mstart);

  Opcode op;
  try {
    op = opcode_from_name(mnemonic);
  } catch (const UnknownOpcode&) {
    c.fail("unknown opcode '" + std::string(mnemonic) + "'", mstart);
  }
  const OpInfo& oi = info(op);

  Instruction ins;
  ins.opcode = op;
  ins.phase = phase;

  unsigned count = 0;
  c.skip_ws();
  while (c.pos < c.text.size()) {
    if (count > 0) {
      if (c.text[c.pos] != ',') c.fail("expected ','", c.pos);
      ++c.pos;
    }
    if (count >= oi.max_ops)
      c.fail("too many operands for '" + std::string(oi.name) + "'", c.pos);
    Operand o = parse_operand(c, oi.slot[count], oi.name);
    if (count == 0)
      ins.dest = o;
    else
      ins.src[count - 1] = o;
    ++count;
    c.skip_ws();
  }
  if (count < oi.min_ops)
    c.fail("too few operands for '" + std::string(oi.name) + "' (got " + std::to_string(count) +
               ", need " + std::to_string(oi.min_ops) + ")",
           c.text.size());

  // cmp compares within one register family only.
  if (op == Opcode::cmp) {
    auto fam = [](const Operand& o) {
      uint8_t m = operand_mask_bit(o);
      return (m & (FR | FI)) ? 1 : 0;
    };
    if (fam(ins.src[0]) != fam(ins.src[1]))
      c.fail("cmp operands must both be integer or both floating", 0);
  }
  return ins;
}

}  // namespace

Instruction parse_instruction(std::string_view line) {
  Cursor c{line, 0, 1};
  // Reject lines that are only comments/whitespace.
  std::string_view body = line.substr(0, line.find(';'));
  size_t nonws = body.find_first_not_of(" \t");
  if (nonws == std::string_view::npos) c.fail("empty instruction", 0);
  return parse_line(c);
}

std::vector<Instruction> parse_program(std::string_view text) {
  std::vector<Instruction> out;
  size_t line_no = 1;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::string_view body = line.substr(0, line.find(';'));
    if (body.find_first_not_of(" \t\r") != std::string_view::npos) {
      Cursor c{line, 0, line_no};
      out.push_back(parse_line(c));
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
    ++line_no;
  }
  return out;
}

}  // namespace veclens
