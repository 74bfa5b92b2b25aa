#pragma once

// Long-vector mini-ISA: opcode vocabulary, instruction representation and the
// textual assembly round-trip (parse/format). The set is closed; everything
// the emulator, cost model and kernel emitters touch goes through these types.

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace veclens {

enum class Opcode : uint8_t {
  // scalar
  add,
  mul,
  load,
  store,
  branch,
  cmp,
  fadd,
  fmul,
  fdiv,
  fmadd_unfused,
  // vector configuration
  vsetvl,
  // vector arithmetic
  vfadd,
  vfsub,
  vfmul,
  vfdiv,
  vfmacc,
  // vector memory
  vload_unit,
  vload_strided,
  vload_indexed,
  vstore_unit,
  vstore_strided,
  vstore_indexed,
  // vector control / lane manipulation
  vmv,
  vbroadcast,
  vslide,
};

inline constexpr size_t kOpcodeCount = 25;

// Wire and CSV encodings use the enumeration order of this enum.
enum class InstrClass : uint8_t {
  Scalar = 0,
  VectorConfig = 1,
  VectorArithmetic = 2,
  VectorMemory = 3,
  VectorControlLane = 4,
};

inline constexpr size_t kInstrClassCount = 5;

enum class MemMode : uint8_t { None, UnitStride, Strided, Indexed };

enum class RegFile : uint8_t { IntX, FpF, Vec };

struct Reg {
  RegFile file = RegFile::IntX;
  uint8_t index = 0;  // < 32
  bool operator==(const Reg&) const = default;
};

// Instruction operand: register, integer immediate or floating immediate.
// Floating immediates compare bitwise so that parse/format identity is exact
// even for values like -0.0.
struct Operand {
  enum class Kind : uint8_t { None, Register, Int, Fp };
  Kind kind = Kind::None;
  Reg reg{};
  int64_t ival = 0;
  double fval = 0.0;

  bool operator==(const Operand& o) const;
};

Operand xreg(unsigned index);
Operand freg(unsigned index);
Operand vreg(unsigned index);
Operand imm(int64_t value);
Operand fimm(double value);

struct Instruction {
  Opcode opcode = Opcode::add;
  uint8_t phase = 1;  // 1..8, mini-app phase tag
  Operand dest;       // first textual operand; the data source for stores
  std::array<Operand, 3> src{};

  bool operator==(const Instruction&) const = default;
};

struct UnknownOpcode : std::runtime_error {
  explicit UnknownOpcode(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  size_t line;    // 1-based; always 1 for single-line parses
  size_t column;  // 1-based byte offset into the line
  ParseError(std::string msg, size_t line_, size_t col)
      : std::runtime_error(std::move(msg)), line(line_), column(col) {}
};

// Closed opcode set in enumeration order.
const std::vector<Opcode>& opcode_set();

// Total over the set; throws UnknownOpcode for out-of-range raw values so
// that decoded traces cannot smuggle in unknown opcodes.
InstrClass classify(Opcode op);

bool is_vector(InstrClass cls);  // arithmetic, memory or control-lane

// Addressing mode implied by the opcode. Scalar load/store report UnitStride
// (a single element access); everything non-memory reports None.
MemMode mem_mode(Opcode op);
bool is_memory_op(Opcode op);

std::string_view opcode_name(Opcode op);
Opcode opcode_from_name(std::string_view name);  // throws UnknownOpcode
std::string_view class_name(InstrClass cls);

// Canonical text form: "opcode dest, src1[, src2[, src3]] #phase=N".
// parse_instruction(format_instruction(i)) == i for any valid instruction.
std::string format_instruction(const Instruction& ins);
Instruction parse_instruction(std::string_view line);

// Multi-line program text: one instruction per line, ';' starts a comment,
// blank lines are skipped. Errors carry the 1-based source line.
std::vector<Instruction> parse_program(std::string_view text);

}  // namespace veclens
