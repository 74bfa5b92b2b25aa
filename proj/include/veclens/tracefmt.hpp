#pragma once

// VTRC binary trace format: bit-exact, fixed-width, little-endian.
//
//   header (16 bytes):
//     0  magic        "VTRC" (0x56 0x54 0x52 0x43)
//     4  version      u8  (= 1)
//     5  flags        u8  (bit 0: aggregated mode)
//     6  vl_max       u16
//     8  record_count u64 (0 = streaming/unknown)
//
//   event record (20 bytes), flags bit 0 clear:
//     0  seq          u64
//     8  phase_class  u8  (low nibble: phase 1..8; high nibble: class)
//     9  opcode       u8
//    10  vl           u16
//    12  cycles       u32
//    16  l1_misses    u16
//    18  l2_misses    u16
//
//   aggregated record (120 bytes), flags bit 0 set — one per phase, 15 u64:
//     phase, i_t, i_v, i_cfg, c_t, c_v, sum_vl, m_l1, m_l2, mem_ops,
//     class_counts[5]
//
// File size of an event trace is exactly 16 + 20*record_count.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "veclens/metrics.hpp"
#include "veclens/vvm.hpp"

namespace veclens {

inline constexpr uint8_t kTraceVersion = 1;
inline constexpr uint8_t kTraceFlagAggregated = 0x01;
inline constexpr size_t kTraceHeaderSize = 16;
inline constexpr size_t kTraceEventRecordSize = 20;
inline constexpr size_t kTraceAggRecordSize = 120;

struct TraceFileHeader {
  uint8_t version = kTraceVersion;
  uint8_t flags = 0;
  uint16_t vl_max = 0;
  uint64_t record_count = 0;
  bool aggregated() const { return (flags & kTraceFlagAggregated) != 0; }
};

struct NotATrace : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TruncatedTrace : std::runtime_error {
  uint64_t offset;  // byte offset at which the incomplete header/record starts
  explicit TruncatedTrace(uint64_t offset_)
      : std::runtime_error("trace truncated at offset " + std::to_string(offset_)), offset(offset_) {}
};
struct VersionUnsupported : std::runtime_error {
  uint8_t version;
  explicit VersionUnsupported(uint8_t v)
      : std::runtime_error("unsupported trace version " + std::to_string(v)), version(v) {}
};

class TraceWriter {
 public:
  // Writes the header immediately with record_count = 0; close() patches the
  // true count back in when the stream is seekable.
  TraceWriter(std::ostream& out, uint16_t vl_max, bool aggregated = false);
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(const TraceEvent& ev);                      // event mode only
  void write(unsigned phase, const RawCounters& rc);     // aggregated mode only
  uint64_t close();                                      // returns record count
  uint64_t count() const { return count_; }

 private:
  std::ostream& out_;
  bool aggregated_;
  bool closed_ = false;
  uint64_t count_ = 0;
};

class TraceReader {
 public:
  // Validates the header up front: NotATrace on bad magic, TruncatedTrace on
  // a short header, VersionUnsupported on a version other than 1.
  explicit TraceReader(std::istream& in);

  const TraceFileHeader& header() const { return header_; }

  // Streaming decode. A declared record_count bounds the read exactly; a
  // zero count reads to EOF. Either way a record cut short raises
  // TruncatedTrace with the offset where that record starts.
  std::optional<TraceEvent> next();                              // event mode only
  std::optional<std::pair<unsigned, RawCounters>> next_phase();  // aggregated mode only

 private:
  bool fill(char* buf, size_t want);

  std::istream& in_;
  TraceFileHeader header_;
  uint64_t offset_ = 0;
  uint64_t read_ = 0;
};

// Convenience wrappers over the streaming classes.
uint64_t write_trace(const std::vector<TraceEvent>& events, std::ostream& out, uint16_t vl_max);
std::vector<TraceEvent> read_trace(std::istream& in, TraceFileHeader* header_out = nullptr);

// CSV export. Event traces use the schema
//   seq,phase,class,opcode,vl,cycles,l1_misses,l2_misses
// (class and opcode as numeric codes); aggregated traces export their
// per-phase counters. Returns the data row count.
uint64_t export_csv(std::istream& trace, std::ostream& csv);

}  // namespace veclens
