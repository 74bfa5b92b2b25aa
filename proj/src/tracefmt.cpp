#include "veclens/tracefmt.hpp"

#include <array>
#include <cstring>
#include <istream>
#include <ostream>

namespace veclens {

namespace {

constexpr char kMagic[4] = {'V', 'T', 'R', 'C'};

void put_u16(char* p, uint16_t v) {
  p[0] = static_cast<char>(v & 0xff);
  p[1] = static_cast<char>(v >> 8);
}
void put_u32(char* p, uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}
void put_u64(char* p, uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<char>((v >> (8 * i)) & 0xff);
}
uint16_t get_u16(const char* p) {
  auto b = reinterpret_cast<const unsigned char*>(p);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t get_u32(const char* p) {
  auto b = reinterpret_cast<const unsigned char*>(p);
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
uint64_t get_u64(const char* p) {
  auto b = reinterpret_cast<const unsigned char*>(p);
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

void encode_header(char* buf, const TraceFileHeader& h) {
  std::memcpy(buf, kMagic, 4);
  buf[4] = static_cast<char>(h.version);
  buf[5] = static_cast<char>(h.flags);
  put_u16(buf + 6, h.vl_max);
  put_u64(buf + 8, h.record_count);
}

}  // namespace

TraceWriter::TraceWriter(std::ostream& out, uint16_t vl_max, bool aggregated)
    : out_(out), aggregated_(aggregated) {
  TraceFileHeader h;
  h.flags = aggregated ? kTraceFlagAggregated : 0;
  h.vl_max = vl_max;
  char buf[kTraceHeaderSize];
  encode_header(buf, h);
  out_.write(buf, sizeof buf);
}

void TraceWriter::write(const TraceEvent& ev) {
  if (aggregated_) throw std::logic_error("event record written to an aggregated trace");
  char buf[kTraceEventRecordSize];
  put_u64(buf, ev.seq);
  buf[8] = static_cast<char>((ev.phase & 0x0f) | (static_cast<uint8_t>(ev.cls) << 4));
  buf[9] = static_cast<char>(ev.opcode);
  put_u16(buf + 10, ev.vl);
  put_u32(buf + 12, ev.cycles);
  put_u16(buf + 16, ev.l1_misses);
  put_u16(buf + 18, ev.l2_misses);
  out_.write(buf, sizeof buf);
  count_ += 1;
}

void TraceWriter::write(unsigned phase, const RawCounters& rc) {
  if (!aggregated_) throw std::logic_error("aggregated record written to an event trace");
  char buf[kTraceAggRecordSize];
  uint64_t fields[15] = {phase,    rc.i_t,  rc.i_v,  rc.i_cfg, rc.c_t,
                         rc.c_v,   rc.sum_vl, rc.m_l1, rc.m_l2,  rc.mem_ops,
                         rc.class_counts[0], rc.class_counts[1], rc.class_counts[2],
                         rc.class_counts[3], rc.class_counts[4]};
  for (int i = 0; i < 15; ++i) put_u64(buf + 8 * i, fields[i]);
  out_.write(buf, sizeof buf);
  count_ += 1;
}

uint64_t TraceWriter::close() {
  if (closed_) return count_;
  closed_ = true;
  out_.flush();
  std::ostream::pos_type end = out_.tellp();
  if (end != std::ostream::pos_type(-1)) {
    char buf[8];
    put_u64(buf, count_);
    out_.seekp(8);
    out_.write(buf, sizeof buf);
    out_.seekp(end);
    out_.flush();
  }
  return count_;
}

TraceReader::TraceReader(std::istream& in) : in_(in) {
  char buf[kTraceHeaderSize];
  in_.read(buf, 4);
  if (in_.gcount() < 4 || std::memcmp(buf, kMagic, 4) != 0) throw NotATrace("bad trace magic");
  in_.read(buf + 4, kTraceHeaderSize - 4);
  if (static_cast<size_t>(in_.gcount()) < kTraceHeaderSize - 4) throw TruncatedTrace(0);
  header_.version = static_cast<uint8_t>(buf[4]);
  header_.flags = static_cast<uint8_t>(buf[5]);
  header_.vl_max = get_u16(buf + 6);
  header_.record_count = get_u64(buf + 8);
  if (header_.version != kTraceVersion) throw VersionUnsupported(header_.version);
  offset_ = kTraceHeaderSize;
}

bool TraceReader::fill(char* buf, size_t want) {
  if (header_.record_count != 0 && read_ == header_.record_count) return false;
  in_.read(buf, static_cast<std::streamsize>(want));
  size_t got = static_cast<size_t>(in_.gcount());
  if (got == 0) {
    if (header_.record_count != 0) throw TruncatedTrace(offset_);  // count promised more
    return false;
  }
  if (got < want) throw TruncatedTrace(offset_);
  offset_ += want;
  read_ += 1;
  return true;
}

std::optional<TraceEvent> TraceReader::next() {
  if (header_.aggregated()) throw std::logic_error("event read from an aggregated trace");
  char buf[kTraceEventRecordSize];
  if (!fill(buf, sizeof buf)) return std::nullopt;
  TraceEvent ev;
  ev.seq = get_u64(buf);
  uint8_t pc = static_cast<uint8_t>(buf[8]);
  ev.phase = pc & 0x0f;
  ev.cls = static_cast<InstrClass>(pc >> 4);
  ev.opcode = static_cast<Opcode>(static_cast<uint8_t>(buf[9]));
  ev.vl = get_u16(buf + 10);
  ev.cycles = get_u32(buf + 12);
  ev.l1_misses = get_u16(buf + 16);
  ev.l2_misses = get_u16(buf + 18);
  return ev;
}

std::optional<std::pair<unsigned, RawCounters>> TraceReader::next_phase() {
  if (!header_.aggregated()) throw std::logic_error("aggregated read from an event trace");
  char buf[kTraceAggRecordSize];
  if (!fill(buf, sizeof buf)) return std::nullopt;
  uint64_t f[15];
  for (int i = 0; i < 15; ++i) f[i] = get_u64(buf + 8 * i);
  RawCounters rc;
  rc.i_t = f[1];
  rc.i_v = f[2];
  rc.i_cfg = f[3];
  rc.c_t = f[4];
  rc.c_v = f[5];
  rc.sum_vl = f[6];
  rc.m_l1 = f[7];
  rc.m_l2 = f[8];
  rc.mem_ops = f[9];
  for (int k = 0; k < 5; ++k) rc.class_counts[static_cast<size_t>(k)] = f[10 + k];
  return std::make_pair(static_cast<unsigned>(f[0]), rc);
}

uint64_t write_trace(const std::vector<TraceEvent>& events, std::ostream& out, uint16_t vl_max) {
  TraceWriter w(out, vl_max);
  for (const auto& ev : events) w.write(ev);
  return w.close();
}

std::vector<TraceEvent> read_trace(std::istream& in, TraceFileHeader* header_out) {
  TraceReader r(in);
  if (header_out) *header_out = r.header();
  std::vector<TraceEvent> events;
  while (auto ev = r.next()) events.push_back(*ev);
  return events;
}

uint64_t export_csv(std::istream& trace, std::ostream& csv) {
  TraceReader r(trace);
  uint64_t rows = 0;
  if (r.header().aggregated()) {
    csv << "phase,i_t,i_v,i_cfg,c_t,c_v,sum_vl,m_l1,m_l2,mem_ops,"
           "n_scalar,n_vconfig,n_varith,n_vmem,n_vlane\n";
    while (auto rec = r.next_phase()) {
      const auto& [phase, rc] = *rec;
      csv << phase << ',' << rc.i_t << ',' << rc.i_v << ',' << rc.i_cfg << ',' << rc.c_t << ','
          << rc.c_v << ',' << rc.sum_vl << ',' << rc.m_l1 << ',' << rc.m_l2 << ',' << rc.mem_ops;
      for (uint64_t c : rc.class_counts) csv << ',' << c;
      csv << '\n';
      rows += 1;
    }
    return rows;
  }
  csv << "seq,phase,class,opcode,vl,cycles,l1_misses,l2_misses\n";
  while (auto ev = r.next()) {
    csv << ev->seq << ',' << unsigned(ev->phase) << ',' << unsigned(static_cast<uint8_t>(ev->cls))
        << ',' << unsigned(static_cast<uint8_t>(ev->opcode)) << ',' << ev->vl << ',' << ev->cycles
        << ',' << ev->l1_misses << ',' << ev->l2_misses << '\n';
    rows += 1;
  }
  return rows;
}

}  // namespace veclens
