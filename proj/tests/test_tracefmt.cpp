#include "veclens/tracefmt.hpp"

#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"

using namespace veclens;

namespace {

std::vector<TraceEvent> random_events(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TraceEvent> out;
  out.reserve(n);
  const auto& ops = opcode_set();
  for (size_t i = 0; i < n; ++i) {
    TraceEvent ev;
    ev.seq = i;
    ev.phase = static_cast<uint8_t>(1 + rng() % 8);
    ev.opcode = ops[rng() % ops.size()];
    ev.cls = classify(ev.opcode);
    ev.vl = static_cast<uint16_t>(rng() % 257);
    ev.cycles = static_cast<uint32_t>(rng() % 100000);
    ev.l1_misses = static_cast<uint16_t>(rng() % 64);
    ev.l2_misses = static_cast<uint16_t>(ev.l1_misses ? rng() % ev.l1_misses : 0);
    out.push_back(ev);
  }
  return out;
}

}  // namespace

TEST_CASE("binary round-trip is the identity") {
  auto events = random_events(500, 123);
  std::stringstream ss;
  uint64_t n = write_trace(events, ss, 256);
  CHECK(n == events.size());

  TraceFileHeader hdr;
  auto back = read_trace(ss, &hdr);
  CHECK(hdr.vl_max == 256);
  CHECK(hdr.version == kTraceVersion);
  CHECK(hdr.record_count == events.size());
  CHECK_FALSE(hdr.aggregated());
  CHECK(back == events);
}

TEST_CASE("file size is exactly 16 + 20n") {
  for (size_t n : {size_t(0), size_t(1), size_t(3), size_t(250)}) {
    auto events = random_events(n, n + 7);
    std::stringstream ss;
    write_trace(events, ss, 128);
    CHECK(ss.str().size() == 16 + 20 * n);
  }
}

TEST_CASE("writes are byte-deterministic") {
  auto events = random_events(64, 99);
  std::stringstream a, b;
  write_trace(events, a, 64);
  write_trace(events, b, 64);
  CHECK(a.str() == b.str());
}

TEST_CASE("writer patches the record count on close") {
  std::stringstream ss;
  TraceWriter w(ss, 256);
  auto events = random_events(5, 1);
  for (const auto& ev : events) w.write(ev);
  // before close the header still holds 0
  std::string partial = ss.str();
  CHECK(partial[8] == 0);
  CHECK(w.close() == 5);
  std::string full = ss.str();
  CHECK(static_cast<unsigned char>(full[8]) == 5);
  CHECK(full.size() == 16 + 20 * 5);
}

TEST_CASE("a zero record count means read to end of stream") {
  auto events = random_events(7, 3);
  std::stringstream ss;
  TraceWriter w(ss, 16);
  for (const auto& ev : events) w.write(ev);
  // no close(): header keeps record_count = 0
  auto back = read_trace(ss);
  CHECK(back == events);
}

TEST_CASE("a declared record count bounds the read") {
  auto events = random_events(4, 5);
  std::stringstream ss;
  write_trace(events, ss, 16);
  ss.seekp(0, std::ios::end);
  ss.write("extra trailing bytes....", 20);  // one spurious record's worth
  ss.seekg(0);
  auto back = read_trace(ss);
  CHECK(back.size() == 4);  // reader stops at the declared boundary
}

TEST_CASE("corrupt or foreign files are rejected") {
  SUBCASE("wrong magic") {
    std::stringstream ss("PNG\x89 not a trace at all");
    CHECK_THROWS_AS(TraceReader r(ss), NotATrace);
  }
  SUBCASE("empty stream") {
    std::stringstream ss;
    CHECK_THROWS_AS(TraceReader r(ss), NotATrace);
  }
  SUBCASE("short header") {
    std::stringstream ss;
    ss.write("VTRC\x01\x00", 6);
    ss.seekg(0);
    try {
      TraceReader r(ss);
      FAIL("expected TruncatedTrace");
    } catch (const TruncatedTrace& t) {
      CHECK(t.offset == 0);
    }
  }
  SUBCASE("future version") {
    auto events = random_events(1, 9);
    std::stringstream ss;
    write_trace(events, ss, 8);
    std::string bytes = ss.str();
    bytes[4] = 9;
    std::stringstream mod(bytes);
    try {
      TraceReader r(mod);
      FAIL("expected VersionUnsupported");
    } catch (const VersionUnsupported& v) {
      CHECK(v.version == 9);
    }
  }
}

TEST_CASE("truncation is detected at the exact record offset") {
  auto events = random_events(3, 21);
  std::stringstream ss;
  write_trace(events, ss, 8);
  std::string bytes = ss.str();

  for (size_t cut : {size_t(16 + 20 + 1), size_t(16 + 2 * 20 + 19)}) {
    std::stringstream mod(bytes.substr(0, cut));
    TraceReader r(mod);
    CHECK(r.next().has_value());  // first record is whole in both cases
    uint64_t expect_offset = 16 + 20 * ((cut - 16) / 20);
    try {
      while (r.next()) {
      }
      FAIL("expected TruncatedTrace");
    } catch (const TruncatedTrace& t) {
      CHECK(t.offset == expect_offset);
    }
  }

  SUBCASE("declared count promises more records than the file holds") {
    std::string clipped = bytes.substr(0, 16 + 20);  // count says 3, one present
    std::stringstream mod(clipped);
    TraceReader r(mod);
    CHECK(r.next().has_value());
    CHECK_THROWS_AS(
        [&] {
          while (r.next()) {
          }
        }(),
        TruncatedTrace);
  }
}

TEST_CASE("aggregated traces round-trip per-phase counters") {
  std::stringstream ss;
  TraceWriter w(ss, 240, /*aggregated=*/true);
  std::array<RawCounters, 3> rcs{};
  for (unsigned p = 0; p < 3; ++p) {
    rcs[p].i_t = 100 * (p + 1);
    rcs[p].i_v = 40 * (p + 1);
    rcs[p].i_cfg = p;
    rcs[p].c_t = 1000 + p;
    rcs[p].c_v = 700 + p;
    rcs[p].sum_vl = 9600;
    rcs[p].m_l1 = 5;
    rcs[p].m_l2 = 2;
    rcs[p].mem_ops = 33;
    for (size_t k = 0; k < kInstrClassCount; ++k) rcs[p].class_counts[k] = 10 * p + k;
    w.write(p + 1, rcs[p]);
  }
  CHECK(w.close() == 3);
  CHECK(ss.str().size() == 16 + 3 * 120);

  TraceReader r(ss);
  CHECK(r.header().aggregated());
  CHECK(r.header().vl_max == 240);
  for (unsigned p = 0; p < 3; ++p) {
    auto rec = r.next_phase();
    REQUIRE(rec.has_value());
    CHECK(rec->first == p + 1);
    CHECK(rec->second == rcs[p]);
  }
  CHECK_FALSE(r.next_phase().has_value());

  SUBCASE("mode confusion is a programming error") {
    std::stringstream again(ss.str());
    TraceReader r2(again);
    CHECK_THROWS_AS(r2.next(), std::logic_error);
  }
}

TEST_CASE("csv export") {
  SUBCASE("event schema with numeric class and opcode") {
    auto events = random_events(3, 2);
    std::stringstream trace, csv;
    write_trace(events, trace, 64);
    CHECK(export_csv(trace, csv) == 3);
    std::string text = csv.str();
    CHECK(text.substr(0, text.find('\n')) ==
          "seq,phase,class,opcode,vl,cycles,l1_misses,l2_misses");
    size_t lines = 0;
    for (char ch : text)
      if (ch == '\n') ++lines;
    CHECK(lines == 4);  // header + 3 rows, trailing newline

    // reimport: parse the rows back and compare against the source events
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    for (const TraceEvent& ev : events) {
      REQUIRE(std::getline(in, line));
      unsigned long long f[8];
      CHECK(std::sscanf(line.c_str(), "%llu,%llu,%llu,%llu,%llu,%llu,%llu,%llu", &f[0], &f[1],
                        &f[2], &f[3], &f[4], &f[5], &f[6], &f[7]) == 8);
      CHECK(f[0] == ev.seq);
      CHECK(f[1] == ev.phase);
      CHECK(f[2] == static_cast<uint8_t>(ev.cls));
      CHECK(f[3] == static_cast<uint8_t>(ev.opcode));
      CHECK(f[4] == ev.vl);
      CHECK(f[5] == ev.cycles);
      CHECK(f[6] == ev.l1_misses);
      CHECK(f[7] == ev.l2_misses);
    }
  }
  SUBCASE("empty trace exports a lone header") {
    std::stringstream trace, csv;
    write_trace({}, trace, 64);
    CHECK(export_csv(trace, csv) == 0);
    CHECK(csv.str() == "seq,phase,class,opcode,vl,cycles,l1_misses,l2_misses\n");
  }
  SUBCASE("aggregated traces export counters") {
    std::stringstream trace, csv;
    TraceWriter w(trace, 128, true);
    RawCounters rc;
    rc.i_t = 12;
    rc.c_t = 99;
    w.write(4, rc);
    w.close();
    export_csv(trace, csv);
    CHECK(csv.str().find("phase,i_t,") == 0);
    CHECK(csv.str().find("\n4,12,") != std::string::npos);
  }
}
