#include "midi_reader.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace jianpu::testkit {

namespace {

class Cursor {
 public:
  Cursor(const std::vector<std::uint8_t>& b, std::size_t pos, std::size_t end) : b_(b), pos_(pos), end_(end) {}

  std::uint8_t u8() {
    if (pos_ >= end_) throw std::runtime_error("unexpected end of MIDI data");
    return b_[pos_++];
  }
  std::uint32_t be(int n) {
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | u8();
    return v;
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t c = u8();
      v = (v << 7) | (c & 0x7f);
      if (!(c & 0x80)) return v;
    }
    throw std::runtime_error("variable-length quantity longer than 4 bytes");
  }
  [[nodiscard]] std::size_t pos() const { return pos_; }
  [[nodiscard]] bool done() const { return pos_ >= end_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace

MidiFile read_midi(const std::vector<std::uint8_t>& bytes) {
  MidiFile out;
  Cursor head(bytes, 0, bytes.size());
  if (head.be(4) != 0x4d546864) throw std::runtime_error("missing MThd");
  if (head.be(4) != 6) throw std::runtime_error("MThd length must be 6");
  out.format = static_cast<int>(head.be(2));
  out.tracks = static_cast<int>(head.be(2));
  out.division = static_cast<int>(head.be(2));
  if (out.tracks != 1) throw std::runtime_error("expected a single track");
  if (head.be(4) != 0x4d54726b) throw std::runtime_error("missing MTrk");
  const std::uint32_t len = head.be(4);
  if (head.pos() + len != bytes.size()) throw std::runtime_error("track length does not match file size");

  Cursor c(bytes, head.pos(), bytes.size());
  long long tick = 0;
  std::uint8_t status = 0;
  std::map<int, std::pair<long long, int>> open;
  bool ended = false;
  while (!c.done()) {
    if (ended) throw std::runtime_error("data after end of track");
    tick += c.vlq();
    std::uint8_t first = c.u8();
    if (first == 0xff) {
      const std::uint8_t type = c.u8();
      const std::uint32_t n = c.vlq();
      std::string data;
      for (std::uint32_t i = 0; i < n; ++i) data.push_back(static_cast<char>(c.u8()));
      if (type == 0x51) {
        if (n != 3) throw std::runtime_error("tempo meta event must carry 3 bytes");
        out.tempo_ticks.push_back(tick);
        out.tempos.push_back((static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[0])) << 16) |
                             (static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[1])) << 8) |
                             static_cast<std::uint8_t>(data[2]));
      } else if (type == 0x05) {
        out.lyrics.emplace_back(tick, data);
      } else if (type == 0x2f) {
        ended = true;
        out.end_tick = tick;
      }
      continue;
    }
    if (first == 0xf0 || first == 0xf7) {
      const std::uint32_t n = c.vlq();
      for (std::uint32_t i = 0; i < n; ++i) c.u8();
      continue;
    }
    std::uint8_t d1;
    if (first & 0x80) {
      status = first;
      d1 = c.u8();
    } else {
      if (!status) throw std::runtime_error("running status without a status byte");
      d1 = first;
    }
    const int kind = status & 0xf0;
    const bool two = kind != 0xc0 && kind != 0xd0;
    const std::uint8_t d2 = two ? c.u8() : 0;
    if (kind == 0x90 && d2 > 0) {
      if (open.count(d1)) throw std::runtime_error("overlapping note-on for one key");
      open[d1] = {tick, d2};
    } else if (kind == 0x80 || (kind == 0x90 && d2 == 0)) {
      const auto it = open.find(d1);
      if (it == open.end()) throw std::runtime_error("note-off without note-on");
      out.notes.push_back({d1, it->second.second, it->second.first, tick});
      open.erase(it);
    }
  }
  if (!ended) throw std::runtime_error("missing end-of-track");
  if (!open.empty()) throw std::runtime_error("notes left sounding at end of track");
  std::stable_sort(out.notes.begin(), out.notes.end(),
                   [](const MidiNote& a, const MidiNote& b) { return a.on_tick < b.on_tick; });
  return out;
}

}  // namespace jianpu::testkit
