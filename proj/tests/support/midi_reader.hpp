#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace jianpu::testkit {

struct MidiNote {
  int key = 0;
  int velocity = 0;
  long long on_tick = 0;
  long long off_tick = 0;
};

struct MidiFile {
  int format = -1;
  int tracks = 0;
  int division = 0;
  std::vector<long long> tempo_ticks;
  std::vector<std::uint32_t> tempos;  // microseconds per quarter
  std::vector<MidiNote> notes;        // ordered by note-on
  std::vector<std::pair<long long, std::string>> lyrics;
  long long end_tick = 0;             // tick of the end-of-track event
};

/// Reads a single-track SMF (big-endian chunks, running status allowed).
/// Throws std::runtime_error on malformed input.
MidiFile read_midi(const std::vector<std::uint8_t>& bytes);

}  // namespace jianpu::testkit
