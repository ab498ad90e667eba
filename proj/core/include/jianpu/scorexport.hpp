#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "jianpu/semantics.hpp"

namespace jianpu {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExportOptions {
  int divisions = 480;
  double tempo_bpm = 100.0;
  std::string part_name = "Melody";
  bool midi_lyrics = false;
  int velocity = 80;
};

/// MusicXML 3.1 score-partwise document with a single part.
std::string to_musicxml(const ScoreGraph& score, const ExportOptions& opts = {});

/// Standard MIDI File, format 0, one track. Tied notes are merged into one
/// sustained note and rests become gaps.
std::vector<std::uint8_t> to_midi(const ScoreGraph& score, const ExportOptions& opts = {});

void write_text(const std::filesystem::path& path, const std::string& text);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace jianpu
