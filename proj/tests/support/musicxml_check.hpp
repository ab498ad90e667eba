#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace jianpu::testkit {

/// Structural validation against the partwise subset schema: element
/// sequences with occurrence bounds, attribute presence and values, text
/// types, empty elements, part ids declared in the part list and measure
/// numbers counting up from 1. Returns one message per violation.
std::vector<std::string> validate_musicxml(const std::string& xml, const nlohmann::json& schema);

nlohmann::json load_musicxml_schema(const std::filesystem::path& path);

struct XmlNote {
  bool rest = false;
  char step = 'C';
  int alter = 0;
  int octave = 4;
  long long duration = 0;
  bool tie_start = false;
  bool tie_stop = false;
  bool slur_start = false;
  bool slur_stop = false;
  std::optional<std::string> lyric;
  int measure = 0;

  /// MIDI key number of a pitched note.
  [[nodiscard]] int midi_key() const;
};

struct XmlScore {
  int divisions = 0;
  int measures = 0;
  std::vector<XmlNote> notes;
};

/// Minimal reader for documents written by to_musicxml.
XmlScore read_musicxml(const std::string& xml);

}  // namespace jianpu::testkit
