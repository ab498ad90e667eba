#include "jianpu/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace jianpu {

namespace fs = std::filesystem;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Portable draws on top of mt19937_64 (the std distributions are not
// specified bit-exactly across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(eng_() % static_cast<std::uint64_t>(n)); }
  bool chance(double p) { return uniform() < p; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    while (u <= 0.0) u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

class Canvas {
 public:
  Canvas(int h, int w) : cov(h, w, 0.0f) {}

  void put(int y, int x, double c) {
    if (!cov.contains(y, x) || c <= 0.0) return;
    float& p = cov(y, x);
    p = std::max(p, static_cast<float>(std::min(c, 1.0)));
  }

  // Fractional coverage of [x0,x1) x [y0,y1).
  void rect(double x0, double y0, double x1, double y1) {
    for (int y = static_cast<int>(std::floor(y0)); y < static_cast<int>(std::ceil(y1)); ++y) {
      const double cy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
      for (int x = static_cast<int>(std::floor(x0)); x < static_cast<int>(std::ceil(x1)); ++x) {
        const double cx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
        put(y, x, cx * cy);
      }
    }
  }

  void disc(double cx, double cy, double r) {
    for (int y = static_cast<int>(cy - r - 1); y <= static_cast<int>(cy + r + 1); ++y) {
      for (int x = static_cast<int>(cx - r - 1); x <= static_cast<int>(cx + r + 1); ++x) {
        const double d = std::hypot(x + 0.5 - cx, y + 0.5 - cy);
        put(y, x, std::clamp(r + 0.5 - d, 0.0, 1.0));
      }
    }
  }

  void stamp(const GrayImage& img, int x0, int y0) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) put(y0 + y, x0 + x, img.at(y, x));
    }
  }

  // Parabolic arc from (xa, yb) to (xb, yb) peaking `rise` px higher.
  void arc(double xa, double xb, double yb, double rise, double thickness) {
    const int n = std::max(16, static_cast<int>(xb - xa));
    std::vector<PointF> pts;
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      pts.push_back({xa + t * (xb - xa), yb - 4.0 * rise * t * (1.0 - t)});
    }
    const double half = 0.5 * thickness;
    for (int y = static_cast<int>(yb - rise - half - 2); y <= static_cast<int>(yb + half + 2); ++y) {
      for (int x = static_cast<int>(xa - half - 2); x <= static_cast<int>(xb + half + 2); ++x) {
        double best = 1e9;
        for (int i = 0; i < n; ++i) {
          const PointF& p = pts[i];
          const PointF& q = pts[i + 1];
          const double vx = q.x - p.x, vy = q.y - p.y;
          const double wx = x + 0.5 - p.x, wy = y + 0.5 - p.y;
          const double t = std::clamp((vx * wx + vy * wy) / (vx * vx + vy * vy), 0.0, 1.0);
          best = std::min(best, std::hypot(wx - t * vx, wy - t * vy));
        }
        put(y, x, std::clamp(half + 0.5 - best, 0.0, 1.0));
      }
    }
  }

  FloatRaster cov;
};

// One written event: a digit, optional dashes trailing it.
struct Slot {
  int digit = 1;
  int octave = 0;
  int underlines = 0;
  int dashes = 0;
  bool dotted = false;
  Rational duration{1};
  int beam = -1;  // beam group id within the measure
};

// Measure content as beat-sized figures.
std::vector<Slot> compose_measure(Rng& rng, int beats) {
  std::vector<Slot> out;
  int beam = 0;
  int left = beats;
  auto note = [&](int under, bool dotted, Rational dur, int dashes = 0) {
    Slot s;
    s.underlines = under;
    s.dotted = dotted;
    s.duration = dur;
    s.dashes = dashes;
    s.beam = under > 0 ? beam : -1;
    out.push_back(s);
  };
  while (left > 0) {
    const int pick = rng.below(100);
    if (left >= 4 && pick < 6) {
      note(0, false, Rational(4), 3);
      left -= 4;
    } else if (left >= 3 && pick < 14) {
      note(0, false, Rational(3), 2);
      left -= 3;
    } else if (left >= 2 && pick < 28) {
      note(0, false, Rational(2), 1);
      left -= 2;
    } else if (left >= 2 && pick < 40) {
      note(0, true, Rational(3, 2));
      note(1, false, Rational(1, 2));
      ++beam;
      left -= 2;
    } else if (pick < 62) {
      note(0, false, Rational(1));
      left -= 1;
    } else if (pick < 78) {
      note(1, false, Rational(1, 2));
      note(1, false, Rational(1, 2));
      ++beam;
      left -= 1;
    } else if (pick < 86) {
      note(1, true, Rational(3, 4));
      note(2, false, Rational(1, 4));
      ++beam;
      left -= 1;
    } else if (pick < 93) {
      note(1, false, Rational(1, 2));
      note(2, false, Rational(1, 4));
      note(2, false, Rational(1, 4));
      ++beam;
      left -= 1;
    } else {
      for (int i = 0; i < 4; ++i) note(2, false, Rational(1, 4));
      ++beam;
      left -= 1;
    }
  }
  for (auto& s : out) {
    const bool can_rest = s.dashes == 0 && !s.dotted;
    if (can_rest && rng.chance(0.08)) {
      s.digit = 0;
    } else {
      s.digit = 1 + rng.below(7);
      const int r = rng.below(100);
      s.octave = r < 12 ? -1 : (r < 24 ? 1 : 0);
    }
  }
  return out;
}

constexpr int kMajor[7] = {0, 2, 4, 5, 7, 9, 11};

struct Placed {
  Slot slot;
  BoundingBox box;  // digit ink box on the page
  PointF center;
  int system = 0;
  int measure = 0;
};

}  // namespace

SynthAssets load_synth_assets(const AssetPaths& paths, std::size_t charset_limit) {
  SynthAssets a;
  for (int d = 0; d <= 7; ++d) a.digits[d] = load_image(paths.templates_dir() / "digits" / fmt::format("{}.png", d));
  a.glyphs = atlas_glyph_source(paths.atlas_dir());
  const fs::path cs = paths.charset_file();
  if (fs::exists(cs)) a.charset = load_charset(cs, charset_limit);
  return a;
}

SynthPage render_page(const SynthAssets& assets, const SynthOptions& opts, std::uint64_t seed, const std::string& id) {
  if (assets.digits.size() != 8) throw std::invalid_argument("synth needs digit glyphs 0..7");
  Rng rng(seed);
  // Common ink band across the digit set.
  int ink_top = assets.digits.at(1).height(), ink_bottom = 0;
  for (const auto& [d, g] : assets.digits) {
    const BoundingBox b = ink_bounds(g, 0.5f);
    ink_top = std::min(ink_top, b.y0);
    ink_bottom = std::max(ink_bottom, b.y1);
  }
  const double h = ink_bottom - ink_top;
  const double slot_w = std::round(1.6 * h);
  const double system_pitch = std::round((opts.lyrics ? 5.0 : 4.2) * h);
  const int beats = 2 + rng.below(3);

  SynthPage page;
  page.id = id;
  page.digit_height = h;
  page.truth.key_root = opts.key_root;
  page.truth.base_octave = opts.base_octave;
  page.truth.beats_per_measure = Rational(beats);
  page.truth.title = id;

  const int height = static_cast<int>(2 * opts.margin + (opts.systems - 1) * system_pitch + 3.5 * h);
  Canvas canvas(height, opts.width);
  std::vector<Placed> placed;
  std::vector<std::vector<std::pair<double, int>>> barlines(opts.systems);  // (x, measure)
  std::vector<int> measures_in_system(opts.systems, 0);

  const BoundingBox nominal = ink_bounds(assets.digits.at(5), 0.5f);
  const double dash_half = 0.4 * nominal.width();
  auto place_digit = [&](Placed& p) {
    const GrayImage& g = assets.digits.at(p.slot.digit);
    const BoundingBox gb = ink_bounds(g, 0.5f);
    const int x0 = static_cast<int>(p.center.x - 0.5 * (gb.x0 + gb.x1));
    const int y0 = static_cast<int>(std::round(p.center.y - 0.5 * (ink_top + ink_bottom)));
    canvas.stamp(g, x0, y0);
    p.box = {x0 + gb.x0, y0 + gb.y0, x0 + gb.x1, y0 + gb.y1};
    p.center = {p.box.center_x(), p.box.center_y()};
  };

  for (int s = 0; s < opts.systems; ++s) {
    const double cy = opts.margin + 1.5 * h + s * system_pitch;
    double cursor = opts.margin;
    int m = 0;
    while (true) {
      auto content = compose_measure(rng, beats);
      double need = 0.5 * slot_w;
      for (const auto& sl : content) need += slot_w * (1 + sl.dashes);
      if (cursor + need > opts.width - opts.margin) break;
      for (const auto& sl : content) {
        Placed p;
        p.slot = sl;
        p.center = {std::round(cursor + 0.5 * slot_w), cy};
        p.system = s;
        p.measure = m;
        placed.push_back(p);
        cursor += slot_w;
        for (int k = 0; k < sl.dashes; ++k) {
          canvas.rect(cursor + 0.5 * slot_w - dash_half, cy - 1.25, cursor + 0.5 * slot_w + dash_half, cy + 1.25);
          cursor += slot_w;
        }
      }
      const double bx = std::round(cursor + 0.25 * slot_w);
      canvas.rect(bx - 1.0, cy - 0.8 * h, bx + 1.0, cy + 0.8 * h);
      barlines[s].push_back({bx, m});
      cursor += 0.5 * slot_w;
      ++m;
    }
    measures_in_system[s] = m;
  }

  // Ties between adjacent equal notes, slurs over short unequal runs. Tie
  // partners are made equal here, before any glyph is drawn.
  struct Arc {
    std::size_t i, j;
  };
  std::vector<Arc> arcs;
  std::vector<std::optional<int>> slur(placed.size());
  std::vector<bool> tie(placed.size(), false), lyric_ok(placed.size(), true), used(placed.size(), false);
  int next_slur = 0;
  auto pitch_of = [&](const Slot& sl) { return sl.octave * 12 + kMajor[sl.digit - 1]; };
  if (opts.arcs) {
    for (std::size_t i = 0; i + 1 < placed.size(); ++i) {
      if (used[i] || placed[i].slot.digit == 0 || !rng.chance(0.2)) continue;
      const int len = 1 + rng.below(2);  // arc covers i..i+len
      const std::size_t j = i + len;
      if (j >= placed.size() || placed[j].system != placed[i].system) continue;
      bool ok = true;
      for (std::size_t k = i; k <= j; ++k) ok = ok && !used[k] && placed[k].slot.digit != 0;
      if (!ok) continue;
      if (len == 1 && rng.chance(0.5)) {
        placed[j].slot.digit = placed[i].slot.digit;
        placed[j].slot.octave = placed[i].slot.octave;
      }
      const bool equal = pitch_of(placed[i].slot) == pitch_of(placed[j].slot);
      if (len == 1 && equal) {
        tie[i] = true;
        lyric_ok[j] = false;
      } else if (!equal) {
        const int g = next_slur++;
        for (std::size_t k = i; k <= j; ++k) {
          slur[k] = g;
          if (k > i) lyric_ok[k] = false;
        }
      } else {
        continue;
      }
      for (std::size_t k = i; k <= j; ++k) used[k] = true;
      arcs.push_back({i, j});
    }
  }

  for (auto& p : placed) place_digit(p);

  // Underlines, beamed within a measure.
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const Placed& p = placed[i];
    for (int k = 0; k < p.slot.underlines; ++k) {
      double x0 = p.box.x0 - 1, x1 = p.box.x1 + 1;
      // Extend to the next note when it shares the beam at this level.
      if (i + 1 < placed.size()) {
        const Placed& q = placed[i + 1];
        if (q.system == p.system && q.measure == p.measure && q.slot.beam == p.slot.beam &&
            q.slot.underlines > k && p.slot.beam >= 0) {
          x1 = q.box.x0 - 1;
        }
      }
      const double top = p.box.y1 + 3 + 5 * k;
      canvas.rect(x0, top, x1, top + 2);
    }
  }

  // Dots.
  for (const auto& p : placed) {
    const double r = 2.5;
    for (int k = 0; k < std::abs(p.slot.octave); ++k) {
      if (p.slot.octave > 0) {
        canvas.disc(p.center.x, p.box.y0 - 7 - 6 * k, r);
      } else {
        canvas.disc(p.center.x, p.box.y1 + 6 + 5 * p.slot.underlines + 6 * k, r);
      }
    }
    if (p.slot.dotted) canvas.disc(p.box.x1 + 0.3 * p.box.width(), p.center.y, r);
  }

  for (const auto& a : arcs) {
    const double xa = placed[a.i].center.x, xb = placed[a.j].center.x;
    const double top = std::min(placed[a.i].box.y0, placed[a.j].box.y0);
    const double rise = std::clamp(0.15 * (xb - xa), 6.0, 18.0);
    canvas.arc(xa, xb, top - 0.5 * h, rise, 4.0);
  }

  // Lyrics.
  std::vector<std::optional<std::string>> lyric(placed.size());
  if (opts.lyrics) {
    if (assets.charset.empty() || !assets.glyphs) throw std::invalid_argument("synth lyrics need a charset and glyphs");
    const std::size_t pool = std::min(opts.lyric_charset_limit, assets.charset.size());
    for (std::size_t i = 0; i < placed.size(); ++i) {
      if (placed[i].slot.digit == 0 || !lyric_ok[i]) continue;
      std::optional<GrayImage> glyph;
      std::string ch;
      for (int attempt = 0; attempt < 8 && !glyph; ++attempt) {
        ch = assets.charset[rng.below(static_cast<int>(pool))];
        glyph = assets.glyphs(ch);
      }
      if (!glyph) continue;
      const int em = static_cast<int>(std::round(0.9 * h * rng.uniform(0.94, 1.06)));
      const GrayImage small = resize_to(*glyph, em, em);
      const int x0 = static_cast<int>(std::round(placed[i].center.x - 0.5 * em + rng.uniform(-1.5, 1.5)));
      const int y0 = static_cast<int>(std::round(placed[i].center.y + 1.75 * h - 0.5 * em + rng.uniform(-1.5, 1.5)));
      canvas.stamp(small, x0, y0);
      BoundingBox b = ink_bounds(small, 0.3f);
      if (!b.valid()) continue;
      b = {b.x0 + x0, b.y0 + y0, b.x1 + x0, b.y1 + y0};
      page.lyrics.push_back({ch, b});
      lyric[i] = ch;
    }
  }

  // Ground truth.
  page.truth.systems.resize(opts.systems);
  for (int s = 0; s < opts.systems; ++s) {
    page.truth.systems[s].measures.resize(measures_in_system[s]);
    for (const auto& [x, m] : barlines[s]) page.truth.systems[s].measures[m].barline_x = x;
  }
  for (std::size_t i = 0; i < placed.size(); ++i) {
    const Placed& p = placed[i];
    NoteEvent e;
    e.digit = p.slot.digit;
    e.octave_shift = p.slot.digit == 0 ? 0 : p.slot.octave;
    e.underline_count = p.slot.underlines;
    e.dash_count = p.slot.dashes;
    e.augmentation_dots = p.slot.dotted ? 1 : 0;
    e.tie_to_next = tie[i];
    e.slur_group = slur[i];
    e.lyric = lyric[i];
    e.position = p.center;
    e.duration = p.slot.duration;
    if (p.slot.digit != 0) {
      e.pitch = kMajor[p.slot.digit - 1] + 12 * (opts.base_octave + 1 + p.slot.octave) + opts.key_root;
    }
    auto& meas = page.truth.systems[p.system].measures[p.measure];
    meas.events.push_back(e);
    meas.length = meas.length + e.duration;
  }
  page.truth.systems.erase(std::remove_if(page.truth.systems.begin(), page.truth.systems.end(),
                                          [](const System& s) { return s.measures.empty(); }),
                           page.truth.systems.end());

  // Paper, ink and noise.
  const double ink = rng.uniform(0.68, 0.85);
  const double bg0 = rng.uniform(0.05, 0.12);
  const double gx = rng.uniform(-0.05, 0.05), gy = rng.uniform(-0.04, 0.04);
  FloatRaster out(height, opts.width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < opts.width; ++x) {
      const double bg = bg0 + gx * x / opts.width + gy * y / height + 0.05;
      const double c = canvas.cov(y, x);
      out(y, x) = static_cast<float>(bg + (ink - bg) * c + opts.noise_sigma * rng.normal());
    }
  }
  GrayImage img(std::move(out));
  if (opts.max_skew_degrees > 0.0) {
    page.skew_degrees = rng.uniform(-opts.max_skew_degrees, opts.max_skew_degrees);
    img = rotate(img, page.skew_degrees);
  }
  page.image = std::move(img);
  return page;
}

std::vector<SynthPage> render_corpus(const SynthAssets& assets, const SynthOptions& opts, int pages,
                                     std::uint64_t seed) {
  std::vector<SynthPage> out;
  for (int i = 0; i < pages; ++i) {
    out.push_back(render_page(assets, opts, mix_seed(seed, i), fmt::format("page_{:03d}", i)));
  }
  return out;
}

nlohmann::json lyric_truth_to_json(const std::string& page, const std::vector<LyricTruth>& chars) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : chars) {
    arr.push_back({{"ch", c.ch}, {"box", {c.box.x0, c.box.y0, c.box.x1, c.box.y1}}});
  }
  return {{"page", page}, {"chars", arr}};
}

namespace {

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

}  // namespace

void write_corpus(const std::vector<SynthPage>& pages, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json index = nlohmann::json::array();
  for (const auto& p : pages) {
    save_png(p.image, dir / (p.id + ".png"));
    write_json(score_to_json(p.truth), dir / (p.id + ".truth.json"));
    nlohmann::json entry = {{"id", p.id},
                            {"image", p.id + ".png"},
                            {"truth", p.id + ".truth.json"},
                            {"digit_height", p.digit_height},
                            {"skew_degrees", p.skew_degrees}};
    if (!p.lyrics.empty()) {
      write_json(lyric_truth_to_json(p.id, p.lyrics), dir / (p.id + ".lyrics.json"));
      entry["lyrics"] = p.id + ".lyrics.json";
    }
    index.push_back(entry);
  }
  write_json({{"pages", index}}, dir / "index.json");
}

GrayImage render_ruled_page(int height, int width, double degrees, std::uint64_t seed) {
  Rng rng(seed);
  Canvas canvas(height, width);
  const int pitch = 24;
  for (int y = pitch; y + 10 < height - pitch; y += pitch) {
    double x = 40 + rng.uniform(0, 20);
    const double end = width - 40 - rng.uniform(0, 0.3 * width);
    while (x < end) {
      const double w = rng.uniform(15, 70);
      canvas.rect(x, y, std::min(x + w, end), y + 9);
      x += w + rng.uniform(6, 14);
    }
  }
  FloatRaster out(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out(y, x) = static_cast<float>(0.05 + 0.8 * canvas.cov(y, x) + 0.02 * rng.normal());
  }
  return rotate(GrayImage(std::move(out)), degrees);
}

}  // namespace jianpu
