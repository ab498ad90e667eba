#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "jianpu/imaging.hpp"

namespace jianpu {

class LightingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LightingProfile {
  double v_bg = 0.0;      // mean background intensity
  double v_fg = 0.0;      // mean foreground intensity
  double v_bg_cut = 0.0;  // background quantile cutoff
  double v_fg_cut = 0.0;  // Otsu foreground cutoff
  double alpha = 0.75;
  double v_bgt = 0.01;
  double v_fgt = 0.9;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
};

struct LightingTargets {
  double alpha = 0.75;
  double v_bgt = 0.01;
  double v_fgt = 0.9;
};

/// Background mean over [0, H^-1(alpha)], foreground mean over
/// [Otsu, 1], and the two gamma exponents that send each mean to its
/// target. Throws LightingError on constant, blank or inverted pages.
LightingProfile estimate_lighting(const GrayImage& img, const LightingTargets& targets = {});

/// Between-class-variance maximising cut, returned as an intensity
/// (lower edge of the first foreground bin). Ties go to the lower cut.
double otsu_threshold(const Histogram& hist);
/// Same, as a bin index in [1, bins).
int otsu_bin(const Histogram& hist);

/// f' = 1 - (1 - f^g1)^g2, clamped into [0,1].
double dual_gamma_value(double f, double gamma1, double gamma2);
GrayImage dual_gamma(const GrayImage& img, const LightingProfile& profile);

struct ProjectionProfile {
  double theta = 0.0;
  std::vector<double> b;
  std::vector<double> p;
  double entropy = 1.0;
};

/// Normalised Shannon entropy of the row sums after rotating by theta.
/// An image with no mass is given entropy 1.
ProjectionProfile projection_entropy(const GrayImage& img, double theta_degrees);
/// Entropy of an arbitrary mass vector, normalised by log2 of its length.
double normalized_entropy(const std::vector<double>& mass);

struct GoldenSectionResult {
  double argmin = 0.0;
  double value = 0.0;
  int evaluations = 0;
};

/// Golden-section search for the minimum of a unimodal function on
/// [lo, hi], terminating once the bracket is narrower than tol. On a
/// non-unimodal function this converges to some local minimum.
GoldenSectionResult golden_section_minimize(const std::function<double(double)>& fn, double lo,
                                            double hi, double tol);

struct DeskewOptions {
  double range_degrees = 5.0;
  double tol_degrees = 0.02;
  int pyramid_levels = 3;
  /// Grid step of the coarse scan that seeds the search on the coarsest
  /// level, which guards against multi-modal entropy curves.
  double coarse_step_degrees = 0.5;
};

struct DeskewResult {
  double angle = 0.0;  // rotation that corrects the page
  double entropy = 1.0;
  GrayImage corrected;
  bool blank = false;
};

DeskewResult deskew(const GrayImage& img, const DeskewOptions& opts = {});

}  // namespace jianpu
