#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jianpu/imaging.hpp"
#include "jianpu/morphoskel.hpp"

namespace jianpu {

class ZeroEnergyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PhaseCorrResult {
  /// f2 is f1 translated by (t_x, t_y): f2(x, y) ~ f1(x - t_x, y - t_y).
  int t_x = 0;
  int t_y = 0;
  double scale = 1.0;
  double peak = 0.0;
  double e1 = 0.0;
  double e2 = 0.0;
};

/// Normalised cross-power spectrum correlation. Patches are zero-padded to
/// common dims; offsets wrap into the signed range.
PhaseCorrResult phase_correlate(const GrayImage& f1, const GrayImage& f2);

struct ScaleSearch {
  double lo = 0.9;
  double hi = 1.1;
  double tol = 0.002;
};

/// Golden-section over s of the phase-correlation peak of f1 against
/// resize(f2, s).
PhaseCorrResult align_scale(const GrayImage& f1, const GrayImage& f2, const ScaleSearch& search = {});

/// f2 resized by `align.scale`, shifted back by (t_x, t_y), on f1's canvas.
GrayImage apply_alignment(const GrayImage& f2, const PhaseCorrResult& align, int height, int width);

/// Zero-filled integer translation.
GrayImage shift_image(const GrayImage& img, int dx, int dy);

/// sum f1 f2 / sqrt(E1 E2). Patches are zero-padded to common dims.
double normalized_correlation(const GrayImage& f1, const GrayImage& f2);

/// sum min / sum max; 1.0 for two blank patches.
double minmax_iou(const GrayImage& f1, const GrayImage& f2);

struct SkeletonMatchProblem {
  std::vector<PointF> a;
  std::vector<PointF> b;
  double lambda = 12.0;
  /// (n+m) x (n+m); only filled by skeleton_match, not the fast variant.
  std::vector<std::vector<double>> cost_matrix;
  std::vector<int> assignment;
  double j_star = 0.0;
  double j_max = 0.0;
  double s = 1.0;
};

/// Full doubled construction: [[D, L_a], [L_b, D^T]] with d_ij = |a-b|^2/2,
/// lambda^2/2 on the penalty diagonals and +inf elsewhere in the penalty
/// blocks. s = exp(-J*/J_max), J_max = lambda^2 (n+m)/2.
SkeletonMatchProblem skeleton_match(const std::vector<PointF>& a, const std::vector<PointF>& b, double lambda);

/// Same optimum from an n x m problem with cost min(|a-b|^2, lambda^2).
double skeleton_similarity(const std::vector<PointF>& a, const std::vector<PointF>& b, double lambda,
                           double* j_star = nullptr);

/// Thinned foreground pixels of a patch, uniformly subsampled to `cap`.
std::vector<PointF> skeleton_points(const GrayImage& patch, double threshold = 0.5, std::size_t cap = 120);

double embedding_cosine(const std::vector<float>& e1, const std::vector<float>& e2);

enum MetricSlot { kPhase = 0, kIou = 1, kSkeleton = 2, kEmbedding = 3 };

struct FusionParams {
  std::array<double, 4> weights{0.3, 0.25, 0.3, 0.15};
  std::array<double, 4> gammas{1.0, 1.0, 1.0, 1.0};
};

struct SimilarityReport {
  double s_phase = 0.0;
  double s_iou = 0.0;
  std::optional<double> s_skel;  // absent when skeleton matching is skipped
  std::optional<double> s_embed;
  double fused = 0.0;
  PhaseCorrResult alignment;
};

/// Raw metric mapped to [0,1] before fusion.
double rescale_metric(MetricSlot slot, double value);

/// sum w_k r_k^g_k over present metrics after normalising the weights of
/// the metrics that are present. Throws if those weights sum to zero.
double fuse(const SimilarityReport& report, const FusionParams& params);

struct CompareOptions {
  ScaleSearch scale;
  double lambda = 12.0;
  bool use_skeleton = true;
  FusionParams fusion;
};

/// Aligns f2 to f1 and fills every metric plus the fused score. Skeleton
/// point sets may be supplied to avoid recomputation.
SimilarityReport compare_patches(const GrayImage& f1, const GrayImage& f2, const CompareOptions& opts,
                                 const std::vector<PointF>* skel1 = nullptr,
                                 const std::vector<PointF>* skel2 = nullptr,
                                 const std::vector<float>* emb1 = nullptr, const std::vector<float>* emb2 = nullptr);

}  // namespace jianpu
