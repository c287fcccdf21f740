#pragma once

#include <span>
#include <vector>

#include "image.hpp"

// Reference exemplar-based synthesizer: overlapping grid of input patches,
// position-constrained K-NN L2 search over all training photos, and
// distance-weighted fusion of the corresponding sketch patches.

namespace blr {

struct SynthParams {
    int patch_size = 10;
    int stride = 5;
    int knn = 5;
    int search_radius = 5;
};

struct PatchGrid {
    int patch_size = 0;
    int stride = 0;
    std::vector<std::pair<int, int>> origins;  // (x,y) top-left, row-major cells

    static PatchGrid build(int width, int height, int patch_size, int stride);
};

struct Candidate {
    int photo = 0;
    int x = 0, y = 0;  // patch origin in the training photo
    double dist = 0.0;  // L2 norm of the pixel difference
};

// Per input patch: K candidates sorted by (dist, photo, row-major offset).
using MatchResult = std::vector<std::vector<Candidate>>;

// K lowest-distance training patches among all photos, restricted to origins
// within `radius` (Chebyshev) of (center_x, center_y). Throws when no
// candidate origin lies inside any photo.
std::vector<Candidate> knn_search(const LuminanceImage& input, int px, int py,
                                  int patch_size,
                                  std::span<const LuminanceImage* const> training,
                                  int k, int center_x, int center_y, int radius);

MatchResult match_grid(const LuminanceImage& input,
                       std::span<const LuminanceImage* const> training,
                       const PatchGrid& grid, const SynthParams& params);

// Distance-weighted per-pixel average of all overlapping candidate sketch
// patches: weight exp(-d^2/(2h^2)) with h = median candidate distance of the
// cell. Cells holding a zero-distance candidate use only those candidates.
LuminanceImage fuse_sketch(const MatchResult& matches,
                           std::span<const LuminanceImage* const> sketches,
                           const PatchGrid& grid, int width, int height);

struct GroundTruthPatch {
    int photo = 0;
    int x = 0, y = 0;
};

// Fraction of cells whose rank-1 candidate is the correct photo and within
// `tolerance_px` (Chebyshev) of the correct origin.
double match_accuracy(const MatchResult& matches,
                      std::span<const GroundTruthPatch> ground_truth,
                      double tolerance_px);

LuminanceImage synthesize_sketch(const LuminanceImage& input,
                                 std::span<const LuminanceImage* const> training,
                                 std::span<const LuminanceImage* const> sketches,
                                 const SynthParams& params);

}  // namespace blr
