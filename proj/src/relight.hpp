#pragma once

#include <span>
#include <vector>

#include "image.hpp"
#include "landmarks.hpp"

// Side-lighting correction: CLAHE preconditioning, symmetric-half shadow
// detection, dense 1-NN NCC correspondence across the face midline, and
// per-pixel gamma remapping of the shadow half.

namespace blr {

struct ClaheParams {
    int tile_cols = 8;
    int tile_rows = 8;
    double clip_limit = 0.01;  // fraction of tile pixel count per bin
    int bins = 256;
};

// Per-tile clipped-histogram equalization, excess mass redistributed
// uniformly, per-pixel bilinear blend between the four neighboring tile
// mappings. Output in [0,1].
LuminanceImage clahe(const LuminanceImage& img, const ClaheParams& params);

struct FaceHalves {
    RegionMask left;
    RegionMask right;
    double axis = 0.0;  // x coordinate of the vertical split line
};

// Face mask split by the vertical line through the mean x of the midline
// landmarks (nose bridge + chin for 68-point sets; all points otherwise).
FaceHalves split_halves(const LandmarkSet& landmarks, int width, int height);

enum class ShadowSide { none, left, right };

const char* to_string(ShadowSide side);

// Side whose masked mean is lower, when the means differ by more than
// `threshold`; otherwise none.
ShadowSide detect_shadow_side(const LuminanceImage& img, const RegionMask& left,
                              const RegionMask& right, double threshold);

// Zero-mean normalized dot product in [-1,1]; pairs involving a constant
// patch return 0.
double ncc(std::span<const double> a, std::span<const double> b);

// Square patch centered at (cx,cy), border-replicated, row-major.
std::vector<double> extract_patch(const LuminanceImage& img, int cx, int cy, int size);

// Same patch with columns reversed (the reflection of a patch across a
// vertical axis). Candidates on the far side of the face are compared in
// this mirrored orientation so that symmetric features align.
std::vector<double> extract_patch_mirrored(const LuminanceImage& img, int cx, int cy,
                                           int size);

struct ShadowCorrespondence {
    int px = 0, py = 0;  // shadow pixel
    int qx = 0, qy = 0;  // matched lit pixel
    double mean_shadow = 0.0;
    double mean_lit = 0.0;
};

// 1-NN NCC search over the (2*window+1)^2 candidates centered at the mirror
// of p across the vertical axis, restricted to the lit mask. Ties broken by
// smallest displacement from the mirror position, then row-major order.
ShadowCorrespondence symmetric_match(const LuminanceImage& img, int px, int py,
                                     double axis, const RegionMask& lit_mask,
                                     int patch_size, int window);

// Applies I^(mean_shadow/mean_lit) at each correspondence's shadow pixel
// (value clamped to [0,1] first); correspondences with mean_lit <= 0 are
// skipped and counted.
LuminanceImage gamma_correct(const LuminanceImage& img,
                             std::span<const ShadowCorrespondence> correspondences,
                             int* skipped = nullptr);

struct SideLightParams {
    double shadow_threshold = 0.08;
    ClaheParams clahe;
    int patch_size = 11;
    int search_radius = 5;
};

struct SideLightResult {
    LuminanceImage image;
    ShadowSide side = ShadowSide::none;
    int corrected = 0;
    int skipped = 0;
};

// Whole-module driver. When no shadow side is detected the input is passed
// through bit-identical (CLAHE runs only on the shadow path).
SideLightResult correct_side_lighting(const LuminanceImage& img,
                                      const LandmarkSet& landmarks,
                                      const SideLightParams& params);

}  // namespace blr
