#pragma once

#include <span>
#include <vector>

#include "image.hpp"
#include "landmarks.hpp"
#include "photo.hpp"

// Bidirectional luminance remapping. Step 1 fits a global affine map that
// makes the input photo's face-region statistics match the pooled training
// face statistics. Step 2 solves for the affine map of the training
// backgrounds that makes the recomposed training set's overall statistics
// match the adapted input, using the pooled P/N/A moments.

namespace blr {

struct LinearMap {
    double gain = 1.0;
    double offset = 0.0;

    double operator()(double v) const { return gain * v + offset; }
};

// Filled convex hull of the landmark points, clipped to the image. A pixel
// belongs to the mask when its center lies inside or on the hull.
RegionMask face_mask(const LandmarkSet& landmarks, int width, int height);

// gain = sigma_train/sigma_input, offset = mu_train - gain*mu_input.
// Throws on zero input variance (flat face region).
LinearMap fit_input_map(const ScalarStats& input_face, const ScalarStats& training_face);

LuminanceImage apply_map(const LuminanceImage& img, const LinearMap& map);

// Pooled population moments of the P, N, A images across a training set.
struct MomentSummary {
    double mu_p = 0.0, mu_n = 0.0, mu_a = 0.0;
    double var_p = 0.0, var_n = 0.0, var_a = 0.0;
    double cov_pn = 0.0, cov_pa = 0.0, cov_na = 0.0;
    long long pixel_count = 0;
};

MomentSummary summarize_training(std::span<const LayeredPhoto> photos);
MomentSummary summarize_pna(std::span<const LuminanceImage> ps,
                            std::span<const LuminanceImage> ns,
                            std::span<const LuminanceImage> as);

enum class SolveMode { approximate, exact };

enum class SolveFallback {
    none,
    uniform_background,    // sigma_N^2 = 0: pure-offset solve with gain 1
    clamped_discriminant,  // target variance unreachable, discriminant clamped to 0
    approx_from_exact,     // exact mode found no positive root
};

struct BackgroundSolve {
    LinearMap map;
    SolveMode mode = SolveMode::approximate;
    bool variance_feasible = true;
    SolveFallback fallback = SolveFallback::none;
};

const char* to_string(SolveMode mode);
const char* to_string(SolveFallback fb);

BackgroundSolve solve_background_map(const MomentSummary& moments,
                                     const ScalarStats& target, SolveMode mode);

// alpha*portrait + (1-alpha)*(gain*background + offset): only the
// non-portrait layer is remapped, portrait pixels are untouched.
LuminanceImage recompose_training(const LayeredPhoto& photo, const LinearMap& map);

// P + gain*N + offset over the full frame (the small-offset approximation
// form). Used by oracles and the bench; the pipeline always recomposes
// through the layer blend above.
LuminanceImage recompose_offset_form(const LayeredPhoto& photo, const LinearMap& map);

struct BlrResult {
    LuminanceImage adapted_input;
    std::vector<LuminanceImage> adapted_training;
    LinearMap input_map;
    BackgroundSolve background;
    ScalarStats target;  // whole-image stats of the adapted input
};

BlrResult blr_pipeline(const LuminanceImage& input, const LandmarkSet& input_landmarks,
                       std::span<const LayeredPhoto> training, SolveMode mode);

// Pooled face-region stats of a training set (each photo masked by the
// convex hull of its own landmarks).
ScalarStats pooled_face_stats(std::span<const LayeredPhoto> photos);

}  // namespace blr
