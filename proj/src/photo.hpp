#pragma once

#include <optional>

#include "image.hpp"
#include "landmarks.hpp"

namespace blr {

// A training photo decomposed into portrait/non-portrait layers by matting:
// photo = alpha*portrait + (1-alpha)*background. When a dataset ships no
// separated layers, portrait and background both hold the composite
// (exact wherever alpha is 0 or 1) and exact_layers is false.
struct LayeredPhoto {
    LuminanceImage photo;
    LuminanceImage portrait;
    LuminanceImage background;
    AlphaMatte alpha;
    LandmarkSet landmarks;
    std::optional<LuminanceImage> sketch;
    bool exact_layers = true;
};

// P = alpha*portrait, N = (1-alpha)*background, A = (1-alpha).
struct PnaImages {
    LuminanceImage p;
    LuminanceImage n;
    LuminanceImage a;
};

PnaImages pna_images(const LayeredPhoto& photo);

}  // namespace blr
