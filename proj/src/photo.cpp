#include "photo.hpp"

#include <stdexcept>

namespace blr {

PnaImages pna_images(const LayeredPhoto& photo) {
    if (photo.portrait.empty() || photo.background.empty() || photo.alpha.empty())
        throw std::invalid_argument("pna_images: photo has missing layers");
    if (!photo.portrait.same_size(photo.background) ||
        !photo.portrait.same_size(photo.alpha))
        throw std::invalid_argument("pna_images: layer dimensions differ");

    const int w = photo.portrait.width(), h = photo.portrait.height();
    PnaImages out{LuminanceImage(w, h), LuminanceImage(w, h), LuminanceImage(w, h)};
    auto fp = photo.portrait.pixels();
    auto bp = photo.background.pixels();
    auto ap = photo.alpha.pixels();
    auto pp = out.p.pixels(), np = out.n.pixels(), aap = out.a.pixels();
    for (std::size_t i = 0; i < fp.size(); ++i) {
        pp[i] = ap[i] * fp[i];
        np[i] = (1.0 - ap[i]) * bp[i];
        aap[i] = 1.0 - ap[i];
    }
    return out;
}

}  // namespace blr
