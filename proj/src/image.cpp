#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blr {

LuminanceImage::LuminanceImage(int width, int height, double fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height, fill) {
    if (width < 0 || height < 0)
        throw std::invalid_argument("image dimensions must be non-negative");
}

RegionMask::RegionMask(int width, int height, bool fill)
    : width_(width), height_(height),
      data_(static_cast<std::size_t>(width) * height, fill ? 1 : 0) {
    if (width < 0 || height < 0)
        throw std::invalid_argument("mask dimensions must be non-negative");
}

std::size_t RegionMask::count() const {
    std::size_t n = 0;
    for (auto v : data_) n += v;
    return n;
}

double ScalarStats::stddev() const { return std::sqrt(std::max(variance, 0.0)); }

RegionMask full_mask(int width, int height) { return RegionMask(width, height, true); }

LuminanceImage luma_convert(const LuminanceImage& r, const LuminanceImage& g,
                            const LuminanceImage& b) {
    if (!r.same_size(g) || !r.same_size(b))
        throw std::invalid_argument("luma_convert: channel dimensions differ");
    LuminanceImage out(r.width(), r.height());
    auto rp = r.pixels(), gp = g.pixels(), bp = b.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i)
        op[i] = 0.299 * rp[i] + 0.587 * gp[i] + 0.114 * bp[i];
    return out;
}

ScalarStats masked_stats(const LuminanceImage& img, const RegionMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("masked_stats: image/mask size mismatch");
    const LuminanceImage* imgs = &img;
    const RegionMask* masks = &mask;
    return pooled_stats(std::span(imgs, 1), std::span(masks, 1));
}

ScalarStats pooled_stats(std::span<const LuminanceImage> imgs,
                         std::span<const RegionMask> masks) {
    if (imgs.empty()) throw std::invalid_argument("pooled_stats: empty image list");
    if (imgs.size() != masks.size())
        throw std::invalid_argument("pooled_stats: image/mask list size mismatch");

    // Two-pass: pooled mean first, then central second moment. Avoids the
    // cancellation of the E[x^2]-mu^2 form on low-variance regions.
    double sum = 0.0;
    long long n = 0;
    for (std::size_t k = 0; k < imgs.size(); ++k) {
        const auto& img = imgs[k];
        const auto& mask = masks[k];
        if (img.width() != mask.width() || img.height() != mask.height())
            throw std::invalid_argument("pooled_stats: image/mask size mismatch");
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                if (mask.at(x, y)) {
                    sum += img.at(x, y);
                    ++n;
                }
    }
    if (n == 0) throw std::invalid_argument("pooled_stats: empty mask");
    const double mean = sum / static_cast<double>(n);

    double ss = 0.0;
    for (std::size_t k = 0; k < imgs.size(); ++k) {
        const auto& img = imgs[k];
        const auto& mask = masks[k];
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                if (mask.at(x, y)) {
                    const double d = img.at(x, y) - mean;
                    ss += d * d;
                }
    }
    return ScalarStats{mean, ss / static_cast<double>(n), n};
}

ScalarStats image_stats(const LuminanceImage& img) {
    return masked_stats(img, full_mask(img.width(), img.height()));
}

double covariance(const LuminanceImage& a, const LuminanceImage& b) {
    const LuminanceImage* as = &a;
    const LuminanceImage* bs = &b;
    return pooled_covariance(std::span(as, 1), std::span(bs, 1));
}

double pooled_covariance(std::span<const LuminanceImage> as,
                         std::span<const LuminanceImage> bs) {
    if (as.empty() || as.size() != bs.size())
        throw std::invalid_argument("pooled_covariance: bad list sizes");
    double sum_a = 0.0, sum_b = 0.0;
    long long n = 0;
    for (std::size_t k = 0; k < as.size(); ++k) {
        if (!as[k].same_size(bs[k]))
            throw std::invalid_argument("pooled_covariance: image size mismatch");
        auto ap = as[k].pixels(), bp = bs[k].pixels();
        for (std::size_t i = 0; i < ap.size(); ++i) {
            sum_a += ap[i];
            sum_b += bp[i];
        }
        n += static_cast<long long>(ap.size());
    }
    if (n == 0) throw std::invalid_argument("pooled_covariance: empty images");
    const double mu_a = sum_a / static_cast<double>(n);
    const double mu_b = sum_b / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t k = 0; k < as.size(); ++k) {
        auto ap = as[k].pixels(), bp = bs[k].pixels();
        for (std::size_t i = 0; i < ap.size(); ++i)
            acc += (ap[i] - mu_a) * (bp[i] - mu_b);
    }
    return acc / static_cast<double>(n);
}

LuminanceImage compose(const LuminanceImage& fg, const LuminanceImage& bg,
                       const AlphaMatte& alpha) {
    if (!fg.same_size(bg) || !fg.same_size(alpha))
        throw std::invalid_argument("compose: layer dimensions differ");
    LuminanceImage out(fg.width(), fg.height());
    auto fp = fg.pixels(), bp = bg.pixels(), ap = alpha.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i)
        op[i] = ap[i] * fp[i] + (1.0 - ap[i]) * bp[i];
    return out;
}

LuminanceImage affine_image(const LuminanceImage& img, double gain, double offset) {
    LuminanceImage out(img.width(), img.height());
    auto ip = img.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i) op[i] = gain * ip[i] + offset;
    return out;
}

LuminanceImage clamp01(const LuminanceImage& img) {
    LuminanceImage out(img.width(), img.height());
    auto ip = img.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i) op[i] = std::clamp(ip[i], 0.0, 1.0);
    return out;
}

}  // namespace blr
