#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Single-channel rasters and the masked / pooled statistics they carry.
// All statistics are population moments (divide by N): the remapping
// identities used downstream hold exactly only with population moments.
// Pixel values decoded from files are in [0,1]; remapped intermediates may
// leave that range and are clamped only at explicit clamp/encode points.

namespace blr {

class LuminanceImage {
public:
    LuminanceImage() = default;
    LuminanceImage(int width, int height, double fill = 0.0);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    std::span<double> pixels() { return data_; }
    std::span<const double> pixels() const { return data_; }

    bool same_size(const LuminanceImage& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

// Alpha mattes share the raster layout; producers keep values in [0,1].
using AlphaMatte = LuminanceImage;

class RegionMask {
public:
    RegionMask() = default;
    RegionMask(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { data_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    std::size_t count() const;
    bool same_size(const RegionMask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

struct ScalarStats {
    double mean = 0.0;
    double variance = 0.0;
    long long count = 0;

    double stddev() const;
};

RegionMask full_mask(int width, int height);

// BT.601 luma; channels must share dimensions.
LuminanceImage luma_convert(const LuminanceImage& r, const LuminanceImage& g,
                            const LuminanceImage& b);

// Population mean/variance over masked pixels (two-pass). Throws on an
// empty mask or a mask/image size mismatch.
ScalarStats masked_stats(const LuminanceImage& img, const RegionMask& mask);

// Stats as if all masked pixels of all images were one sample.
ScalarStats pooled_stats(std::span<const LuminanceImage> imgs,
                         std::span<const RegionMask> masks);

ScalarStats image_stats(const LuminanceImage& img);

// Population covariance over all pixels of two equal-size images.
double covariance(const LuminanceImage& a, const LuminanceImage& b);

// Set-level covariance, pooling pixel pairs across all image pairs.
double pooled_covariance(std::span<const LuminanceImage> as,
                         std::span<const LuminanceImage> bs);

// Per-pixel alpha*fg + (1-alpha)*bg.
LuminanceImage compose(const LuminanceImage& fg, const LuminanceImage& bg,
                       const AlphaMatte& alpha);

// gain*v + offset per pixel, unclamped.
LuminanceImage affine_image(const LuminanceImage& img, double gain, double offset);

LuminanceImage clamp01(const LuminanceImage& img);

}  // namespace blr
