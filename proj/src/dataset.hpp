#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blr.hpp"
#include "image.hpp"
#include "photo.hpp"
#include "pose.hpp"

// Dataset manifest parsing, layered-photo loading, the blur-trimap matting
// fallback, and the offline precompute bundle.

namespace blr {

struct TrainingEntry {
    std::filesystem::path photo;
    std::filesystem::path alpha;       // exactly one of alpha/trimap is set
    std::filesystem::path trimap;
    std::filesystem::path foreground;  // optional separated layers
    std::filesystem::path background;
    std::filesystem::path landmarks;
    std::filesystem::path sketch;      // optional
};

struct InputEntry {
    std::filesystem::path photo;
    std::filesystem::path landmarks;
    std::filesystem::path sketch;  // optional ground truth
};

struct DatasetManifest {
    std::string name;
    std::vector<TrainingEntry> training;
    std::vector<InputEntry> inputs;
    std::filesystem::path base_dir;
};

// Parses and validates a JSON manifest; relative paths are resolved against
// the manifest directory and every referenced file must exist. Errors name
// the offending entry.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Fills the unknown band of a {0, 0.5, 1} trimap with a normalized Gaussian
// blur of the binary foreground map (sigma = half the band's median width);
// known pixels stay at 0/1.
AlphaMatte trimap_to_matte(const LuminanceImage& trimap);

std::vector<LayeredPhoto> load_training(const DatasetManifest& manifest);

struct InputPhoto {
    LuminanceImage photo;
    LandmarkSet landmarks;
    std::optional<LuminanceImage> sketch;
};

InputPhoto load_input(const DatasetManifest& manifest, std::size_t index);

struct PrecomputeBundle {
    static constexpr int kVersion = 1;
    std::string name;
    int photo_count = 0;
    MomentSummary moments;      // pooled over the quantized P/N/A rasters
    ScalarStats face_stats;     // pooled face-region stats of the photos
    FaceTemplate face_template;
    std::vector<std::string> p_files, n_files, a_files;
};

// Writes P/N/A rasters plus bundle.json into `dir`. Deterministic: the same
// manifest always reproduces a bit-identical bundle.
PrecomputeBundle precompute(const DatasetManifest& manifest,
                            const std::filesystem::path& dir);

// Rejects any bundle whose version tag differs from kVersion.
PrecomputeBundle load_bundle(const std::filesystem::path& dir);

}  // namespace blr
