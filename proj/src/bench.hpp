#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "blr.hpp"
#include "photo.hpp"
#include "synth.hpp"

// Synthetic lighting benchmark: foreground pixels scaled by sigma_f,
// background pixels by sigma_b, then preprocessing variants (none / global
// LR / BLR) are compared by patch match accuracy against the known patch
// provenance of the synthetic input.

namespace blr {

// compose(sigma_f * portrait, sigma_b * background, alpha), unclamped.
LuminanceImage synth_lighting(const LayeredPhoto& photo, double sigma_f, double sigma_b);

enum class Variant { none, lr, blr };

const char* to_string(Variant v);

struct LightingGridSpec {
    std::vector<double> sigma_f;
    std::vector<double> sigma_b;
    std::vector<Variant> variants;

    // sigma_f in {0.5, 1.0, 1.5}; sigma_b from 0.5 to 1.5 in steps of 0.1.
    static LightingGridSpec standard();
};

struct BenchRecord {
    double sigma_f = 1.0;
    double sigma_b = 1.0;
    Variant variant = Variant::none;
    double match_accuracy = 0.0;
    double sketch_mae = 0.0;
    double a_i = 1.0, b_i = 0.0;
    double a_t = 1.0, b_t = 0.0;
    bool feasible = true;
    double wall_ms = 0.0;
};

struct BenchOptions {
    SynthParams synth;
    SolveMode mode = SolveMode::approximate;
    double tolerance_px = 2.0;
    bool timing = false;  // wall_ms stays 0 unless enabled, keeping CSV runs byte-identical
};

// One record per grid cell per variant, metric-averaged over the first
// `input_count` training items used as synthetic inputs.
std::vector<BenchRecord> run_bench(std::span<const LayeredPhoto> training,
                                   int input_count, const LightingGridSpec& grid,
                                   const BenchOptions& options);

void write_bench_csv(const std::filesystem::path& path,
                     std::span<const BenchRecord> records);

}  // namespace blr
