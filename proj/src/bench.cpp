#include "bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace blr {

LuminanceImage synth_lighting(const LayeredPhoto& photo, double sigma_f, double sigma_b) {
    if (photo.portrait.empty() || photo.background.empty() || photo.alpha.empty())
        throw std::invalid_argument("synth_lighting: photo has missing layers");
    return compose(affine_image(photo.portrait, sigma_f, 0.0),
                   affine_image(photo.background, sigma_b, 0.0), photo.alpha);
}

const char* to_string(Variant v) {
    switch (v) {
        case Variant::none: return "none";
        case Variant::lr: return "lr";
        case Variant::blr: return "blr";
    }
    return "unknown";
}

LightingGridSpec LightingGridSpec::standard() {
    LightingGridSpec spec;
    spec.sigma_f = {0.5, 1.0, 1.5};
    for (int i = 0; i <= 10; ++i) spec.sigma_b.push_back(0.5 + 0.1 * i);
    spec.variants = {Variant::none, Variant::lr, Variant::blr};
    return spec;
}

std::vector<BenchRecord> run_bench(std::span<const LayeredPhoto> training,
                                   int input_count, const LightingGridSpec& grid,
                                   const BenchOptions& options) {
    if (training.empty()) throw std::invalid_argument("run_bench: empty training set");
    if (input_count < 1 || input_count > static_cast<int>(training.size()))
        throw std::invalid_argument("run_bench: bad input count");
    if (grid.sigma_f.empty() || grid.sigma_b.empty() || grid.variants.empty())
        throw std::invalid_argument("run_bench: empty grid");
    for (double s : grid.sigma_f)
        if (!(s > 0.0)) throw std::invalid_argument("run_bench: sigma_f must be positive");
    for (double s : grid.sigma_b)
        if (!(s > 0.0)) throw std::invalid_argument("run_bench: sigma_b must be positive");
    for (const auto& p : training)
        if (!p.sketch) throw std::invalid_argument("run_bench: training item without sketch");

    const ScalarStats training_full = [&] {
        std::vector<LuminanceImage> imgs;
        std::vector<RegionMask> masks;
        for (const auto& p : training) {
            imgs.push_back(p.photo);
            masks.push_back(full_mask(p.photo.width(), p.photo.height()));
        }
        return pooled_stats(imgs, masks);
    }();

    std::vector<const LuminanceImage*> original_photos, sketches;
    for (const auto& p : training) {
        original_photos.push_back(&p.photo);
        sketches.push_back(&*p.sketch);
    }

    std::vector<BenchRecord> records;
    for (double sf : grid.sigma_f) {
        for (double sb : grid.sigma_b) {
            for (Variant variant : grid.variants) {
                BenchRecord rec;
                rec.sigma_f = sf;
                rec.sigma_b = sb;
                rec.variant = variant;

                double acc_sum = 0.0, mae_sum = 0.0, ms_sum = 0.0;
                double ai_sum = 0.0, bi_sum = 0.0, at_sum = 0.0, bt_sum = 0.0;
                bool all_feasible = true;

                for (int j = 0; j < input_count; ++j) {
                    const LayeredPhoto& src = training[j];
                    const LuminanceImage input = synth_lighting(src, sf, sb);

                    const auto t0 = std::chrono::steady_clock::now();

                    LuminanceImage adapted = input;
                    std::vector<LuminanceImage> adapted_training;
                    std::vector<const LuminanceImage*> photos = original_photos;
                    double a_i = 1.0, b_i = 0.0, a_t = 1.0, b_t = 0.0;
                    bool feasible = true;

                    switch (variant) {
                        case Variant::none: break;
                        case Variant::lr: {
                            const LinearMap map =
                                fit_input_map(image_stats(input), training_full);
                            adapted = apply_map(input, map);
                            a_i = map.gain;
                            b_i = map.offset;
                            break;
                        }
                        case Variant::blr: {
                            BlrResult res = blr_pipeline(input, src.landmarks, training,
                                                         options.mode);
                            adapted = std::move(res.adapted_input);
                            adapted_training = std::move(res.adapted_training);
                            photos.clear();
                            for (const auto& img : adapted_training) photos.push_back(&img);
                            a_i = res.input_map.gain;
                            b_i = res.input_map.offset;
                            a_t = res.background.map.gain;
                            b_t = res.background.map.offset;
                            feasible = res.background.variance_feasible;
                            break;
                        }
                    }

                    const PatchGrid patch_grid =
                        PatchGrid::build(adapted.width(), adapted.height(),
                                         options.synth.patch_size, options.synth.stride);
                    const MatchResult matches =
                        match_grid(adapted, photos, patch_grid, options.synth);

                    std::vector<GroundTruthPatch> gt;
                    gt.reserve(patch_grid.origins.size());
                    for (const auto& [ox, oy] : patch_grid.origins)
                        gt.push_back({j, ox, oy});
                    acc_sum += match_accuracy(matches, gt, options.tolerance_px);

                    const LuminanceImage sketch =
                        fuse_sketch(matches, sketches, patch_grid, adapted.width(),
                                    adapted.height());
                    double mae = 0.0;
                    const auto& truth = *src.sketch;
                    for (std::size_t i = 0; i < sketch.size(); ++i)
                        mae += std::abs(sketch.pixels()[i] - truth.pixels()[i]);
                    mae_sum += mae / static_cast<double>(sketch.size());

                    const auto t1 = std::chrono::steady_clock::now();
                    ms_sum += std::chrono::duration<double, std::milli>(t1 - t0).count();
                    ai_sum += a_i;
                    bi_sum += b_i;
                    at_sum += a_t;
                    bt_sum += b_t;
                    all_feasible = all_feasible && feasible;
                }

                const double n = static_cast<double>(input_count);
                rec.match_accuracy = acc_sum / n;
                rec.sketch_mae = mae_sum / n;
                rec.a_i = ai_sum / n;
                rec.b_i = bi_sum / n;
                rec.a_t = at_sum / n;
                rec.b_t = bt_sum / n;
                rec.feasible = all_feasible;
                rec.wall_ms = options.timing ? ms_sum / n : 0.0;
                records.push_back(rec);
            }
        }
    }
    return records;
}

void write_bench_csv(const std::filesystem::path& path,
                     std::span<const BenchRecord> records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write CSV: " + path.string());
    out << "sigma_f,sigma_b,variant,match_accuracy,sketch_mae,a_i,b_i,a_t,b_t,feasible,"
           "wall_ms\n";
    char buf[256];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f,%s,%.6f,%.6f,%.9g,%.9g,%.9g,%.9g,%d,%.3f\n",
                      r.sigma_f, r.sigma_b, to_string(r.variant), r.match_accuracy,
                      r.sketch_mae, r.a_i, r.b_i, r.a_t, r.b_t, r.feasible ? 1 : 0,
                      r.wall_ms);
        out << buf;
    }
}

}  // namespace blr
