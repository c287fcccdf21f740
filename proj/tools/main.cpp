// Command-line front end: dataset precompute, luminance remapping, the full
// synthesis pipeline, the synthetic lighting benchmark, and the corpus
// generator. Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical infeasibility under --strict.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bench.hpp"
#include "blr.hpp"
#include "corpus.hpp"
#include "dataset.hpp"
#include "png_io.hpp"
#include "pose.hpp"
#include "relight.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string manifest;
    std::string output_dir = "out";
    std::string mode = "approx";
    bool strict = false;
};

blr::SolveMode solve_mode(const std::string& mode) {
    if (mode == "approx") return blr::SolveMode::approximate;
    if (mode == "exact") return blr::SolveMode::exact;
    throw CLI::ValidationError("--mode", "must be approx or exact");
}

class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void check_strict(const blr::BackgroundSolve& solve, bool strict) {
    if (strict && !solve.variance_feasible)
        throw InfeasibleError("background solve is variance-infeasible (fallback: " +
                              std::string(blr::to_string(solve.fallback)) + ")");
}

json map_to_json(const blr::LinearMap& m) {
    return json{{"gain", m.gain}, {"offset", m.offset}};
}

int run_prepare(const CommonOpts& opts) {
    const blr::DatasetManifest manifest = blr::load_manifest(opts.manifest);
    const auto bundle = blr::precompute(manifest, opts.output_dir);
    std::printf("prepared %d photos -> %s (template: %zu landmarks, %zu triangles)\n",
                bundle.photo_count, opts.output_dir.c_str(),
                bundle.face_template.mean_landmarks.size(),
                bundle.face_template.triangles.size());
    return 0;
}

int run_remap(const CommonOpts& opts, int input_index) {
    const blr::DatasetManifest manifest = blr::load_manifest(opts.manifest);
    const std::vector<blr::LayeredPhoto> training = blr::load_training(manifest);
    if (manifest.inputs.empty())
        throw std::runtime_error("manifest has no input entries");
    const blr::InputPhoto input = blr::load_input(manifest, input_index);

    const blr::SolveMode mode = solve_mode(opts.mode);
    const blr::BlrResult res =
        blr::blr_pipeline(input.photo, input.landmarks, training, mode);
    check_strict(res.background, opts.strict);

    fs::create_directories(opts.output_dir);
    blr::write_png_gray(fs::path(opts.output_dir) / "adapted_input.png",
                        res.adapted_input);
    char name[64];
    for (std::size_t i = 0; i < res.adapted_training.size(); ++i) {
        std::snprintf(name, sizeof(name), "adapted_train_%03zu.png", i);
        blr::write_png_gray(fs::path(opts.output_dir) / name, res.adapted_training[i]);
    }

    // Measured whole-set stats of the recomposed training photos, for audit.
    std::vector<blr::LuminanceImage> imgs = res.adapted_training;
    std::vector<blr::RegionMask> masks;
    for (const auto& img : imgs)
        masks.push_back(blr::full_mask(img.width(), img.height()));
    const blr::ScalarStats adapted_stats = blr::pooled_stats(imgs, masks);

    json sidecar;
    sidecar["mode"] = blr::to_string(res.background.mode);
    sidecar["requested_mode"] = blr::to_string(mode);
    sidecar["input_map"] = map_to_json(res.input_map);
    sidecar["background_map"] = map_to_json(res.background.map);
    sidecar["variance_feasible"] = res.background.variance_feasible;
    sidecar["fallback"] = blr::to_string(res.background.fallback);
    sidecar["target"] = {{"mean", res.target.mean}, {"variance", res.target.variance}};
    sidecar["adapted_training"] = {{"mean", adapted_stats.mean},
                                   {"variance", adapted_stats.variance}};
    std::ofstream out(fs::path(opts.output_dir) / "remap.json");
    out << sidecar.dump(2) << "\n";

    std::printf("remap: a_i=%.6f b_i=%.6f a_t=%.6f b_t=%.6f (%s%s)\n",
                res.input_map.gain, res.input_map.offset, res.background.map.gain,
                res.background.map.offset, blr::to_string(res.background.mode),
                res.background.variance_feasible ? "" : ", variance-infeasible");
    return 0;
}

struct SynthOpts {
    bool no_pose = false;
    bool no_side_light = false;
    blr::SideLightParams side;
    blr::SynthParams synth;
    bool extended_range = false;
    int clahe_tiles = 8;
};

int run_synthesize(const CommonOpts& opts, const SynthOpts& sopts, int input_index) {
    const blr::DatasetManifest manifest = blr::load_manifest(opts.manifest);
    const std::vector<blr::LayeredPhoto> training = blr::load_training(manifest);
    if (manifest.inputs.empty())
        throw std::runtime_error("manifest has no input entries");
    for (std::size_t i = 0; i < training.size(); ++i)
        if (!training[i].sketch)
            throw std::runtime_error("training entry " + std::to_string(i) +
                                     " has no sketch (required for synthesis)");
    const blr::InputPhoto input = blr::load_input(manifest, input_index);

    std::vector<blr::LandmarkSet> sets;
    for (const auto& p : training) sets.push_back(p.landmarks);
    const blr::FaceTemplate tmpl = blr::build_template(
        sets, training[0].photo.width(), training[0].photo.height());

    blr::SynthParams synth = sopts.synth;
    if (sopts.extended_range) synth.search_radius = std::max(synth.search_radius, 10);
    blr::SideLightParams side = sopts.side;
    side.clahe.tile_cols = sopts.clahe_tiles;
    side.clahe.tile_rows = sopts.clahe_tiles;

    // Pipeline: landmarks -> pose warp -> side lighting -> BLR -> patch
    // synthesis -> inverse warp.
    std::optional<blr::PiecewiseAffineWarp> warp;
    blr::LuminanceImage working = input.photo;
    blr::LandmarkSet working_lms = input.landmarks;
    if (!sopts.no_pose) {
        warp.emplace(blr::fit_warp(input.landmarks, tmpl, input.photo.width(),
                                   input.photo.height()));
        working = blr::warp_image(input.photo, *warp, blr::WarpDirection::forward);
        working_lms = tmpl.mean_landmarks;
    }

    blr::ShadowSide shadow_side = blr::ShadowSide::none;
    if (!sopts.no_side_light) {
        blr::SideLightResult relit =
            blr::correct_side_lighting(working, working_lms, side);
        shadow_side = relit.side;
        working = std::move(relit.image);
    }

    const blr::SolveMode mode = solve_mode(opts.mode);
    const blr::BlrResult res = blr::blr_pipeline(working, working_lms, training, mode);
    check_strict(res.background, opts.strict);

    std::vector<const blr::LuminanceImage*> photos, sketches;
    for (const auto& img : res.adapted_training) photos.push_back(&img);
    for (const auto& p : training) sketches.push_back(&*p.sketch);
    blr::LuminanceImage sketch =
        blr::synthesize_sketch(res.adapted_input, photos, sketches, synth);

    if (warp) sketch = blr::warp_image(sketch, *warp, blr::WarpDirection::inverse);

    fs::create_directories(opts.output_dir);
    char name[64];
    std::snprintf(name, sizeof(name), "sketch_%03d.png", input_index);
    blr::write_png_gray(fs::path(opts.output_dir) / name, sketch);

    json sidecar;
    sidecar["input"] = input_index;
    sidecar["pose_normalized"] = !sopts.no_pose;
    sidecar["shadow_side"] = blr::to_string(shadow_side);
    sidecar["mode"] = blr::to_string(res.background.mode);
    sidecar["input_map"] = map_to_json(res.input_map);
    sidecar["background_map"] = map_to_json(res.background.map);
    sidecar["variance_feasible"] = res.background.variance_feasible;
    sidecar["fallback"] = blr::to_string(res.background.fallback);
    std::snprintf(name, sizeof(name), "sketch_%03d.json", input_index);
    std::ofstream out(fs::path(opts.output_dir) / name);
    out << sidecar.dump(2) << "\n";

    std::printf("synthesized input %d -> %s\n", input_index, opts.output_dir.c_str());
    return 0;
}

int run_bench_cmd(const CommonOpts& opts, std::uint64_t seed, int inputs, bool timing,
                  const blr::SynthParams& synth, bool extended_range) {
    std::vector<blr::LayeredPhoto> training;
    int input_count = inputs;
    if (!opts.manifest.empty()) {
        const blr::DatasetManifest manifest = blr::load_manifest(opts.manifest);
        training = blr::load_training(manifest);
        if (input_count <= 0)
            input_count = std::min<int>(10, static_cast<int>(training.size()));
    } else {
        blr::CorpusParams params;
        params.seed = seed;
        blr::SyntheticCorpus corpus = blr::generate_corpus(params);
        training = std::move(corpus.training);
        if (input_count <= 0) input_count = corpus.input_count;
    }

    blr::BenchOptions options;
    options.synth = synth;
    if (extended_range) options.synth.search_radius = std::max(synth.search_radius, 10);
    options.mode = solve_mode(opts.mode);
    options.timing = timing;

    const auto records =
        blr::run_bench(training, input_count, blr::LightingGridSpec::standard(), options);

    fs::create_directories(opts.output_dir);
    const fs::path csv = fs::path(opts.output_dir) / "bench.csv";
    blr::write_bench_csv(csv, records);

    bool all_feasible = true;
    for (const auto& r : records) all_feasible = all_feasible && r.feasible;
    if (opts.strict && !all_feasible)
        throw InfeasibleError("bench hit variance-infeasible cells");
    std::printf("bench: %zu records -> %s\n", records.size(), csv.string().c_str());
    return 0;
}

int run_gen_dataset(const std::string& output_dir, std::uint64_t seed) {
    blr::CorpusParams params;
    params.seed = seed;
    const blr::SyntheticCorpus corpus = blr::generate_corpus(params);
    blr::write_corpus_dataset(corpus, output_dir);
    std::printf("generated %zu training / %d input items -> %s\n",
                corpus.training.size(), corpus.input_count, output_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lighting-robust preprocessing for exemplar-based face sketch synthesis"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::uint64_t seed = 1234;
    int input_index = 0;
    int bench_inputs = 0;
    bool timing = false;
    SynthOpts sopts;

    app.add_option("--mode", opts.mode, "background solve mode: approx|exact")
        ->check(CLI::IsMember({"approx", "exact"}));
    app.add_option("--output-dir", opts.output_dir, "output directory");
    app.add_option("--seed", seed, "seed for generated data");
    app.add_flag("--strict", opts.strict, "treat numerical infeasibility as fatal");

    auto* prepare = app.add_subcommand("prepare", "precompute the dataset bundle");
    prepare->add_option("--manifest", opts.manifest, "dataset manifest")->required();

    auto* remap = app.add_subcommand("remap", "run luminance remapping only");
    remap->add_option("--manifest", opts.manifest, "dataset manifest")->required();
    remap->add_option("--input", input_index, "input entry index");

    auto* synthesize = app.add_subcommand("synthesize", "full synthesis pipeline");
    synthesize->add_option("--manifest", opts.manifest, "dataset manifest")->required();
    synthesize->add_option("--input", input_index, "input entry index");
    synthesize->add_flag("--no-pose", sopts.no_pose, "skip pose normalization");
    synthesize->add_flag("--no-side-light", sopts.no_side_light,
                         "skip side-lighting correction");
    synthesize->add_option("--shadow-threshold", sopts.side.shadow_threshold,
                           "shadow detection mean difference threshold");
    synthesize->add_option("--clahe-clip", sopts.side.clahe.clip_limit,
                           "CLAHE clip limit (fraction of tile mass)");
    synthesize->add_option("--clahe-tiles", sopts.clahe_tiles, "CLAHE tile grid size");
    synthesize->add_option("--patch-size", sopts.side.patch_size,
                           "shadow correspondence patch size");
    synthesize->add_option("--search-radius", sopts.side.search_radius,
                           "shadow correspondence search radius");
    synthesize->add_option("--patch", sopts.synth.patch_size, "synthesis patch size");
    synthesize->add_option("--stride", sopts.synth.stride, "synthesis patch stride");
    synthesize->add_option("--knn", sopts.synth.knn, "candidates per patch");
    synthesize->add_option("--radius", sopts.synth.search_radius,
                           "synthesis search radius");
    synthesize->add_flag("--extended-range", sopts.extended_range,
                         "extended search range (radius 10)");

    auto* bench = app.add_subcommand("bench", "synthetic lighting benchmark grid");
    bench->add_option("--manifest", opts.manifest,
                      "layered dataset manifest (default: generated corpus)");
    bench->add_option("--inputs", bench_inputs, "number of bench inputs");
    bench->add_flag("--timing", timing, "record wall times in the CSV");
    bench->add_option("--patch", sopts.synth.patch_size, "synthesis patch size");
    bench->add_option("--stride", sopts.synth.stride, "synthesis patch stride");
    bench->add_option("--knn", sopts.synth.knn, "candidates per patch");
    bench->add_option("--radius", sopts.synth.search_radius, "synthesis search radius");
    bench->add_flag("--extended-range", sopts.extended_range,
                    "extended search range (radius 10)");

    auto* gen = app.add_subcommand("gen-dataset", "write the synthetic corpus to disk");

    // Global options (--mode, --seed, ...) may appear after the subcommand.
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (prepare->parsed()) return run_prepare(opts);
        if (remap->parsed()) return run_remap(opts, input_index);
        if (synthesize->parsed()) return run_synthesize(opts, sopts, input_index);
        if (bench->parsed())
            return run_bench_cmd(opts, seed, bench_inputs, timing, sopts.synth,
                                 sopts.extended_range);
        if (gen->parsed()) return run_gen_dataset(opts.output_dir, seed);
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
