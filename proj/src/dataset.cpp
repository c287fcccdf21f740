#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "png_io.hpp"

namespace blr {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
    std::filesystem::path p(rel);
    return p.is_absolute() ? p : base / p;
}

void require_file(const std::filesystem::path& p, const std::string& what,
                  const std::string& entry) {
    if (!std::filesystem::exists(p))
        throw std::runtime_error(entry + ": missing " + what + " file " + p.string());
}

std::string entry_tag(const char* kind, std::size_t i) {
    return std::string(kind) + " entry " + std::to_string(i);
}

}  // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("manifest parse error in " + path.string() + ": " + e.what());
    }

    DatasetManifest m;
    m.base_dir = std::filesystem::absolute(path).parent_path();
    m.name = doc.value("name", "unnamed");

    if (!doc.contains("training") || !doc["training"].is_array() || doc["training"].empty())
        throw std::runtime_error("manifest has no training entries");

    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc["training"].size(); ++i) {
        const json& e = doc["training"][i];
        const std::string tag = entry_tag("training", i);
        TrainingEntry t;
        if (!e.contains("photo") || !e.contains("landmarks"))
            throw std::runtime_error(tag + ": photo and landmarks are required");
        t.photo = resolve(m.base_dir, e["photo"]);
        t.landmarks = resolve(m.base_dir, e["landmarks"]);
        const bool has_alpha = e.contains("alpha");
        const bool has_trimap = e.contains("trimap");
        if (has_alpha == has_trimap)
            throw std::runtime_error(tag + ": exactly one of alpha/trimap is required");
        if (has_alpha) t.alpha = resolve(m.base_dir, e["alpha"]);
        else t.trimap = resolve(m.base_dir, e["trimap"]);
        if (e.contains("foreground") != e.contains("background"))
            throw std::runtime_error(tag + ": foreground and background must come together");
        if (e.contains("foreground")) {
            t.foreground = resolve(m.base_dir, e["foreground"]);
            t.background = resolve(m.base_dir, e["background"]);
        }
        if (e.contains("sketch")) t.sketch = resolve(m.base_dir, e["sketch"]);

        if (!seen.insert(t.photo.string()).second)
            throw std::runtime_error(tag + ": duplicate photo " + t.photo.string());
        require_file(t.photo, "photo", tag);
        require_file(t.landmarks, "landmark", tag);
        if (!t.alpha.empty()) require_file(t.alpha, "alpha", tag);
        if (!t.trimap.empty()) require_file(t.trimap, "trimap", tag);
        if (!t.foreground.empty()) require_file(t.foreground, "foreground", tag);
        if (!t.background.empty()) require_file(t.background, "background", tag);
        if (!t.sketch.empty()) require_file(t.sketch, "sketch", tag);
        m.training.push_back(std::move(t));
    }

    if (doc.contains("inputs")) {
        for (std::size_t i = 0; i < doc["inputs"].size(); ++i) {
            const json& e = doc["inputs"][i];
            const std::string tag = entry_tag("input", i);
            InputEntry t;
            if (!e.contains("photo") || !e.contains("landmarks"))
                throw std::runtime_error(tag + ": photo and landmarks are required");
            t.photo = resolve(m.base_dir, e["photo"]);
            t.landmarks = resolve(m.base_dir, e["landmarks"]);
            if (e.contains("sketch")) t.sketch = resolve(m.base_dir, e["sketch"]);
            require_file(t.photo, "photo", tag);
            require_file(t.landmarks, "landmark", tag);
            if (!t.sketch.empty()) require_file(t.sketch, "sketch", tag);
            m.inputs.push_back(std::move(t));
        }
    }
    return m;
}

AlphaMatte trimap_to_matte(const LuminanceImage& trimap) {
    const int w = trimap.width(), h = trimap.height();
    enum : std::uint8_t { BG, FG, UNK };
    std::vector<std::uint8_t> cls(static_cast<std::size_t>(w) * h);
    long long n_fg = 0, n_bg = 0, n_unk = 0;
    for (std::size_t i = 0; i < cls.size(); ++i) {
        const double v = trimap.pixels()[i];
        if (std::abs(v) <= 0.1) cls[i] = BG, ++n_bg;
        else if (std::abs(v - 1.0) <= 0.1) cls[i] = FG, ++n_fg;
        else if (std::abs(v - 0.5) <= 0.1) cls[i] = UNK, ++n_unk;
        else
            throw std::runtime_error("trimap_to_matte: value " + std::to_string(v) +
                                     " is not near 0, 0.5 or 1");
    }
    if (n_fg == 0) throw std::runtime_error("trimap_to_matte: no known foreground");
    if (n_bg == 0) throw std::runtime_error("trimap_to_matte: no known background");

    AlphaMatte matte(w, h);
    for (std::size_t i = 0; i < cls.size(); ++i)
        matte.pixels()[i] = cls[i] == FG ? 1.0 : 0.0;
    if (n_unk == 0) return matte;

    // Band width: median maximal run of unknown pixels along rows and columns.
    std::vector<int> runs;
    for (int y = 0; y < h; ++y) {
        int run = 0;
        for (int x = 0; x <= w; ++x) {
            if (x < w && cls[static_cast<std::size_t>(y) * w + x] == UNK) ++run;
            else if (run > 0) {
                runs.push_back(run);
                run = 0;
            }
        }
    }
    for (int x = 0; x < w; ++x) {
        int run = 0;
        for (int y = 0; y <= h; ++y) {
            if (y < h && cls[static_cast<std::size_t>(y) * w + x] == UNK) ++run;
            else if (run > 0) {
                runs.push_back(run);
                run = 0;
            }
        }
    }
    std::sort(runs.begin(), runs.end());
    const double band = runs.size() % 2 == 1
                            ? runs[runs.size() / 2]
                            : 0.5 * (runs[runs.size() / 2 - 1] + runs[runs.size() / 2]);
    const double sigma = std::max(0.5, band / 2.0);
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));

    // Normalized Gaussian over known pixels only.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (cls[static_cast<std::size_t>(y) * w + x] != UNK) continue;
            double num = 0.0, den = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    const std::uint8_t c = cls[static_cast<std::size_t>(yy) * w + xx];
                    if (c == UNK) continue;
                    const double wgt =
                        std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
                    num += wgt * (c == FG ? 1.0 : 0.0);
                    den += wgt;
                }
            }
            matte.at(x, y) = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.5;
        }
    return matte;
}

std::vector<LayeredPhoto> load_training(const DatasetManifest& manifest) {
    std::vector<LayeredPhoto> photos;
    photos.reserve(manifest.training.size());
    int w = -1, hh = -1;
    for (std::size_t i = 0; i < manifest.training.size(); ++i) {
        const auto& e = manifest.training[i];
        const std::string tag = entry_tag("training", i);
        LayeredPhoto p;
        p.photo = read_png_luma(e.photo);
        if (w < 0) {
            w = p.photo.width();
            hh = p.photo.height();
        } else if (p.photo.width() != w || p.photo.height() != hh) {
            throw std::runtime_error(tag + ": photo dimensions " +
                                     std::to_string(p.photo.width()) + "x" +
                                     std::to_string(p.photo.height()) +
                                     " differ from the rest of the set");
        }
        p.alpha = e.alpha.empty() ? trimap_to_matte(read_png_luma(e.trimap))
                                  : read_png_luma(e.alpha);
        if (!p.alpha.same_size(p.photo))
            throw std::runtime_error(tag + ": alpha/trimap dimensions differ from photo");
        if (!e.foreground.empty()) {
            p.portrait = read_png_luma(e.foreground);
            p.background = read_png_luma(e.background);
            if (!p.portrait.same_size(p.photo) || !p.background.same_size(p.photo))
                throw std::runtime_error(tag + ": layer dimensions differ from photo");
        } else {
            // No separated layers: approximate both with the composite
            // (exact wherever alpha is 0 or 1).
            p.portrait = p.photo;
            p.background = p.photo;
            p.exact_layers = false;
        }
        p.landmarks = load_landmarks(e.landmarks);
        try {
            p.landmarks.validate_bounds(w, hh);
        } catch (const std::runtime_error& err) {
            throw std::runtime_error(tag + ": " + err.what());
        }
        if (!e.sketch.empty()) {
            p.sketch = read_png_luma(e.sketch);
            if (!p.sketch->same_size(p.photo))
                throw std::runtime_error(tag + ": sketch dimensions differ from photo");
        }
        photos.push_back(std::move(p));
    }
    return photos;
}

InputPhoto load_input(const DatasetManifest& manifest, std::size_t index) {
    if (index >= manifest.inputs.size())
        throw std::out_of_range("input entry index out of range");
    const auto& e = manifest.inputs[index];
    InputPhoto ip;
    ip.photo = read_png_luma(e.photo);
    ip.landmarks = load_landmarks(e.landmarks);
    ip.landmarks.validate_bounds(ip.photo.width(), ip.photo.height());
    if (!e.sketch.empty()) ip.sketch = read_png_luma(e.sketch);
    return ip;
}

namespace {

json stats_to_json(const ScalarStats& s) {
    return json{{"mean", s.mean}, {"variance", s.variance}, {"count", s.count}};
}

ScalarStats stats_from_json(const json& j) {
    return ScalarStats{j.at("mean"), j.at("variance"), j.at("count")};
}

json moments_to_json(const MomentSummary& m) {
    return json{{"mu_p", m.mu_p},     {"mu_n", m.mu_n},     {"mu_a", m.mu_a},
                {"var_p", m.var_p},   {"var_n", m.var_n},   {"var_a", m.var_a},
                {"cov_pn", m.cov_pn}, {"cov_pa", m.cov_pa}, {"cov_na", m.cov_na},
                {"pixel_count", m.pixel_count}};
}

MomentSummary moments_from_json(const json& j) {
    MomentSummary m;
    m.mu_p = j.at("mu_p");
    m.mu_n = j.at("mu_n");
    m.mu_a = j.at("mu_a");
    m.var_p = j.at("var_p");
    m.var_n = j.at("var_n");
    m.var_a = j.at("var_a");
    m.cov_pn = j.at("cov_pn");
    m.cov_pa = j.at("cov_pa");
    m.cov_na = j.at("cov_na");
    m.pixel_count = j.at("pixel_count");
    return m;
}

LuminanceImage quantized(const LuminanceImage& img) {
    LuminanceImage out(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i)
        out.pixels()[i] = quantize8(img.pixels()[i]) / 255.0;
    return out;
}

}  // namespace

PrecomputeBundle precompute(const DatasetManifest& manifest,
                            const std::filesystem::path& dir) {
    const std::vector<LayeredPhoto> photos = load_training(manifest);
    std::filesystem::create_directories(dir);

    PrecomputeBundle bundle;
    bundle.name = manifest.name;
    bundle.photo_count = static_cast<int>(photos.size());

    // Moments are computed from the quantized rasters exactly as written, so
    // recomputing from the bundle files reproduces them.
    std::vector<LuminanceImage> ps, ns, as;
    char name[64];
    for (std::size_t i = 0; i < photos.size(); ++i) {
        PnaImages pna = pna_images(photos[i]);
        ps.push_back(quantized(pna.p));
        ns.push_back(quantized(pna.n));
        as.push_back(quantized(pna.a));
        std::snprintf(name, sizeof(name), "p_%03zu.png", i);
        bundle.p_files.emplace_back(name);
        write_png_gray(dir / name, ps.back());
        std::snprintf(name, sizeof(name), "n_%03zu.png", i);
        bundle.n_files.emplace_back(name);
        write_png_gray(dir / name, ns.back());
        std::snprintf(name, sizeof(name), "a_%03zu.png", i);
        bundle.a_files.emplace_back(name);
        write_png_gray(dir / name, as.back());
    }
    bundle.moments = summarize_pna(ps, ns, as);
    bundle.face_stats = pooled_face_stats(photos);

    std::vector<LandmarkSet> sets;
    sets.reserve(photos.size());
    for (const auto& p : photos) sets.push_back(p.landmarks);
    bundle.face_template =
        build_template(sets, photos[0].photo.width(), photos[0].photo.height());
    save_template(dir / "template.txt", bundle.face_template);

    json doc;
    doc["version"] = PrecomputeBundle::kVersion;
    doc["name"] = bundle.name;
    doc["photo_count"] = bundle.photo_count;
    doc["moments"] = moments_to_json(bundle.moments);
    doc["face_stats"] = stats_to_json(bundle.face_stats);
    doc["template_file"] = "template.txt";
    doc["p_files"] = bundle.p_files;
    doc["n_files"] = bundle.n_files;
    doc["a_files"] = bundle.a_files;

    std::ofstream out(dir / "bundle.json");
    if (!out) throw std::runtime_error("cannot write bundle.json in " + dir.string());
    out << doc.dump(2) << "\n";
    return bundle;
}

PrecomputeBundle load_bundle(const std::filesystem::path& dir) {
    std::ifstream in(dir / "bundle.json");
    if (!in) throw std::runtime_error("cannot open bundle.json in " + dir.string());
    json doc;
    in >> doc;
    const int version = doc.at("version");
    if (version != PrecomputeBundle::kVersion)
        throw std::runtime_error("bundle version " + std::to_string(version) +
                                 " not supported (expected " +
                                 std::to_string(PrecomputeBundle::kVersion) + ")");
    PrecomputeBundle bundle;
    bundle.name = doc.value("name", "");
    bundle.photo_count = doc.at("photo_count");
    bundle.moments = moments_from_json(doc.at("moments"));
    bundle.face_stats = stats_from_json(doc.at("face_stats"));
    bundle.face_template = load_template(dir / doc.at("template_file").get<std::string>());
    bundle.p_files = doc.at("p_files").get<std::vector<std::string>>();
    bundle.n_files = doc.at("n_files").get<std::vector<std::string>>();
    bundle.a_files = doc.at("a_files").get<std::vector<std::string>>();
    return bundle;
}

}  // namespace blr
