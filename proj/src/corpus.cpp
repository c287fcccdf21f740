#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "image.hpp"
#include "png_io.hpp"

namespace blr {

namespace {

struct FaceGeometry {
    double cx, cy;    // head center
    double rx, ry;    // head radii
    double skin;
    double hair;
    double clothes;
    double eye;
    double shoulder_y;
};

// 68-point landmark layout on the head ellipse (jaw, brows, nose bridge and
// base, eyes, mouth). Positions are parametric in the head geometry; index
// semantics follow the usual 68-point convention (chin = 8, bridge = 27-30).
LandmarkSet make_landmarks(const FaceGeometry& g) {
    std::vector<Point> pts(68);
    constexpr double deg = std::numbers::pi / 180.0;
    for (int k = 0; k <= 16; ++k) {  // jaw, left ear to right ear through chin
        const double th = (180.0 + 11.25 * k) * deg;
        pts[k] = {g.cx + g.rx * std::cos(th), g.cy - g.ry * std::sin(th)};
    }
    for (int k = 0; k < 5; ++k) {  // brows
        const double t = k / 4.0;
        const double arc = 0.06 * g.ry * std::sin(t * std::numbers::pi);
        pts[17 + k] = {g.cx - (0.70 - 0.48 * t) * g.rx, g.cy - 0.42 * g.ry - arc};
        pts[22 + k] = {g.cx + (0.22 + 0.48 * t) * g.rx, g.cy - 0.42 * g.ry - arc};
    }
    for (int k = 0; k < 4; ++k)  // nose bridge, on the midline
        pts[27 + k] = {g.cx, g.cy - 0.30 * g.ry + k * 0.12 * g.ry};
    for (int k = 0; k < 5; ++k)  // nose base
        pts[31 + k] = {g.cx + (k - 2) * 0.08 * g.rx, g.cy + 0.16 * g.ry};
    auto eye_ring = [&](int base, double ex) {
        const double ey = g.cy - 0.22 * g.ry;
        const double erx = 0.16 * g.rx, ery = 0.07 * g.ry;
        for (int k = 0; k < 6; ++k) {
            const double th = k * 60.0 * deg;
            pts[base + k] = {ex + erx * std::cos(th), ey - ery * std::sin(th)};
        }
    };
    eye_ring(36, g.cx - 0.42 * g.rx);
    eye_ring(42, g.cx + 0.42 * g.rx);
    const double my = g.cy + 0.52 * g.ry;
    const double mrx = 0.34 * g.rx, mry = 0.11 * g.ry;
    for (int k = 0; k < 12; ++k) {  // outer lips
        const double th = k * 30.0 * deg;
        pts[48 + k] = {g.cx + mrx * std::cos(th), my - mry * std::sin(th)};
    }
    for (int k = 0; k < 8; ++k) {  // inner lips
        const double th = k * 45.0 * deg;
        pts[60 + k] = {g.cx + 0.6 * mrx * std::cos(th), my - 0.5 * mry * std::sin(th)};
    }
    return LandmarkSet(std::move(pts));
}

struct ItemPattern {
    FaceGeometry geom;
    double bg_theta, bg_lo, bg_hi, stripe_period, stripe_phase, stripe_amp;
    double tex_phase_x, tex_phase_y;
};

bool in_ellipse(double x, double y, double cx, double cy, double rx, double ry) {
    const double dx = (x - cx) / rx, dy = (y - cy) / ry;
    return dx * dx + dy * dy <= 1.0;
}

// Portrait membership: head ellipse, neck, shoulder slab.
bool in_portrait(const FaceGeometry& g, int height, double x, double y) {
    if (in_ellipse(x, y, g.cx, g.cy, g.rx, g.ry)) return true;
    if (y >= g.cy + 0.55 * g.ry && y < g.shoulder_y &&
        std::abs(x - g.cx) <= 0.45 * g.rx)
        return true;  // neck
    if (y >= g.shoulder_y && y < height) {
        const double spread = 1.3 * g.rx + 0.9 * (y - g.shoulder_y);
        return std::abs(x - g.cx) <= spread;
    }
    return false;
}

double portrait_tone(const FaceGeometry& g, double x, double y) {
    // clothes
    if (y >= g.shoulder_y - 1.0) return g.clothes;
    // hair cap on the upper head
    if (in_ellipse(x, y, g.cx, g.cy, g.rx, g.ry) && y < g.cy - 0.45 * g.ry)
        return g.hair;
    // eyes
    if (in_ellipse(x, y, g.cx - 0.42 * g.rx, g.cy - 0.22 * g.ry, 0.16 * g.rx, 0.08 * g.ry) ||
        in_ellipse(x, y, g.cx + 0.42 * g.rx, g.cy - 0.22 * g.ry, 0.16 * g.rx, 0.08 * g.ry))
        return g.eye;
    // brows
    if ((std::abs(y - (g.cy - 0.42 * g.ry)) <= 0.035 * g.ry) &&
        (std::abs(x - (g.cx - 0.46 * g.rx)) <= 0.26 * g.rx ||
         std::abs(x - (g.cx + 0.46 * g.rx)) <= 0.26 * g.rx))
        return g.skin - 0.30;
    // nose line
    if (std::abs(x - g.cx) <= 0.035 * g.rx && y >= g.cy - 0.28 * g.ry &&
        y <= g.cy + 0.16 * g.ry)
        return g.skin - 0.12;
    // mouth
    if (in_ellipse(x, y, g.cx, g.cy + 0.52 * g.ry, 0.34 * g.rx, 0.10 * g.ry))
        return g.skin - 0.25;
    return g.skin;
}

double background_tone(const ItemPattern& it, int width, int height, double x,
                       double y) {
    const double nx = x / width, ny = y / height;
    const double proj =
        0.5 + 0.5 * ((nx - 0.5) * std::cos(it.bg_theta) + (ny - 0.5) * std::sin(it.bg_theta));
    double v = it.bg_lo + (it.bg_hi - it.bg_lo) * proj;
    v += it.stripe_amp * std::sin(2.0 * std::numbers::pi * (x + y * 0.35) /
                                      it.stripe_period +
                                  it.stripe_phase);
    return v;
}

}  // namespace

SyntheticCorpus generate_corpus(const CorpusParams& params) {
    SyntheticCorpus corpus;
    corpus.input_count = params.input_count;
    Rng rng(params.seed);
    const int w = params.width, h = params.height;
    const double sx = w / 100.0, sy = h / 125.0;

    for (int item = 0; item < params.training_count; ++item) {
        ItemPattern it;
        FaceGeometry& g = it.geom;
        g.cx = 0.5 * w + rng.uniform(-3.0, 3.0) * sx;
        g.cy = 0.42 * h + rng.uniform(-3.0, 3.0) * sy;
        g.rx = 0.26 * w * rng.uniform(0.92, 1.08);
        g.ry = 0.27 * h * rng.uniform(0.92, 1.08);
        g.skin = rng.uniform(0.50, 0.68);
        g.hair = rng.uniform(0.14, 0.34);
        g.clothes = rng.uniform(0.25, 0.75);
        g.eye = 0.15;
        g.shoulder_y = g.cy + 1.25 * g.ry;

        it.bg_theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
        it.bg_lo = rng.uniform(0.30, 0.55);
        it.bg_hi = it.bg_lo + rng.uniform(0.18, 0.35);
        it.stripe_period = rng.uniform(9.0, 15.0);
        it.stripe_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        it.stripe_amp = rng.uniform(0.015, 0.035);
        it.tex_phase_x = rng.uniform(0.0, 2.0 * std::numbers::pi);
        it.tex_phase_y = rng.uniform(0.0, 2.0 * std::numbers::pi);

        LayeredPhoto photo;
        photo.portrait = LuminanceImage(w, h);
        photo.background = LuminanceImage(w, h);
        photo.alpha = AlphaMatte(w, h);

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                // 2x2 subsample membership gives the matte a soft edge.
                int hits = 0;
                for (double ox : {-0.25, 0.25})
                    for (double oy : {-0.25, 0.25})
                        if (in_portrait(g, h, px + ox, py + oy)) ++hits;
                photo.alpha.at(x, y) = hits / 4.0;

                double fg = portrait_tone(g, px, py);
                fg += 0.02 * std::sin(2.0 * std::numbers::pi * px / 17.0 + it.tex_phase_x) *
                      std::sin(2.0 * std::numbers::pi * py / 23.0 + it.tex_phase_y);
                fg += rng.uniform(-0.012, 0.012);
                photo.portrait.at(x, y) = std::clamp(fg, 0.02, 0.98);

                double bg = background_tone(it, w, h, px, py);
                bg += rng.uniform(-0.012, 0.012);
                photo.background.at(x, y) = std::clamp(bg, 0.02, 0.98);
            }
        }
        photo.photo = compose(photo.portrait, photo.background, photo.alpha);
        photo.landmarks = make_landmarks(g);
        photo.landmarks.validate_bounds(w, h);

        // Procedural sketch: dark edges of the composite on white paper.
        LuminanceImage sketch(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
                const int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
                const double gx = (photo.photo.at(xr, y) - photo.photo.at(xl, y)) / 2.0;
                const double gy = (photo.photo.at(x, yd) - photo.photo.at(x, yu)) / 2.0;
                sketch.at(x, y) =
                    std::clamp(1.0 - 3.5 * std::sqrt(gx * gx + gy * gy), 0.0, 1.0);
            }
        photo.sketch = std::move(sketch);
        corpus.training.push_back(std::move(photo));
    }
    return corpus;
}

void write_corpus_dataset(const SyntheticCorpus& corpus,
                          const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "train");
    fs::create_directories(dir / "input");

    nlohmann::json doc;
    doc["name"] = "synthetic-corpus";
    doc["training"] = nlohmann::json::array();
    doc["inputs"] = nlohmann::json::array();

    char buf[64];
    for (std::size_t i = 0; i < corpus.training.size(); ++i) {
        const auto& p = corpus.training[i];
        auto file = [&](const char* stem) {
            std::snprintf(buf, sizeof(buf), "train/%s_%02zu", stem, i);
            return std::string(buf);
        };
        const std::string photo = file("photo") + ".png";
        const std::string alpha = file("alpha") + ".png";
        const std::string fg = file("fg") + ".png";
        const std::string bg = file("bg") + ".png";
        const std::string lms = file("landmarks") + ".txt";
        const std::string sk = file("sketch") + ".png";
        write_png_gray(dir / photo, p.photo);
        write_png_gray(dir / alpha, p.alpha);
        write_png_gray(dir / fg, p.portrait);
        write_png_gray(dir / bg, p.background);
        write_png_gray(dir / sk, *p.sketch);
        save_landmarks(dir / lms, p.landmarks);
        doc["training"].push_back({{"photo", photo},
                                   {"alpha", alpha},
                                   {"foreground", fg},
                                   {"background", bg},
                                   {"landmarks", lms},
                                   {"sketch", sk}});
    }
    for (int i = 0; i < corpus.input_count; ++i) {
        const auto& p = corpus.training[i];
        std::snprintf(buf, sizeof(buf), "input/photo_%02d.png", i);
        const std::string photo = buf;
        std::snprintf(buf, sizeof(buf), "input/landmarks_%02d.txt", i);
        const std::string lms = buf;
        std::snprintf(buf, sizeof(buf), "input/sketch_%02d.png", i);
        const std::string sk = buf;
        write_png_gray(dir / photo, p.photo);
        save_landmarks(dir / lms, p.landmarks);
        write_png_gray(dir / sk, *p.sketch);
        doc["inputs"].push_back({{"photo", photo}, {"landmarks", lms}, {"sketch", sk}});
    }

    std::ofstream out(dir / "manifest.json");
    if (!out)
        throw std::runtime_error("cannot write manifest.json in " + dir.string());
    out << doc.dump(2) << "\n";
}

}  // namespace blr
