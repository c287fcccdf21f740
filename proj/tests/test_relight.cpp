#include <doctest.h>

#include <cmath>
#include <vector>

#include "blr.hpp"
#include "relight.hpp"
#include "testutil.hpp"

using namespace blr;

namespace {

// Reference CLAHE written straight from the definition: per pixel, rebuild
// the four neighboring tile histograms and blend. Slow but independent of
// the production path's precomputed LUTs.
double reference_clahe_pixel(const LuminanceImage& img, const ClaheParams& p, int px,
                             int py) {
    const int w = img.width(), h = img.height();
    std::vector<int> xb(p.tile_cols + 1), yb(p.tile_rows + 1);
    for (int c = 0; c <= p.tile_cols; ++c) xb[c] = c * w / p.tile_cols;
    for (int r = 0; r <= p.tile_rows; ++r) yb[r] = r * h / p.tile_rows;

    auto tile_map = [&](int tr, int tc, double v) {
        std::vector<double> hist(p.bins, 0.0);
        long long n = 0;
        for (int y = yb[tr]; y < yb[tr + 1]; ++y)
            for (int x = xb[tc]; x < xb[tc + 1]; ++x) {
                const double cv = std::clamp(img.at(x, y), 0.0, 1.0);
                hist[std::min(p.bins - 1, static_cast<int>(cv * p.bins))] += 1.0;
                ++n;
            }
        const double limit = p.clip_limit * n;
        double excess = 0.0;
        for (double& b : hist)
            if (b > limit) {
                excess += b - limit;
                b = limit;
            }
        for (double& b : hist) b += excess / p.bins;
        const double cv = std::clamp(v, 0.0, 1.0);
        const int bin = std::min(p.bins - 1, static_cast<int>(cv * p.bins));
        double cdf = 0.0;
        for (int k = 0; k <= bin; ++k) cdf += hist[k];
        return cdf / n;
    };

    std::vector<double> cx(p.tile_cols), cy(p.tile_rows);
    for (int c = 0; c < p.tile_cols; ++c) cx[c] = (xb[c] + xb[c + 1]) / 2.0;
    for (int r = 0; r < p.tile_rows; ++r) cy[r] = (yb[r] + yb[r + 1]) / 2.0;

    const double gx = px + 0.5, gy = py + 0.5;
    int c0 = 0, r0 = 0;
    while (c0 + 1 < p.tile_cols && cx[c0 + 1] <= gx) ++c0;
    while (r0 + 1 < p.tile_rows && cy[r0 + 1] <= gy) ++r0;
    const int c1 = std::min(c0 + 1, p.tile_cols - 1);
    const int r1 = std::min(r0 + 1, p.tile_rows - 1);
    const double tx =
        (c1 == c0 || gx <= cx[c0]) ? 0.0 : std::min(1.0, (gx - cx[c0]) / (cx[c1] - cx[c0]));
    const double ty =
        (r1 == r0 || gy <= cy[r0]) ? 0.0 : std::min(1.0, (gy - cy[r0]) / (cy[r1] - cy[r0]));
    const double v = img.at(px, py);
    return (1 - ty) * ((1 - tx) * tile_map(r0, c0, v) + tx * tile_map(r0, c1, v)) +
           ty * ((1 - tx) * tile_map(r1, c0, v) + tx * tile_map(r1, c1, v));
}

LandmarkSet synthetic_face_landmarks(double cx, double cy, double rx, double ry) {
    std::vector<Point> pts;
    for (int k = 0; k < 12; ++k) {
        const double th = 2.0 * M_PI * k / 12.0;
        pts.push_back({cx + rx * std::cos(th), cy + ry * std::sin(th)});
    }
    return LandmarkSet(std::move(pts));
}

}  // namespace

TEST_CASE("clahe constant image stays constant") {
    const ClaheParams params{4, 4, 0.05, 64};
    const LuminanceImage out = clahe(LuminanceImage(32, 32, 0.37), params);
    for (std::size_t i = 1; i < out.size(); ++i)
        CHECK(out.pixels()[i] == out.pixels()[0]);
}

TEST_CASE("clahe preserves intensity order inside a tile") {
    Rng rng(41);
    const LuminanceImage img = testutil::random_image(rng, 40, 40);
    const ClaheParams params{2, 2, 0.1, 128};
    const LuminanceImage out = clahe(img, params);
    // Pixels well inside tile (0,0) keep their relative order.
    for (int it = 0; it < 200; ++it) {
        const int x1 = rng.uniform_int(1, 8), y1 = rng.uniform_int(1, 8);
        const int x2 = rng.uniform_int(1, 8), y2 = rng.uniform_int(1, 8);
        if (img.at(x1, y1) <= img.at(x2, y2)) {
            CHECK(out.at(x1, y1) <= out.at(x2, y2) + 1e-12);
        }
    }
}

TEST_CASE("clahe matches the per-pixel reference and boosts contrast") {
    LuminanceImage img(64, 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) img.at(x, y) = x < 32 ? 0.4 : 0.6;
    const ClaheParams params{2, 2, 0.9, 256};
    const LuminanceImage out = clahe(img, params);

    double lo = 1e9, hi = -1e9;
    for (double v : out.pixels()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    CHECK(hi - lo > 0.2);  // input contrast was 0.2

    for (int it = 0; it < 60; ++it) {
        const int x = (it * 13) % 64, y = (it * 29) % 64;
        CHECK(out.at(x, y) ==
              doctest::Approx(reference_clahe_pixel(img, params, x, y)).epsilon(1e-12));
    }

    Rng rng(42);
    const LuminanceImage noisy = testutil::random_image(rng, 48, 40);
    const ClaheParams p2{3, 3, 0.02, 128};
    const LuminanceImage out2 = clahe(noisy, p2);
    for (int it = 0; it < 60; ++it) {
        const int x = (it * 17) % 48, y = (it * 11) % 40;
        CHECK(out2.at(x, y) ==
              doctest::Approx(reference_clahe_pixel(noisy, p2, x, y)).epsilon(1e-12));
    }
}

TEST_CASE("clahe parameter validation") {
    CHECK_THROWS(clahe(LuminanceImage(4, 4, 0.5), ClaheParams{8, 8, 0.01, 256}));
    CHECK_THROWS(clahe(LuminanceImage(32, 32, 0.5), ClaheParams{0, 2, 0.1, 64}));
    CHECK_THROWS(clahe(LuminanceImage(32, 32, 0.5), ClaheParams{2, 2, 1e-9, 64}));
}

TEST_CASE("split_halves partitions the face across the midline") {
    // 68-point set: only the midline indices and the hull matter here.
    std::vector<Point> pts(68);
    const double cx = 20.0, cy = 16.0;
    for (int k = 0; k < 68; ++k) {
        const double th = 2.0 * M_PI * k / 68.0;
        pts[k] = {cx + 12.0 * std::cos(th), cy + 10.0 * std::sin(th)};
    }
    pts[27] = {cx, 8.0};
    pts[28] = {cx, 10.0};
    pts[29] = {cx, 12.0};
    pts[30] = {cx, 14.0};
    pts[8] = {cx, 26.0};
    const LandmarkSet lms(pts);

    const FaceHalves halves = split_halves(lms, 40, 32);
    CHECK(halves.axis == doctest::Approx(cx).epsilon(1e-9));

    const RegionMask face = face_mask(lms, 40, 32);
    std::size_t overlap = 0, mismatch = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 40; ++x) {
            if (halves.left.at(x, y) && halves.right.at(x, y)) ++overlap;
            if ((halves.left.at(x, y) || halves.right.at(x, y)) != face.at(x, y))
                ++mismatch;
        }
    CHECK(overlap == 0);
    CHECK(mismatch == 0);

    // Symmetric configuration: halves within one pixel column of each other.
    const auto l = static_cast<long long>(halves.left.count());
    const auto r = static_cast<long long>(halves.right.count());
    CHECK(std::abs(l - r) <= 32);
}

TEST_CASE("detect_shadow_side") {
    const LandmarkSet lms = synthetic_face_landmarks(16, 16, 12, 12);
    const FaceHalves halves = split_halves(lms, 32, 32);

    SUBCASE("uniform image") {
        CHECK(detect_shadow_side(LuminanceImage(32, 32, 0.5), halves.left, halves.right,
                                 0.08) == ShadowSide::none);
    }
    SUBCASE("dark left half") {
        LuminanceImage img(32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) img.at(x, y) = x < 16 ? 0.2 : 0.6;
        CHECK(detect_shadow_side(img, halves.left, halves.right, 0.08) ==
              ShadowSide::left);
    }
    SUBCASE("difference below threshold") {
        LuminanceImage img(32, 32);
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) img.at(x, y) = x < 16 ? 0.50 : 0.55;
        CHECK(detect_shadow_side(img, halves.left, halves.right, 0.08) ==
              ShadowSide::none);
    }
    SUBCASE("empty mask rejected") {
        CHECK_THROWS(detect_shadow_side(LuminanceImage(32, 32, 0.5), RegionMask(32, 32),
                                        halves.right, 0.08));
    }
}

TEST_CASE("ncc") {
    const std::vector<double> cross{0, 1, 0, 1, 1, 1, 0, 1, 0};
    CHECK(ncc(cross, cross) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> negated(9);
    for (int i = 0; i < 9; ++i) negated[i] = 1.0 - cross[i];
    // Definitional oracle: means are 5/9 and 4/9, the normalized dot is -1.
    double mc = 0, mn = 0;
    for (int i = 0; i < 9; ++i) {
        mc += cross[i];
        mn += negated[i];
    }
    mc /= 9;
    mn /= 9;
    double num = 0, sc = 0, sn = 0;
    for (int i = 0; i < 9; ++i) {
        num += (cross[i] - mc) * (negated[i] - mn);
        sc += (cross[i] - mc) * (cross[i] - mc);
        sn += (negated[i] - mn) * (negated[i] - mn);
    }
    CHECK(ncc(cross, negated) ==
          doctest::Approx(num / std::sqrt(sc * sn)).epsilon(1e-12));
    CHECK(ncc(cross, negated) == doctest::Approx(-1.0).epsilon(1e-12));

    SUBCASE("affine luminance invariance") {
        Rng rng(43);
        for (int it = 0; it < 50; ++it) {
            std::vector<double> t(25), u(25);
            for (int i = 0; i < 25; ++i) t[i] = rng.uniform(0.0, 1.0);
            const double a = rng.uniform(0.01, 3.0), b = rng.uniform(-1.0, 1.0);
            for (int i = 0; i < 25; ++i) u[i] = a * t[i] + b;
            CHECK(ncc(t, u) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("constant patches return zero") {
        const std::vector<double> flat(9, 0.4);
        CHECK(ncc(flat, cross) == 0.0);
        CHECK(ncc(cross, flat) == 0.0);
        CHECK(ncc(flat, flat) == 0.0);
    }
    SUBCASE("size mismatch rejected") {
        CHECK_THROWS(ncc(cross, std::vector<double>(4, 0.0)));
    }
}

namespace {

// Mirror-symmetric textured image around the vertical center line.
LuminanceImage mirror_symmetric_image(int w, int h, Rng& rng) {
    LuminanceImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w / 2; ++x) {
            const double v =
                0.3 + 0.3 * std::sin(0.7 * x + 0.4 * y) + rng.uniform(0.0, 0.2);
            img.at(x, y) = v;
            img.at(w - 1 - x, y) = v;
        }
    return img;
}

}  // namespace

TEST_CASE("symmetric_match finds the exact mirror on symmetric images") {
    Rng rng(44);
    const int w = 32, h = 32;
    const LuminanceImage img = mirror_symmetric_image(w, h, rng);
    const double axis = w / 2.0;

    RegionMask lit(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = w / 2; x < w; ++x) lit.set(x, y, true);

    SUBCASE("plain symmetry") {
        for (int it = 0; it < 10; ++it) {
            const int px = rng.uniform_int(6, 12), py = rng.uniform_int(8, 24);
            const ShadowCorrespondence c = symmetric_match(img, px, py, axis, lit, 7, 3);
            CHECK(c.qx == w - 1 - px);
            CHECK(c.qy == py);
        }
    }
    SUBCASE("lit half relit by an affine map keeps the mirror match") {
        LuminanceImage relit = img;
        for (int y = 0; y < h; ++y)
            for (int x = w / 2; x < w; ++x) relit.at(x, y) = 1.4 * relit.at(x, y) + 0.05;
        for (int it = 0; it < 10; ++it) {
            const int px = rng.uniform_int(6, 12), py = rng.uniform_int(8, 24);
            const ShadowCorrespondence c =
                symmetric_match(relit, px, py, axis, lit, 7, 3);
            CHECK(c.qx == w - 1 - px);
            CHECK(c.qy == py);
        }
    }
    SUBCASE("no lit candidates rejected") {
        CHECK_THROWS(symmetric_match(img, 8, 16, axis, RegionMask(w, h), 7, 3));
    }
}

TEST_CASE("symmetric_match agrees with an exhaustive oracle on shifted features") {
    // Symmetric low-amplitude background; the right-half feature is shifted
    // two pixels down relative to the left one's mirror.
    const int w = 32, h = 32;
    LuminanceImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(x, w - 1 - x);
            img.at(x, y) = 0.5 + 0.05 * std::sin(0.5 * sx) * std::cos(0.6 * y);
        }
    auto blob = [&](int bx, int by) {
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx)
                img.at(bx + dx, by + dy) -= 0.35 * std::exp(-(dx * dx + dy * dy) / 2.0);
    };
    blob(8, 16);              // left feature
    blob(w - 1 - 8, 16 + 2);  // its mirror, shifted down by 2

    const double axis = w / 2.0;
    RegionMask lit(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = w / 2; x < w; ++x) lit.set(x, y, true);

    const int px = 8, py = 16, patch = 7, window = 5;
    const ShadowCorrespondence c = symmetric_match(img, px, py, axis, lit, patch, window);

    // Exhaustive scan with independently computed mirrored NCC.
    const int mx = static_cast<int>(std::lround(2.0 * axis - px - 1.0));
    double best = -2.0;
    int bx = -1, by = -1;
    long long bdisp = 0;
    for (int dy = -window; dy <= window; ++dy)
        for (int dx = -window; dx <= window; ++dx) {
            const int qx = mx + dx, qy = py + dy;
            if (qx < 0 || qx >= w || qy < 0 || qy >= h || !lit.at(qx, qy)) continue;
            const auto ref = extract_patch(img, px, py, patch);
            const auto cand = extract_patch_mirrored(img, qx, qy, patch);
            const double score = ncc(ref, cand);
            const long long disp = dx * dx + dy * dy;
            if (score > best || (score == best && disp < bdisp)) {
                best = score;
                bx = qx;
                by = qy;
                bdisp = disp;
            }
        }
    CHECK(c.qx == bx);
    CHECK(c.qy == by);
    CHECK(by == 16 + 2);  // the shifted feature is the best match
}

TEST_CASE("gamma_correct") {
    SUBCASE("equal patch means leave the pixel unchanged") {
        LuminanceImage img(4, 4, 0.37);
        const ShadowCorrespondence c{1, 1, 2, 2, 0.4, 0.4};
        const LuminanceImage out = gamma_correct(img, std::vector{c});
        CHECK(out.at(1, 1) == doctest::Approx(0.37).epsilon(1e-15));
    }
    SUBCASE("fixed points and the spot value") {
        LuminanceImage img(4, 1);
        img.at(0, 0) = 1.0;
        img.at(1, 0) = 0.0;
        img.at(2, 0) = 0.25;
        img.at(3, 0) = 0.9;
        const std::vector<ShadowCorrespondence> cs{
            {0, 0, 0, 0, 0.3, 0.6}, {1, 0, 0, 0, 0.3, 0.6}, {2, 0, 0, 0, 0.2, 0.4}};
        const LuminanceImage out = gamma_correct(img, cs);
        CHECK(out.at(0, 0) == 1.0);
        CHECK(out.at(1, 0) == 0.0);
        CHECK(std::abs(out.at(2, 0) - 0.5) <= 1e-12);  // 0.25^(0.2/0.4)
        CHECK(out.at(3, 0) == 0.9);  // untouched pixel
    }
    SUBCASE("brightening whenever the exponent is below one") {
        Rng rng(46);
        for (int it = 0; it < 200; ++it) {
            const double v = rng.uniform(0.01, 0.99);
            const double mp = rng.uniform(0.05, 0.5);
            const double mq = mp + rng.uniform(0.01, 0.4);
            LuminanceImage img(1, 1, v);
            const LuminanceImage out =
                gamma_correct(img, std::vector{ShadowCorrespondence{0, 0, 0, 0, mp, mq}});
            CHECK(out.at(0, 0) > v);
        }
    }
    SUBCASE("zero lit mean skips and flags") {
        LuminanceImage img(2, 1, 0.5);
        int skipped = 0;
        const LuminanceImage out = gamma_correct(
            img, std::vector{ShadowCorrespondence{0, 0, 1, 0, 0.3, 0.0}}, &skipped);
        CHECK(skipped == 1);
        CHECK(out.at(0, 0) == 0.5);
    }
    SUBCASE("values above one are clamped before exponentiation") {
        LuminanceImage img(1, 1, 1.7);
        const LuminanceImage out =
            gamma_correct(img, std::vector{ShadowCorrespondence{0, 0, 0, 0, 0.2, 0.4}});
        CHECK(out.at(0, 0) == 1.0);
    }
}

TEST_CASE("correct_side_lighting") {
    const int w = 48, h = 48;
    const LandmarkSet lms = synthetic_face_landmarks(24, 24, 18, 18);

    SUBCASE("no shadow passes through bit-identical") {
        Rng rng(47);
        LuminanceImage img(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(x, y) = 0.5 + 0.1 * std::sin(0.3 * x) + rng.uniform(0.0, 0.05);
        const SideLightResult res = correct_side_lighting(img, lms, SideLightParams{});
        CHECK(res.side == ShadowSide::none);
        CHECK(testutil::max_abs_diff(res.image, img) == 0.0);
    }
    SUBCASE("left shadow raises the dark half") {
        Rng rng(48);
        LuminanceImage img(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const double base = 0.55 + 0.15 * std::sin(0.5 * x) * std::cos(0.4 * y) +
                                    rng.uniform(0.0, 0.05);
                img.at(x, y) = x < w / 2 ? base * 0.45 : base;
            }
        SideLightParams params;
        params.clahe.tile_cols = 4;
        params.clahe.tile_rows = 4;
        const SideLightResult res = correct_side_lighting(img, lms, params);
        CHECK(res.side == ShadowSide::left);
        CHECK(res.corrected > 0);

        const FaceHalves halves = split_halves(lms, w, h);
        const double before = masked_stats(clahe(img, params.clahe), halves.left).mean;
        const double after = masked_stats(res.image, halves.left).mean;
        CHECK(after > before);
    }
}
