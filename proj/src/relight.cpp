#include "relight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blr.hpp"

namespace blr {

namespace {

int value_bin(double v, int bins) {
    const double c = std::clamp(v, 0.0, 1.0);
    return std::min(bins - 1, static_cast<int>(c * bins));
}

}  // namespace

LuminanceImage clahe(const LuminanceImage& img, const ClaheParams& params) {
    const int w = img.width(), h = img.height();
    const int cols = params.tile_cols, rows = params.tile_rows;
    const int bins = params.bins;
    if (cols < 1 || rows < 1 || bins < 2)
        throw std::invalid_argument("clahe: bad tile grid or bin count");
    if (params.clip_limit < 1.0 / bins)
        throw std::invalid_argument("clahe: clip limit below 1/bins");
    if (w < cols || h < rows)
        throw std::invalid_argument("clahe: degenerate dimensions (image smaller than tile grid)");

    // Tile boundaries and centers.
    std::vector<int> xb(cols + 1), yb(rows + 1);
    for (int c = 0; c <= cols; ++c) xb[c] = static_cast<int>(static_cast<long long>(c) * w / cols);
    for (int r = 0; r <= rows; ++r) yb[r] = static_cast<int>(static_cast<long long>(r) * h / rows);
    std::vector<double> cx(cols), cy(rows);
    for (int c = 0; c < cols; ++c) cx[c] = (xb[c] + xb[c + 1]) / 2.0;
    for (int r = 0; r < rows; ++r) cy[r] = (yb[r] + yb[r + 1]) / 2.0;

    // Per-tile clipped-histogram mapping: bin k -> cdf(k)/n.
    std::vector<std::vector<double>> maps(static_cast<std::size_t>(cols) * rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            std::vector<double> hist(bins, 0.0);
            long long n = 0;
            for (int y = yb[r]; y < yb[r + 1]; ++y)
                for (int x = xb[c]; x < xb[c + 1]; ++x) {
                    hist[value_bin(img.at(x, y), bins)] += 1.0;
                    ++n;
                }
            const double limit = params.clip_limit * static_cast<double>(n);
            double excess = 0.0;
            for (double& v : hist)
                if (v > limit) {
                    excess += v - limit;
                    v = limit;
                }
            const double share = excess / bins;
            double cdf = 0.0;
            auto& map = maps[static_cast<std::size_t>(r) * cols + c];
            map.resize(bins);
            for (int k = 0; k < bins; ++k) {
                cdf += hist[k] + share;
                map[k] = cdf / static_cast<double>(n);
            }
        }
    }

    // Bilinear blend between the four neighboring tile mappings.
    LuminanceImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const double gy = y + 0.5;
        int r0 = rows - 1;
        for (int r = 0; r < rows; ++r)
            if (cy[r] <= gy) r0 = r;
            else break;
        if (gy < cy[0]) r0 = 0;
        const int r1 = std::min(r0 + 1, rows - 1);
        const double ty = (r1 == r0 || gy <= cy[r0])
                              ? 0.0
                              : std::min(1.0, (gy - cy[r0]) / (cy[r1] - cy[r0]));
        for (int x = 0; x < w; ++x) {
            const double gx = x + 0.5;
            int c0 = cols - 1;
            for (int c = 0; c < cols; ++c)
                if (cx[c] <= gx) c0 = c;
                else break;
            if (gx < cx[0]) c0 = 0;
            const int c1 = std::min(c0 + 1, cols - 1);
            const double tx = (c1 == c0 || gx <= cx[c0])
                                  ? 0.0
                                  : std::min(1.0, (gx - cx[c0]) / (cx[c1] - cx[c0]));
            const int k = value_bin(img.at(x, y), bins);
            const double m00 = maps[static_cast<std::size_t>(r0) * cols + c0][k];
            const double m10 = maps[static_cast<std::size_t>(r0) * cols + c1][k];
            const double m01 = maps[static_cast<std::size_t>(r1) * cols + c0][k];
            const double m11 = maps[static_cast<std::size_t>(r1) * cols + c1][k];
            out.at(x, y) = (1.0 - ty) * ((1.0 - tx) * m00 + tx * m10) +
                           ty * ((1.0 - tx) * m01 + tx * m11);
        }
    }
    return out;
}

FaceHalves split_halves(const LandmarkSet& landmarks, int width, int height) {
    const RegionMask face = face_mask(landmarks, width, height);

    // Midline: nose bridge + chin for the 68-point convention.
    double axis = 0.0;
    if (landmarks.size() == 68) {
        const int midline[] = {27, 28, 29, 30, 8};
        for (int i : midline) axis += landmarks[i].x;
        axis /= 5.0;
    } else {
        for (const auto& p : landmarks.points()) axis += p.x;
        axis /= static_cast<double>(landmarks.size());
    }

    FaceHalves halves{RegionMask(width, height), RegionMask(width, height), axis};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (face.at(x, y)) {
                if (x + 0.5 < axis) halves.left.set(x, y, true);
                else halves.right.set(x, y, true);
            }
    return halves;
}

const char* to_string(ShadowSide side) {
    switch (side) {
        case ShadowSide::none: return "none";
        case ShadowSide::left: return "left";
        case ShadowSide::right: return "right";
    }
    return "unknown";
}

ShadowSide detect_shadow_side(const LuminanceImage& img, const RegionMask& left,
                              const RegionMask& right, double threshold) {
    const double ml = masked_stats(img, left).mean;
    const double mr = masked_stats(img, right).mean;
    if (!(std::abs(ml - mr) > threshold)) return ShadowSide::none;
    return ml < mr ? ShadowSide::left : ShadowSide::right;
}

double ncc(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("ncc: patch size mismatch");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double num = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        num += da * db;
        sa += da * da;
        sb += db * db;
    }
    if (sa <= 1e-30 || sb <= 1e-30) return 0.0;  // constant patch convention
    return num / std::sqrt(sa * sb);
}

std::vector<double> extract_patch(const LuminanceImage& img, int cx, int cy, int size) {
    const int half = size / 2;
    std::vector<double> patch(static_cast<std::size_t>(size) * size);
    std::size_t i = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = std::clamp(cy + dy, 0, img.height() - 1);
        for (int dx = -half; dx <= half; ++dx) {
            const int x = std::clamp(cx + dx, 0, img.width() - 1);
            patch[i++] = img.at(x, y);
        }
    }
    return patch;
}

std::vector<double> extract_patch_mirrored(const LuminanceImage& img, int cx, int cy,
                                           int size) {
    const int half = size / 2;
    std::vector<double> patch(static_cast<std::size_t>(size) * size);
    std::size_t i = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = std::clamp(cy + dy, 0, img.height() - 1);
        for (int dx = half; dx >= -half; --dx) {
            const int x = std::clamp(cx + dx, 0, img.width() - 1);
            patch[i++] = img.at(x, y);
        }
    }
    return patch;
}

ShadowCorrespondence symmetric_match(const LuminanceImage& img, int px, int py,
                                     double axis, const RegionMask& lit_mask,
                                     int patch_size, int window) {
    // Mirror of the pixel center across the vertical line x=axis.
    const int mx = static_cast<int>(std::lround(2.0 * axis - px - 1.0));
    const int my = py;

    const std::vector<double> ref = extract_patch(img, px, py, patch_size);

    bool found = false;
    double best_score = 0.0;
    long long best_disp = 0;
    int best_x = 0, best_y = 0;
    for (int dy = -window; dy <= window; ++dy) {
        const int qy = my + dy;
        if (qy < 0 || qy >= img.height()) continue;
        for (int dx = -window; dx <= window; ++dx) {
            const int qx = mx + dx;
            if (qx < 0 || qx >= img.width()) continue;
            if (!lit_mask.at(qx, qy)) continue;
            // Mirrored extraction: the matched half is the reflection of the
            // shadow half, so symmetric features line up column-reversed.
            const double score = ncc(ref, extract_patch_mirrored(img, qx, qy, patch_size));
            const long long disp =
                static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
            bool better = false;
            if (!found || score > best_score) better = true;
            else if (score == best_score) {
                if (disp < best_disp) better = true;
                else if (disp == best_disp &&
                         (qy < best_y || (qy == best_y && qx < best_x)))
                    better = true;
            }
            if (better) {
                found = true;
                best_score = score;
                best_disp = disp;
                best_x = qx;
                best_y = qy;
            }
        }
    }
    if (!found)
        throw std::runtime_error("symmetric_match: no valid candidate in lit half");

    double mean_ref = 0.0;
    for (double v : ref) mean_ref += v;
    mean_ref /= static_cast<double>(ref.size());
    const std::vector<double> lit = extract_patch(img, best_x, best_y, patch_size);
    double mean_lit = 0.0;
    for (double v : lit) mean_lit += v;
    mean_lit /= static_cast<double>(lit.size());

    return ShadowCorrespondence{px, py, best_x, best_y, mean_ref, mean_lit};
}

LuminanceImage gamma_correct(const LuminanceImage& img,
                             std::span<const ShadowCorrespondence> correspondences,
                             int* skipped) {
    LuminanceImage out = img;
    int skip_count = 0;
    for (const auto& c : correspondences) {
        if (!(c.mean_lit > 0.0)) {
            ++skip_count;
            continue;
        }
        const double v = std::clamp(img.at(c.px, c.py), 0.0, 1.0);
        out.at(c.px, c.py) = std::pow(v, c.mean_shadow / c.mean_lit);
    }
    if (skipped) *skipped = skip_count;
    return out;
}

SideLightResult correct_side_lighting(const LuminanceImage& img,
                                      const LandmarkSet& landmarks,
                                      const SideLightParams& params) {
    const FaceHalves halves = split_halves(landmarks, img.width(), img.height());
    if (halves.left.count() == 0 || halves.right.count() == 0)
        return SideLightResult{img, ShadowSide::none, 0, 0};

    const ShadowSide side =
        detect_shadow_side(img, halves.left, halves.right, params.shadow_threshold);
    if (side == ShadowSide::none) return SideLightResult{img, ShadowSide::none, 0, 0};

    const LuminanceImage eq = clahe(img, params.clahe);
    const RegionMask& shadow = side == ShadowSide::left ? halves.left : halves.right;
    const RegionMask& lit = side == ShadowSide::left ? halves.right : halves.left;

    // Dense correspondence over the shadow half; pixels whose mirror window
    // has no lit candidate keep their CLAHE value.
    std::vector<ShadowCorrespondence> corr;
    corr.reserve(shadow.count());
    int unmatched = 0;
    for (int y = 0; y < eq.height(); ++y)
        for (int x = 0; x < eq.width(); ++x) {
            if (!shadow.at(x, y)) continue;
            try {
                corr.push_back(symmetric_match(eq, x, y, halves.axis, lit,
                                               params.patch_size, params.search_radius));
            } catch (const std::runtime_error&) {
                ++unmatched;
            }
        }

    int skipped = 0;
    LuminanceImage corrected = gamma_correct(eq, corr, &skipped);
    return SideLightResult{std::move(corrected), side,
                           static_cast<int>(corr.size()) - skipped, skipped + unmatched};
}

}  // namespace blr
