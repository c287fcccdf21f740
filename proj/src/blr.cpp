#include "blr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blr {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain, counter-clockwise hull.
std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) throw std::invalid_argument("face_mask: fewer than 3 distinct landmarks");

    std::vector<Point> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    if (hull.size() < 3) throw std::invalid_argument("face_mask: collinear landmark set");
    return hull;
}

}  // namespace

RegionMask face_mask(const LandmarkSet& landmarks, int width, int height) {
    if (landmarks.size() < 3)
        throw std::invalid_argument("face_mask: need at least 3 landmarks");
    const std::vector<Point> hull = convex_hull(landmarks.points());

    RegionMask mask(width, height);
    // Scanline over pixel centers; the hull is convex so each row cut is one
    // interval. Centers exactly on the boundary are included.
    constexpr double kEdgeEps = 1e-9;
    for (int y = 0; y < height; ++y) {
        const double cy = y + 0.5;
        double xmin = 0.0, xmax = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < hull.size(); ++i) {
            const Point& p1 = hull[i];
            const Point& p2 = hull[(i + 1) % hull.size()];
            double lo = std::min(p1.y, p2.y), hi = std::max(p1.y, p2.y);
            if (cy < lo || cy > hi) continue;
            if (p1.y == p2.y) {
                // Horizontal edge lying on this row.
                for (double ex : {p1.x, p2.x}) {
                    if (!any || ex < xmin) xmin = any ? std::min(xmin, ex) : ex;
                    if (!any || ex > xmax) xmax = any ? std::max(xmax, ex) : ex;
                    any = true;
                }
                continue;
            }
            const double t = (cy - p1.y) / (p2.y - p1.y);
            const double ix = p1.x + t * (p2.x - p1.x);
            if (!any) {
                xmin = xmax = ix;
                any = true;
            } else {
                xmin = std::min(xmin, ix);
                xmax = std::max(xmax, ix);
            }
        }
        if (!any) continue;
        int x0 = std::max(0, static_cast<int>(std::ceil(xmin - kEdgeEps - 0.5)));
        int x1 = std::min(width - 1, static_cast<int>(std::floor(xmax + kEdgeEps - 0.5)));
        for (int x = x0; x <= x1; ++x) mask.set(x, y, true);
    }
    return mask;
}

LinearMap fit_input_map(const ScalarStats& input_face, const ScalarStats& training_face) {
    if (!(input_face.variance > 0.0))
        throw std::invalid_argument("fit_input_map: flat input face region (zero variance)");
    if (!(training_face.variance > 0.0))
        throw std::invalid_argument("fit_input_map: degenerate training face statistics");
    const double gain = std::sqrt(training_face.variance / input_face.variance);
    return LinearMap{gain, training_face.mean - gain * input_face.mean};
}

LuminanceImage apply_map(const LuminanceImage& img, const LinearMap& map) {
    return affine_image(img, map.gain, map.offset);
}

MomentSummary summarize_pna(std::span<const LuminanceImage> ps,
                            std::span<const LuminanceImage> ns,
                            std::span<const LuminanceImage> as) {
    if (ps.empty() || ps.size() != ns.size() || ps.size() != as.size())
        throw std::invalid_argument("summarize_pna: bad list sizes");

    double sp = 0.0, sn = 0.0, sa = 0.0;
    long long n = 0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
        if (!ps[k].same_size(ns[k]) || !ps[k].same_size(as[k]))
            throw std::invalid_argument("summarize_pna: image size mismatch");
        auto pp = ps[k].pixels(), np = ns[k].pixels(), ap = as[k].pixels();
        for (std::size_t i = 0; i < pp.size(); ++i) {
            sp += pp[i];
            sn += np[i];
            sa += ap[i];
        }
        n += static_cast<long long>(pp.size());
    }
    if (n == 0) throw std::invalid_argument("summarize_pna: empty images");

    MomentSummary m;
    m.pixel_count = n;
    const double dn = static_cast<double>(n);
    m.mu_p = sp / dn;
    m.mu_n = sn / dn;
    m.mu_a = sa / dn;

    double vpp = 0.0, vnn = 0.0, vaa = 0.0, vpn = 0.0, vpa = 0.0, vna = 0.0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto pp = ps[k].pixels(), np = ns[k].pixels(), ap = as[k].pixels();
        for (std::size_t i = 0; i < pp.size(); ++i) {
            const double dp = pp[i] - m.mu_p;
            const double dq = np[i] - m.mu_n;
            const double da = ap[i] - m.mu_a;
            vpp += dp * dp;
            vnn += dq * dq;
            vaa += da * da;
            vpn += dp * dq;
            vpa += dp * da;
            vna += dq * da;
        }
    }
    m.var_p = vpp / dn;
    m.var_n = vnn / dn;
    m.var_a = vaa / dn;
    m.cov_pn = vpn / dn;
    m.cov_pa = vpa / dn;
    m.cov_na = vna / dn;
    return m;
}

MomentSummary summarize_training(std::span<const LayeredPhoto> photos) {
    if (photos.empty()) throw std::invalid_argument("summarize_training: empty set");
    std::vector<LuminanceImage> ps, ns, as;
    ps.reserve(photos.size());
    ns.reserve(photos.size());
    as.reserve(photos.size());
    for (const auto& photo : photos) {
        PnaImages pna = pna_images(photo);
        ps.push_back(std::move(pna.p));
        ns.push_back(std::move(pna.n));
        as.push_back(std::move(pna.a));
    }
    return summarize_pna(ps, ns, as);
}

const char* to_string(SolveMode mode) {
    return mode == SolveMode::exact ? "exact" : "approximate";
}

const char* to_string(SolveFallback fb) {
    switch (fb) {
        case SolveFallback::none: return "none";
        case SolveFallback::uniform_background: return "uniform_background";
        case SolveFallback::clamped_discriminant: return "clamped_discriminant";
        case SolveFallback::approx_from_exact: return "approx_from_exact";
    }
    return "unknown";
}

namespace {

constexpr double kVarEps = 1e-14;

BackgroundSolve solve_approximate(const MomentSummary& m, const ScalarStats& target) {
    BackgroundSolve out;
    out.mode = SolveMode::approximate;
    double disc = m.cov_pn * m.cov_pn - m.var_n * m.var_p + m.var_n * target.variance;
    if (disc < 0.0) {
        disc = 0.0;
        out.variance_feasible = false;
        out.fallback = SolveFallback::clamped_discriminant;
    }
    const double a = (-m.cov_pn + std::sqrt(disc)) / m.var_n;
    out.map.gain = a;
    out.map.offset = target.mean - m.mu_p - a * m.mu_n;
    return out;
}

}  // namespace

BackgroundSolve solve_background_map(const MomentSummary& m, const ScalarStats& target,
                                     SolveMode mode) {
    if (target.variance < 0.0)
        throw std::invalid_argument("solve_background_map: negative target variance");

    if (m.var_n <= kVarEps) {
        // Uniform or absent background: only an offset is left to solve for.
        BackgroundSolve out;
        out.mode = mode;
        out.fallback = SolveFallback::uniform_background;
        out.map.gain = 1.0;
        out.map.offset = target.mean - m.mu_p - m.mu_n;
        return out;
    }

    if (mode == SolveMode::approximate) return solve_approximate(m, target);

    // Exact mode: offset multiplies A, so express it from the mean equation,
    //   b = (mu_X - mu_P - a*mu_N) / mu_A = p + q*a,
    // and substitute into the variance expansion, leaving a quadratic in a.
    // mu_A = 0 forces N identically zero, so var_n > 0 implies mu_A > 0.
    const double p = (target.mean - m.mu_p) / m.mu_a;
    const double q = -m.mu_n / m.mu_a;
    const double c2 = m.var_n + q * q * m.var_a + 2.0 * q * m.cov_na;
    const double c1 =
        2.0 * (p * q * m.var_a + m.cov_pn + q * m.cov_pa + p * m.cov_na);
    const double c0 =
        m.var_p + p * p * m.var_a + 2.0 * p * m.cov_pa - target.variance;

    std::vector<double> roots;
    if (std::abs(c2) <= kVarEps) {
        if (std::abs(c1) > kVarEps) roots.push_back(-c0 / c1);
    } else {
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc >= 0.0) {
            const double s = std::sqrt(disc);
            roots.push_back((-c1 + s) / (2.0 * c2));
            roots.push_back((-c1 - s) / (2.0 * c2));
        }
    }

    bool found = false;
    double best_a = 0.0, best_b = 0.0;
    for (double a : roots) {
        if (!(a > 0.0)) continue;
        const double b = p + q * a;
        if (!found || std::abs(b) < std::abs(best_b)) {
            best_a = a;
            best_b = b;
            found = true;
        }
    }
    if (!found) {
        BackgroundSolve out = solve_approximate(m, target);
        out.fallback = SolveFallback::approx_from_exact;
        return out;
    }
    BackgroundSolve out;
    out.mode = SolveMode::exact;
    out.map.gain = best_a;
    out.map.offset = best_b;
    return out;
}

LuminanceImage recompose_training(const LayeredPhoto& photo, const LinearMap& map) {
    if (photo.portrait.empty() || photo.background.empty() || photo.alpha.empty())
        throw std::invalid_argument("recompose_training: photo has missing layers");
    const int w = photo.portrait.width(), h = photo.portrait.height();
    LuminanceImage out(w, h);
    auto fp = photo.portrait.pixels();
    auto bp = photo.background.pixels();
    auto ap = photo.alpha.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i)
        op[i] = ap[i] * fp[i] + (1.0 - ap[i]) * (map.gain * bp[i] + map.offset);
    return out;
}

LuminanceImage recompose_offset_form(const LayeredPhoto& photo, const LinearMap& map) {
    if (photo.portrait.empty() || photo.background.empty() || photo.alpha.empty())
        throw std::invalid_argument("recompose_offset_form: photo has missing layers");
    const int w = photo.portrait.width(), h = photo.portrait.height();
    LuminanceImage out(w, h);
    auto fp = photo.portrait.pixels();
    auto bp = photo.background.pixels();
    auto ap = photo.alpha.pixels();
    auto op = out.pixels();
    for (std::size_t i = 0; i < op.size(); ++i)
        op[i] = ap[i] * fp[i] + map.gain * (1.0 - ap[i]) * bp[i] + map.offset;
    return out;
}

ScalarStats pooled_face_stats(std::span<const LayeredPhoto> photos) {
    if (photos.empty()) throw std::invalid_argument("pooled_face_stats: empty set");
    std::vector<RegionMask> masks;
    masks.reserve(photos.size());
    double sum = 0.0;
    long long n = 0;
    for (const auto& photo : photos) {
        masks.push_back(face_mask(photo.landmarks, photo.photo.width(), photo.photo.height()));
        const auto& mask = masks.back();
        for (int y = 0; y < photo.photo.height(); ++y)
            for (int x = 0; x < photo.photo.width(); ++x)
                if (mask.at(x, y)) {
                    sum += photo.photo.at(x, y);
                    ++n;
                }
    }
    if (n == 0) throw std::invalid_argument("pooled_face_stats: empty face masks");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < photos.size(); ++k) {
        const auto& img = photos[k].photo;
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

BlrResult blr_pipeline(const LuminanceImage& input, const LandmarkSet& input_landmarks,
                       std::span<const LayeredPhoto> training, SolveMode mode) {
    if (training.empty()) throw std::invalid_argument("blr_pipeline: empty training set");

    const RegionMask input_face = face_mask(input_landmarks, input.width(), input.height());
    const ScalarStats input_face_stats = masked_stats(input, input_face);
    const ScalarStats training_face = pooled_face_stats(training);

    BlrResult res;
    res.input_map = fit_input_map(input_face_stats, training_face);
    res.adapted_input = apply_map(input, res.input_map);
    res.target = image_stats(res.adapted_input);

    const MomentSummary moments = summarize_training(training);
    res.background = solve_background_map(moments, res.target, mode);

    res.adapted_training.reserve(training.size());
    for (const auto& photo : training)
        res.adapted_training.push_back(recompose_training(photo, res.background.map));
    return res;
}

}  // namespace blr
