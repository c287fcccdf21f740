#include <doctest.h>

#include <cmath>
#include <vector>

#include "blr.hpp"
#include "testutil.hpp"

using namespace blr;

namespace {

bool point_in_triangle(double px, double py, const Point& a, const Point& b,
                       const Point& c) {
    auto side = [](double px, double py, const Point& p, const Point& q) {
        return (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
    };
    const double d1 = side(px, py, a, b);
    const double d2 = side(px, py, b, c);
    const double d3 = side(px, py, c, a);
    const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
    const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(has_neg && has_pos);
}

double point_edge_distance(double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// Layered set plus a forward-composed target with known coefficients.
struct RecoveryCase {
    std::vector<LayeredPhoto> photos;
    MomentSummary moments;
    double a_star, b_star;
    ScalarStats target_eq10;  // stats of P + a*N + b*
    ScalarStats target_eq6;   // stats of P + a*N + b*A
};

RecoveryCase make_recovery_case(Rng& rng) {
    for (;;) {
        RecoveryCase rc;
        const int n_photos = rng.uniform_int(1, 3);
        for (int i = 0; i < n_photos; ++i)
            rc.photos.push_back(testutil::random_layered(rng, 24, 20));
        rc.a_star = rng.uniform(0.5, 2.0);
        rc.b_star = rng.uniform(-0.1, 0.1);
        rc.moments = summarize_training(rc.photos);

        // The approximate solver returns the +sqrt branch; keep cases where
        // the planted gain sits on that branch with margin, and where the
        // exact solver's |b|-minimizing positive root is the planted one.
        if (rc.moments.cov_pn + rc.a_star * rc.moments.var_n < 1e-4) continue;

        std::vector<LuminanceImage> eq10, eq6;
        std::vector<RegionMask> masks;
        for (const auto& p : rc.photos) {
            eq10.push_back(recompose_offset_form(p, LinearMap{rc.a_star, rc.b_star}));
            eq6.push_back(recompose_training(p, LinearMap{rc.a_star, rc.b_star}));
            masks.push_back(full_mask(p.photo.width(), p.photo.height()));
        }
        rc.target_eq10 = pooled_stats(eq10, masks);
        rc.target_eq6 = pooled_stats(eq6, masks);

        // Exact-mode identifiability: enumerate both roots of the quadratic
        // and require the planted pair to win the |b| tie-break clearly.
        const MomentSummary& m = rc.moments;
        const double p_ = (rc.target_eq6.mean - m.mu_p) / m.mu_a;
        const double q_ = -m.mu_n / m.mu_a;
        const double c2 = m.var_n + q_ * q_ * m.var_a + 2.0 * q_ * m.cov_na;
        const double c1 =
            2.0 * (p_ * q_ * m.var_a + m.cov_pn + q_ * m.cov_pa + p_ * m.cov_na);
        const double c0 =
            m.var_p + p_ * p_ * m.var_a + 2.0 * p_ * m.cov_pa - rc.target_eq6.variance;
        const double disc = c1 * c1 - 4.0 * c2 * c0;
        if (disc < 0 || std::abs(c2) < 1e-12) continue;
        const double r1 = (-c1 + std::sqrt(disc)) / (2.0 * c2);
        const double r2 = (-c1 - std::sqrt(disc)) / (2.0 * c2);
        const double other = std::abs(r1 - rc.a_star) > std::abs(r2 - rc.a_star) ? r1 : r2;
        if (other > 0 && std::abs(p_ + q_ * other) < std::abs(rc.b_star) + 1e-3) continue;
        return rc;
    }
}

}  // namespace

TEST_CASE("face_mask triangle matches point-in-triangle oracle") {
    const Point a{2.0, 1.5}, b{17.5, 4.0}, c{6.0, 18.0};
    const LandmarkSet lms({a, b, c});
    const RegionMask mask = face_mask(lms, 20, 20);

    int area = 0, oracle_area = 0;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            const bool in_oracle = point_in_triangle(px, py, a, b, c);
            if (mask.at(x, y)) ++area;
            if (in_oracle) ++oracle_area;
            if (mask.at(x, y) != in_oracle) {
                // Disagreements are only tolerated on the boundary.
                const double d = std::min({point_edge_distance(px, py, a, b),
                                           point_edge_distance(px, py, b, c),
                                           point_edge_distance(px, py, c, a)});
                CHECK(d <= 0.75);
            }
        }
    const double analytic =
        std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)) / 2.0;
    // Rasterized area within a boundary-length band of the analytic area.
    const double perim = 3.0 * 20.0;
    CHECK(std::abs(area - analytic) <= perim);
    CHECK(std::abs(area - oracle_area) <= perim);
}

TEST_CASE("face_mask containment and degenerate input") {
    // Corner landmarks covering the whole frame.
    const LandmarkSet corners({{0.0, 0.0}, {9.99, 0.0}, {9.99, 9.99}, {0.0, 9.99}});
    CHECK(face_mask(corners, 10, 10).count() == 100);

    // Landmarks inside a 10x10 box never mark pixels outside it.
    const LandmarkSet inner({{2.0, 3.0}, {9.0, 4.0}, {5.0, 9.5}, {3.0, 8.0}});
    const RegionMask mask = face_mask(inner, 30, 30);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            if (mask.at(x, y)) {
                CHECK(x >= 2);
                CHECK(x <= 9);
                CHECK(y >= 3);
                CHECK(y <= 9);
            }

    CHECK_THROWS(face_mask(LandmarkSet({{1, 1}, {2, 2}, {3, 3}}), 10, 10));
    CHECK_THROWS(face_mask(LandmarkSet({{1, 1}, {2, 2}}), 10, 10));
}

TEST_CASE("fit_input_map") {
    SUBCASE("identity when stats already match") {
        const ScalarStats s{0.4, 0.01, 100};
        const LinearMap m = fit_input_map(s, s);
        CHECK(m.gain == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m.offset == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("direct arithmetic") {
        const LinearMap m = fit_input_map(ScalarStats{0.3, 0.05 * 0.05, 1},
                                          ScalarStats{0.5, 0.10 * 0.10, 1});
        CHECK(m.gain == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(m.offset == doctest::Approx(-0.1).epsilon(1e-12));
    }
    SUBCASE("apply-then-measure oracle on random pairs") {
        Rng rng(21);
        for (int it = 0; it < 25; ++it) {
            const LuminanceImage img = testutil::random_image(rng, 16, 12);
            const RegionMask mask = testutil::random_mask(rng, 16, 12);
            const ScalarStats measured = masked_stats(img, mask);
            const ScalarStats target{rng.uniform(0.1, 0.9), rng.uniform(0.001, 0.1), 1};
            const LinearMap m = fit_input_map(measured, target);
            const ScalarStats out = masked_stats(apply_map(img, m), mask);
            CHECK(out.mean == doctest::Approx(target.mean).epsilon(1e-9));
            CHECK(out.stddev() == doctest::Approx(target.stddev()).epsilon(1e-9));
        }
    }
    SUBCASE("post-fit exactness, inverse composition, scale equivariance") {
        Rng rng(22);
        for (int it = 0; it < 50; ++it) {
            const ScalarStats in{rng.uniform(0.0, 1.0), rng.uniform(1e-4, 0.2), 1};
            const ScalarStats tr{rng.uniform(0.0, 1.0), rng.uniform(1e-4, 0.2), 1};
            const LinearMap m = fit_input_map(in, tr);
            CHECK(m.gain * in.mean + m.offset == doctest::Approx(tr.mean).epsilon(1e-12));
            CHECK(m.gain * in.stddev() == doctest::Approx(tr.stddev()).epsilon(1e-12));
            const LinearMap back = fit_input_map(tr, in);
            CHECK(m.gain * back.gain == doctest::Approx(1.0).epsilon(1e-9));

            const double s = rng.uniform(0.2, 4.0);
            const LinearMap scaled =
                fit_input_map(ScalarStats{s * in.mean, s * s * in.variance, 1},
                              ScalarStats{s * tr.mean, s * s * tr.variance, 1});
            CHECK(scaled.gain == doctest::Approx(m.gain).epsilon(1e-9));
        }
    }
    SUBCASE("flat input face rejected") {
        CHECK_THROWS(fit_input_map(ScalarStats{0.5, 0.0, 10}, ScalarStats{0.5, 0.1, 10}));
    }
}

TEST_CASE("apply_map") {
    Rng rng(23);
    const LuminanceImage img = testutil::random_image(rng, 9, 7);
    CHECK(testutil::max_abs_diff(apply_map(img, LinearMap{}), img) == 0.0);
    LuminanceImage px(1, 1, 0.3);
    CHECK(apply_map(px, LinearMap{2.0, -0.1}).at(0, 0) ==
          doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("summarize_training") {
    SUBCASE("alpha one zeroes the background moments") {
        LayeredPhoto p;
        Rng rng(24);
        p.portrait = testutil::random_image(rng, 8, 8);
        p.background = testutil::random_image(rng, 8, 8);
        p.alpha = AlphaMatte(8, 8, 1.0);
        p.photo = compose(p.portrait, p.background, p.alpha);
        std::vector<LayeredPhoto> set{p};
        const MomentSummary m = summarize_training(set);
        CHECK(m.mu_n == 0.0);
        CHECK(m.var_n == 0.0);
        CHECK(m.mu_a == 0.0);
    }
    SUBCASE("constant layers give the direct arithmetic moments") {
        LayeredPhoto p;
        p.portrait = LuminanceImage(6, 6, 0.4);
        p.background = LuminanceImage(6, 6, 0.8);
        p.alpha = AlphaMatte(6, 6, 0.5);
        p.photo = compose(p.portrait, p.background, p.alpha);
        std::vector<LayeredPhoto> set{p};
        const MomentSummary m = summarize_training(set);
        CHECK(m.mu_p == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(m.mu_n == doctest::Approx(0.4).epsilon(1e-12));
        CHECK(m.mu_a == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(m.var_p) <= 1e-12);
        CHECK(std::abs(m.var_n) <= 1e-12);
        CHECK(std::abs(m.var_a) <= 1e-12);
        CHECK(std::abs(m.cov_pn) <= 1e-12);
    }
    SUBCASE("flatten-and-loop oracle") {
        Rng rng(25);
        std::vector<LayeredPhoto> set;
        for (int i = 0; i < 3; ++i) set.push_back(testutil::random_layered(rng, 10, 8));
        const MomentSummary m = summarize_training(set);

        std::vector<double> P, N, A;
        for (const auto& p : set)
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 10; ++x) {
                    P.push_back(p.alpha.at(x, y) * p.portrait.at(x, y));
                    N.push_back((1.0 - p.alpha.at(x, y)) * p.background.at(x, y));
                    A.push_back(1.0 - p.alpha.at(x, y));
                }
        auto mean = [](const std::vector<double>& v) {
            double s = 0;
            for (double x : v) s += x;
            return s / v.size();
        };
        auto cov = [&](const std::vector<double>& u, const std::vector<double>& v) {
            const double mu = mean(u), mv = mean(v);
            double s = 0;
            for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu) * (v[i] - mv);
            return s / u.size();
        };
        CHECK(std::abs(m.mu_p - mean(P)) <= 1e-12);
        CHECK(std::abs(m.mu_n - mean(N)) <= 1e-12);
        CHECK(std::abs(m.mu_a - mean(A)) <= 1e-12);
        CHECK(std::abs(m.var_p - cov(P, P)) <= 1e-12);
        CHECK(std::abs(m.var_n - cov(N, N)) <= 1e-12);
        CHECK(std::abs(m.var_a - cov(A, A)) <= 1e-12);
        CHECK(std::abs(m.cov_pn - cov(P, N)) <= 1e-12);
        CHECK(std::abs(m.cov_pa - cov(P, A)) <= 1e-12);
        CHECK(std::abs(m.cov_na - cov(N, A)) <= 1e-12);

        // Cauchy-Schwarz with the documented slack.
        CHECK(std::abs(m.cov_pn) <= std::sqrt(m.var_p) * std::sqrt(m.var_n) + 1e-12);
    }
    SUBCASE("empty set rejected") {
        std::vector<LayeredPhoto> none;
        CHECK_THROWS(summarize_training(none));
    }
}

TEST_CASE("solve_background_map identity target") {
    Rng rng(26);
    std::vector<LayeredPhoto> set;
    for (int i = 0; i < 2; ++i) set.push_back(testutil::random_layered(rng, 20, 16));
    const MomentSummary m = summarize_training(set);
    REQUIRE(m.cov_pn + m.var_n > 0.0);  // identity sits on the +sqrt branch

    std::vector<LuminanceImage> photos;
    std::vector<RegionMask> masks;
    for (const auto& p : set) {
        photos.push_back(p.photo);
        masks.push_back(full_mask(20, 16));
    }
    const ScalarStats target = pooled_stats(photos, masks);

    for (SolveMode mode : {SolveMode::approximate, SolveMode::exact}) {
        const BackgroundSolve s = solve_background_map(m, target, mode);
        CHECK(s.map.gain == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(s.map.offset == doctest::Approx(0.0).epsilon(1e-10));
        CHECK(s.variance_feasible);
        CHECK(s.fallback == SolveFallback::none);
    }
}

TEST_CASE("solve_background_map recovers planted coefficients") {
    Rng rng(27);
    for (int it = 0; it < 20; ++it) {
        const RecoveryCase rc = make_recovery_case(rng);

        const BackgroundSolve approx =
            solve_background_map(rc.moments, rc.target_eq10, SolveMode::approximate);
        CHECK(approx.map.gain == doctest::Approx(rc.a_star).epsilon(1e-9));
        CHECK(approx.map.offset == doctest::Approx(rc.b_star).epsilon(1e-9));
        CHECK(approx.fallback == SolveFallback::none);

        const BackgroundSolve exact =
            solve_background_map(rc.moments, rc.target_eq6, SolveMode::exact);
        CHECK(exact.map.gain == doctest::Approx(rc.a_star).epsilon(1e-9));
        CHECK(exact.map.offset == doctest::Approx(rc.b_star).epsilon(1e-9));
        CHECK(exact.mode == SolveMode::exact);
    }
}

TEST_CASE("solve_background_map root choice") {
    Rng rng(28);
    for (int it = 0; it < 20; ++it) {
        std::vector<LayeredPhoto> set{testutil::random_layered(rng, 16, 16)};
        const MomentSummary m = summarize_training(set);
        const ScalarStats target{rng.uniform(0.2, 0.8), rng.uniform(0.005, 0.08), 1};
        const BackgroundSolve s = solve_background_map(m, target, SolveMode::approximate);
        if (s.fallback != SolveFallback::none) continue;
        // Enumerate both roots of the approximate quadratic; the returned
        // gain must be the +sqrt branch.
        const double disc =
            m.cov_pn * m.cov_pn - m.var_n * m.var_p + m.var_n * target.variance;
        REQUIRE(disc >= 0.0);
        const double plus = (-m.cov_pn + std::sqrt(disc)) / m.var_n;
        CHECK(s.map.gain == doctest::Approx(plus).epsilon(1e-12));
    }
}

TEST_CASE("solve_background_map degenerate and infeasible inputs") {
    SUBCASE("uniform background with zero mean") {
        MomentSummary m;
        m.mu_p = 0.3;
        m.mu_n = 0.0;
        m.mu_a = 0.0;
        m.var_n = 0.0;
        m.pixel_count = 100;
        const ScalarStats target{0.75, 0.02, 100};
        for (SolveMode mode : {SolveMode::approximate, SolveMode::exact}) {
            const BackgroundSolve s = solve_background_map(m, target, mode);
            CHECK(s.map.gain == 1.0);
            CHECK(s.map.offset == doctest::Approx(0.45).epsilon(1e-12));
            CHECK(s.fallback == SolveFallback::uniform_background);
        }
    }
    SUBCASE("unreachable variance clamps the discriminant") {
        Rng rng(29);
        std::vector<LayeredPhoto> set{testutil::random_layered(rng, 16, 16)};
        const MomentSummary m = summarize_training(set);
        // Variance below the minimum of the quadratic is unreachable.
        const ScalarStats target{0.5, 0.0, 1};
        const double disc = m.cov_pn * m.cov_pn - m.var_n * m.var_p;
        if (disc < 0.0) {
            const BackgroundSolve s =
                solve_background_map(m, target, SolveMode::approximate);
            CHECK_FALSE(s.variance_feasible);
            CHECK(s.fallback == SolveFallback::clamped_discriminant);
            CHECK(s.map.gain == doctest::Approx(-m.cov_pn / m.var_n).epsilon(1e-12));
        }
    }
    SUBCASE("negative target variance rejected") {
        MomentSummary m;
        m.var_n = 0.1;
        CHECK_THROWS(
            solve_background_map(m, ScalarStats{0.5, -1.0, 1}, SolveMode::approximate));
    }
}

TEST_CASE("variance expansion identity") {
    Rng rng(30);
    for (int it = 0; it < 30; ++it) {
        const LayeredPhoto photo = testutil::random_layered(rng, 18, 14);
        std::vector<LayeredPhoto> set{photo};
        const MomentSummary m = summarize_training(set);
        const double a = rng.uniform(0.2, 2.5);
        const double b = rng.uniform(-0.5, 0.5);

        const LuminanceImage composed = recompose_training(photo, LinearMap{a, b});
        const double measured = image_stats(composed).variance;
        const double expansion = m.var_p + a * a * m.var_n + b * b * m.var_a +
                                 2.0 * a * m.cov_pn + 2.0 * b * m.cov_pa +
                                 2.0 * a * b * m.cov_na;
        CHECK(measured == doctest::Approx(expansion).epsilon(1e-9));
    }
}

TEST_CASE("solution exactness under both composition forms") {
    Rng rng(31);
    for (int it = 0; it < 15; ++it) {
        std::vector<LayeredPhoto> set;
        const int n = rng.uniform_int(1, 3);
        for (int i = 0; i < n; ++i) set.push_back(testutil::random_layered(rng, 20, 16));
        const MomentSummary m = summarize_training(set);
        const ScalarStats target{rng.uniform(0.3, 0.7), rng.uniform(0.01, 0.06), 1};

        std::vector<RegionMask> masks(set.size(), full_mask(20, 16));

        // Approximate-mode solution composed in the offset-everywhere form
        // reproduces the target to machine precision.
        const BackgroundSolve approx =
            solve_background_map(m, target, SolveMode::approximate);
        if (approx.fallback == SolveFallback::none) {
            std::vector<LuminanceImage> eq10;
            for (const auto& p : set) eq10.push_back(recompose_offset_form(p, approx.map));
            const ScalarStats out = pooled_stats(eq10, masks);
            CHECK(out.mean == doctest::Approx(target.mean).epsilon(1e-12));
            CHECK(out.variance == doctest::Approx(target.variance).epsilon(1e-12));
        }

        // Exact-mode solution composed through the layer blend.
        const BackgroundSolve exact = solve_background_map(m, target, SolveMode::exact);
        if (exact.mode == SolveMode::exact) {
            std::vector<LuminanceImage> eq6;
            for (const auto& p : set) eq6.push_back(recompose_training(p, exact.map));
            const ScalarStats out = pooled_stats(eq6, masks);
            CHECK(out.mean == doctest::Approx(target.mean).epsilon(1e-9));
            CHECK(out.variance == doctest::Approx(target.variance).epsilon(1e-9));
        }
    }
}

TEST_CASE("recompose_training") {
    Rng rng(32);
    const LayeredPhoto p = testutil::random_layered(rng, 12, 10);

    SUBCASE("identity map reproduces the composite") {
        CHECK(testutil::max_abs_diff(recompose_training(p, LinearMap{}), p.photo) <= 1e-12);
    }
    SUBCASE("alpha zero remaps everything") {
        LayeredPhoto q = p;
        q.alpha = AlphaMatte(12, 10, 0.0);
        const LinearMap m{1.3, 0.02};
        const LuminanceImage out = recompose_training(q, m);
        CHECK(testutil::max_abs_diff(out, affine_image(q.background, 1.3, 0.02)) <= 1e-12);
    }
    SUBCASE("alpha one leaves the portrait untouched for any map") {
        LayeredPhoto q = p;
        q.alpha = AlphaMatte(12, 10, 1.0);
        const LuminanceImage out = recompose_training(q, LinearMap{7.0, -3.0});
        CHECK(testutil::max_abs_diff(out, q.portrait) == 0.0);
    }
    SUBCASE("portrait pixels with alpha one are bit-identical") {
        LayeredPhoto q = p;
        for (int x = 0; x < 12; ++x) q.alpha.at(x, 3) = 1.0;
        const LuminanceImage out = recompose_training(q, LinearMap{1.7, 0.05});
        for (int x = 0; x < 12; ++x) CHECK(out.at(x, 3) == q.portrait.at(x, 3));
    }
}

TEST_CASE("blr_pipeline") {
    Rng rng(33);
    SUBCASE("statistically identical input yields near-identity maps") {
        const LayeredPhoto base = testutil::random_layered(rng, 30, 26);
        // Landmarks spanning a textured face region.
        const LandmarkSet lms({{8, 6}, {22, 6}, {24, 18}, {15, 22}, {6, 18}});
        std::vector<LayeredPhoto> training;
        for (int i = 0; i < 3; ++i) {
            LayeredPhoto p = base;
            p.landmarks = lms;
            training.push_back(std::move(p));
        }
        const BlrResult res = blr_pipeline(base.photo, lms, training, SolveMode::approximate);
        CHECK(res.input_map.gain == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(res.input_map.offset) <= 1e-6);
        CHECK(res.background.map.gain == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(res.background.map.offset) <= 1e-6);
    }
    SUBCASE("background-scaled input is matched by the recomposed set") {
        const LandmarkSet lms({{8, 6}, {22, 6}, {24, 18}, {15, 22}, {6, 18}});
        std::vector<LayeredPhoto> training;
        for (int i = 0; i < 3; ++i) {
            LayeredPhoto p = testutil::random_layered(rng, 30, 26);
            p.landmarks = lms;
            training.push_back(std::move(p));
        }
        // Input: first photo with its background scaled by 1.5.
        const LuminanceImage input =
            compose(training[0].portrait, affine_image(training[0].background, 1.5, 0.0),
                    training[0].alpha);

        for (SolveMode mode : {SolveMode::approximate, SolveMode::exact}) {
            const BlrResult res = blr_pipeline(input, lms, training, mode);
            std::vector<RegionMask> masks(res.adapted_training.size(), full_mask(30, 26));
            const ScalarStats out = pooled_stats(res.adapted_training, masks);
            double tol;
            if (mode == SolveMode::exact && res.background.mode == SolveMode::exact) {
                tol = 1e-9;
            } else {
                double mu_alpha = 0.0;
                for (const auto& p : training) mu_alpha += image_stats(p.alpha).mean;
                mu_alpha /= training.size();
                tol = 1e-3 + std::abs(res.background.map.offset) * mu_alpha;
            }
            CHECK(std::abs(out.mean - res.target.mean) <= tol);
            CHECK(std::abs(out.stddev() - res.target.stddev()) <= std::max(tol, 1e-6));
        }
    }
    SUBCASE("single photo with near-binary matte, exact mode") {
        LayeredPhoto p = testutil::random_layered(rng, 24, 20);
        for (auto& v : p.alpha.pixels()) v = v > 0.5 ? 1.0 : 0.0;
        p.photo = compose(p.portrait, p.background, p.alpha);
        const LandmarkSet lms({{7, 5}, {17, 5}, {18, 14}, {12, 17}, {6, 14}});
        p.landmarks = lms;
        std::vector<LayeredPhoto> training{p};
        const LuminanceImage input =
            compose(p.portrait, affine_image(p.background, 1.3, 0.02), p.alpha);
        const BlrResult res = blr_pipeline(input, lms, training, SolveMode::exact);
        REQUIRE(res.background.mode == SolveMode::exact);
        std::vector<RegionMask> masks{full_mask(24, 20)};
        const ScalarStats out = pooled_stats(res.adapted_training, masks);
        CHECK(out.mean == doctest::Approx(res.target.mean).epsilon(1e-9));
        CHECK(out.variance == doctest::Approx(res.target.variance).epsilon(1e-9));
    }
    SUBCASE("empty training set rejected") {
        std::vector<LayeredPhoto> none;
        CHECK_THROWS(blr_pipeline(LuminanceImage(10, 10, 0.5),
                                  LandmarkSet({{1, 1}, {8, 1}, {4, 8}}), none,
                                  SolveMode::approximate));
    }
}
