#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "image.hpp"
#include "landmarks.hpp"

// Pose normalization: a triangulated mean-landmark template, per-triangle
// affine transforms fitted from landmark correspondences, and backward
// bilinear warping in both directions.

namespace blr {

struct Triangle {
    int a = 0, b = 0, c = 0;
};

// Delaunay triangulation (Bowyer-Watson). Points on a circumcircle are not
// treated as violations, so cocircular quads keep the diagonal fixed by
// insertion order; output triangles are normalized to ascending indices and
// sorted, making the result canonical for a given point order.
std::vector<Triangle> delaunay(const std::vector<Point>& points);

struct FaceTemplate {
    LandmarkSet mean_landmarks;
    std::vector<Triangle> triangles;
    int frame_width = 0;
    int frame_height = 0;
};

FaceTemplate build_template(std::span<const LandmarkSet> landmark_sets,
                            int frame_width, int frame_height);

void save_template(const std::filesystem::path& path, const FaceTemplate& tmpl);
FaceTemplate load_template(const std::filesystem::path& path);

// Row-major 2x3 affine: (x,y) -> (m[0]x+m[1]y+m[2], m[3]x+m[4]y+m[5]).
using Affine = std::array<double, 6>;

Point apply_affine(const Affine& m, const Point& p);

// Exact affine from three point correspondences; throws when the source
// triangle is degenerate (area below 1e-6 px^2).
Affine solve_affine(const Point src[3], const Point dst[3]);

class PiecewiseAffineWarp {
public:
    PiecewiseAffineWarp(const LandmarkSet& source, const FaceTemplate& tmpl,
                        int source_width, int source_height);

    int source_width() const { return src_w_; }
    int source_height() const { return src_h_; }
    int template_width() const { return tmpl_w_; }
    int template_height() const { return tmpl_h_; }
    std::size_t triangle_count() const { return triangles_.size(); }

    const Affine& forward_affine(std::size_t t) const { return fwd_[t]; }
    const Affine& inverse_affine(std::size_t t) const { return inv_[t]; }

    // Triangle owning a point: the containing triangle, else the one with
    // the nearest centroid.
    int locate_source(double x, double y) const;
    int locate_template(double x, double y) const;

    Point to_template(const Point& p) const;  // source frame -> template frame
    Point to_source(const Point& p) const;    // template frame -> source frame

private:
    int locate(const std::vector<Point>& pts, double x, double y) const;

    std::vector<Triangle> triangles_;
    std::vector<Point> src_pts_, tmpl_pts_;
    std::vector<Affine> fwd_, inv_;
    std::vector<Point> src_centroids_, tmpl_centroids_;
    int src_w_, src_h_, tmpl_w_, tmpl_h_;
};

PiecewiseAffineWarp fit_warp(const LandmarkSet& source, const FaceTemplate& tmpl,
                             int source_width, int source_height);

enum class WarpDirection { forward, inverse };

// Backward-sampling warp with bilinear interpolation; out-of-frame samples
// take the nearest border pixel. forward: source frame -> template frame;
// inverse: template frame -> source frame.
LuminanceImage warp_image(const LuminanceImage& img, const PiecewiseAffineWarp& warp,
                          WarpDirection direction);

}  // namespace blr
