#include "pose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace blr {

namespace {

double tri_area2(const Point& a, const Point& b, const Point& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Strict in-circumcircle test; |det| below tolerance counts as on-circle.
bool in_circumcircle(const Point& a, const Point& b, const Point& c, const Point& d) {
    Point pa = a, pb = b, pc = c;
    if (tri_area2(pa, pb, pc) < 0) std::swap(pb, pc);  // orient CCW
    const double ax = pa.x - d.x, ay = pa.y - d.y;
    const double bx = pb.x - d.x, by = pb.y - d.y;
    const double cx = pc.x - d.x, cy = pc.y - d.y;
    const double det = (ax * ax + ay * ay) * (bx * cy - by * cx) -
                       (bx * bx + by * by) * (ax * cy - ay * cx) +
                       (cx * cx + cy * cy) * (ax * by - ay * bx);
    // Scale-aware tolerance; coordinates are pixels, det is O(coord^4).
    const double scale = std::max({std::abs(ax), std::abs(ay), std::abs(bx),
                                   std::abs(by), std::abs(cx), std::abs(cy), 1.0});
    return det > 1e-10 * scale * scale * scale * scale;
}

struct Edge {
    int a, b;
    bool operator==(const Edge& o) const { return a == o.a && b == o.b; }
};

}  // namespace

std::vector<Triangle> delaunay(const std::vector<Point>& points) {
    const int n = static_cast<int>(points.size());
    if (n < 3) throw std::invalid_argument("delaunay: need at least 3 points");

    double min_x = points[0].x, max_x = points[0].x;
    double min_y = points[0].y, max_y = points[0].y;
    for (const auto& p : points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double span = std::max({max_x - min_x, max_y - min_y, 1.0});
    const double mx = (min_x + max_x) / 2.0, my = (min_y + max_y) / 2.0;

    // Super-triangle vertices far enough out that they stay outside the
    // circumcircles of near-collinear boundary triples (those circles can be
    // orders of magnitude larger than the point cloud).
    const double m = 1e5 * span;
    std::vector<Point> pts = points;
    pts.push_back({mx - m, my - 0.5 * m});
    pts.push_back({mx + m, my - 0.5 * m});
    pts.push_back({mx, my + m});
    const int s0 = n, s1 = n + 1, s2 = n + 2;

    std::vector<Triangle> tris{{s0, s1, s2}};
    for (int i = 0; i < n; ++i) {
        const Point& p = pts[i];
        std::vector<Triangle> bad, keep;
        for (const auto& t : tris) {
            if (in_circumcircle(pts[t.a], pts[t.b], pts[t.c], p)) bad.push_back(t);
            else keep.push_back(t);
        }
        // Boundary of the cavity: edges appearing in exactly one bad triangle.
        std::vector<Edge> edges;
        auto add_edge = [&edges](int a, int b) {
            const Edge e{std::min(a, b), std::max(a, b)};
            auto it = std::find(edges.begin(), edges.end(), e);
            if (it != edges.end()) edges.erase(it);
            else edges.push_back(e);
        };
        for (const auto& t : bad) {
            add_edge(t.a, t.b);
            add_edge(t.b, t.c);
            add_edge(t.c, t.a);
        }
        tris = std::move(keep);
        for (const auto& e : edges) tris.push_back({e.a, e.b, i});
    }

    std::vector<Triangle> out;
    for (const auto& t : tris) {
        if (t.a >= n || t.b >= n || t.c >= n) continue;
        if (std::abs(tri_area2(pts[t.a], pts[t.b], pts[t.c])) <= 1e-12) continue;
        int v[3] = {t.a, t.b, t.c};
        std::sort(v, v + 3);
        out.push_back({v[0], v[1], v[2]});
    }
    std::sort(out.begin(), out.end(), [](const Triangle& x, const Triangle& y) {
        if (x.a != y.a) return x.a < y.a;
        if (x.b != y.b) return x.b < y.b;
        return x.c < y.c;
    });
    if (out.empty()) throw std::invalid_argument("delaunay: all points collinear");
    return out;
}

FaceTemplate build_template(std::span<const LandmarkSet> landmark_sets,
                            int frame_width, int frame_height) {
    if (landmark_sets.empty())
        throw std::invalid_argument("build_template: empty landmark list");
    const std::size_t count = landmark_sets[0].size();
    for (const auto& set : landmark_sets)
        if (set.size() != count)
            throw std::invalid_argument("build_template: inconsistent landmark counts");

    std::vector<Point> mean(count);
    for (const auto& set : landmark_sets)
        for (std::size_t i = 0; i < count; ++i) {
            mean[i].x += set[i].x;
            mean[i].y += set[i].y;
        }
    for (auto& p : mean) {
        p.x /= static_cast<double>(landmark_sets.size());
        p.y /= static_cast<double>(landmark_sets.size());
    }

    FaceTemplate tmpl;
    tmpl.triangles = delaunay(mean);
    tmpl.mean_landmarks = LandmarkSet(std::move(mean));
    tmpl.frame_width = frame_width;
    tmpl.frame_height = frame_height;
    return tmpl;
}

void save_template(const std::filesystem::path& path, const FaceTemplate& tmpl) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write template file: " + path.string());
    out << "face-template 1\n";
    out << "frame " << tmpl.frame_width << " " << tmpl.frame_height << "\n";
    out << "landmarks " << tmpl.mean_landmarks.size() << "\n";
    char buf[80];
    for (const auto& p : tmpl.mean_landmarks.points()) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", p.x, p.y);
        out << buf;
    }
    out << "triangles " << tmpl.triangles.size() << "\n";
    for (const auto& t : tmpl.triangles) out << t.a << " " << t.b << " " << t.c << "\n";
}

FaceTemplate load_template(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open template file: " + path.string());
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "face-template" || version != 1)
        throw std::runtime_error("unsupported template format in " + path.string());
    FaceTemplate tmpl;
    std::size_t n_lm = 0, n_tri = 0;
    in >> tag >> tmpl.frame_width >> tmpl.frame_height;
    if (tag != "frame") throw std::runtime_error("bad template file: " + path.string());
    in >> tag >> n_lm;
    if (tag != "landmarks") throw std::runtime_error("bad template file: " + path.string());
    std::vector<Point> pts(n_lm);
    for (auto& p : pts) in >> p.x >> p.y;
    in >> tag >> n_tri;
    if (tag != "triangles") throw std::runtime_error("bad template file: " + path.string());
    tmpl.triangles.resize(n_tri);
    for (auto& t : tmpl.triangles) in >> t.a >> t.b >> t.c;
    if (!in) throw std::runtime_error("truncated template file: " + path.string());
    tmpl.mean_landmarks = LandmarkSet(std::move(pts));
    return tmpl;
}

Point apply_affine(const Affine& m, const Point& p) {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
}

Affine solve_affine(const Point src[3], const Point dst[3]) {
    const double d = tri_area2(src[0], src[1], src[2]);
    if (std::abs(d) < 2e-6)  // area = |d|/2
        throw std::invalid_argument("solve_affine: degenerate source triangle");
    const double e1x = src[1].x - src[0].x, e1y = src[1].y - src[0].y;
    const double e2x = src[2].x - src[0].x, e2y = src[2].y - src[0].y;
    const double f1x = dst[1].x - dst[0].x, f1y = dst[1].y - dst[0].y;
    const double f2x = dst[2].x - dst[0].x, f2y = dst[2].y - dst[0].y;
    // Linear part L = F * E^{-1}, translation from the first vertex.
    Affine m;
    m[0] = (f1x * e2y - f2x * e1y) / d;
    m[1] = (f2x * e1x - f1x * e2x) / d;
    m[3] = (f1y * e2y - f2y * e1y) / d;
    m[4] = (f2y * e1x - f1y * e2x) / d;
    m[2] = dst[0].x - m[0] * src[0].x - m[1] * src[0].y;
    m[5] = dst[0].y - m[3] * src[0].x - m[4] * src[0].y;
    return m;
}

PiecewiseAffineWarp::PiecewiseAffineWarp(const LandmarkSet& source,
                                         const FaceTemplate& tmpl, int source_width,
                                         int source_height)
    : triangles_(tmpl.triangles),
      src_pts_(source.points()),
      tmpl_pts_(tmpl.mean_landmarks.points()),
      src_w_(source_width),
      src_h_(source_height),
      tmpl_w_(tmpl.frame_width),
      tmpl_h_(tmpl.frame_height) {
    if (source.size() != tmpl.mean_landmarks.size())
        throw std::invalid_argument("fit_warp: landmark count differs from template");
    fwd_.reserve(triangles_.size());
    inv_.reserve(triangles_.size());
    src_centroids_.reserve(triangles_.size());
    tmpl_centroids_.reserve(triangles_.size());
    for (const auto& t : triangles_) {
        const Point s[3] = {src_pts_[t.a], src_pts_[t.b], src_pts_[t.c]};
        const Point d[3] = {tmpl_pts_[t.a], tmpl_pts_[t.b], tmpl_pts_[t.c]};
        fwd_.push_back(solve_affine(s, d));
        inv_.push_back(solve_affine(d, s));
        src_centroids_.push_back({(s[0].x + s[1].x + s[2].x) / 3.0,
                                  (s[0].y + s[1].y + s[2].y) / 3.0});
        tmpl_centroids_.push_back({(d[0].x + d[1].x + d[2].x) / 3.0,
                                   (d[0].y + d[1].y + d[2].y) / 3.0});
    }
}

int PiecewiseAffineWarp::locate(const std::vector<Point>& pts, double x, double y) const {
    constexpr double kEps = 1e-9;
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
        const auto& t = triangles_[i];
        const Point& a = pts[t.a];
        const Point& b = pts[t.b];
        const Point& c = pts[t.c];
        const double area = tri_area2(a, b, c);
        const Point p{x, y};
        const double w0 = tri_area2(a, b, p) / area;
        const double w1 = tri_area2(b, c, p) / area;
        const double w2 = tri_area2(c, a, p) / area;
        if (w0 >= -kEps && w1 >= -kEps && w2 >= -kEps) return static_cast<int>(i);
    }
    return -1;
}

int PiecewiseAffineWarp::locate_source(double x, double y) const {
    int t = locate(src_pts_, x, y);
    if (t >= 0) return t;
    double best = std::numeric_limits<double>::max();
    int best_t = 0;
    for (std::size_t i = 0; i < src_centroids_.size(); ++i) {
        const double dx = src_centroids_[i].x - x, dy = src_centroids_[i].y - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
            best = d2;
            best_t = static_cast<int>(i);
        }
    }
    return best_t;
}

int PiecewiseAffineWarp::locate_template(double x, double y) const {
    int t = locate(tmpl_pts_, x, y);
    if (t >= 0) return t;
    double best = std::numeric_limits<double>::max();
    int best_t = 0;
    for (std::size_t i = 0; i < tmpl_centroids_.size(); ++i) {
        const double dx = tmpl_centroids_[i].x - x, dy = tmpl_centroids_[i].y - y;
        const double d2 = dx * dx + dy * dy;
        if (d2 < best) {
            best = d2;
            best_t = static_cast<int>(i);
        }
    }
    return best_t;
}

Point PiecewiseAffineWarp::to_template(const Point& p) const {
    return apply_affine(fwd_[locate_source(p.x, p.y)], p);
}

Point PiecewiseAffineWarp::to_source(const Point& p) const {
    return apply_affine(inv_[locate_template(p.x, p.y)], p);
}

PiecewiseAffineWarp fit_warp(const LandmarkSet& source, const FaceTemplate& tmpl,
                             int source_width, int source_height) {
    return PiecewiseAffineWarp(source, tmpl, source_width, source_height);
}

namespace {

double sample_bilinear(const LuminanceImage& img, double x, double y) {
    // Continuous pixel-center coordinates; clamp to the border.
    double ax = std::clamp(x - 0.5, 0.0, static_cast<double>(img.width() - 1));
    double ay = std::clamp(y - 0.5, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(ax);
    const int y0 = static_cast<int>(ay);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = ax - x0, fy = ay - y0;
    const double top = (1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
    const double bot = (1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
    return (1.0 - fy) * top + fy * bot;
}

}  // namespace

LuminanceImage warp_image(const LuminanceImage& img, const PiecewiseAffineWarp& warp,
                          WarpDirection direction) {
    const bool forward = direction == WarpDirection::forward;
    const int out_w = forward ? warp.template_width() : warp.source_width();
    const int out_h = forward ? warp.template_height() : warp.source_height();
    LuminanceImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const Point p{x + 0.5, y + 0.5};
            // Backward sampling: map the output pixel into the image's frame.
            const Point q = forward ? warp.to_source(p) : warp.to_template(p);
            out.at(x, y) = sample_bilinear(img, q.x, q.y);
        }
    }
    return out;
}

}  // namespace blr
