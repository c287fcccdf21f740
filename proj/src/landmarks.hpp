#pragma once

#include <filesystem>
#include <vector>

namespace blr {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Ordered facial landmark positions; the same index refers to the same
// facial feature across photos. File format: one "x y" pair per line,
// decimal pixel coordinates, line index = landmark index.
class LandmarkSet {
public:
    LandmarkSet() = default;
    explicit LandmarkSet(std::vector<Point> points) : points_(std::move(points)) {}

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    Point& operator[](std::size_t i) { return points_[i]; }
    const std::vector<Point>& points() const { return points_; }

    // Throws if any point lies outside [0,width) x [0,height).
    void validate_bounds(int width, int height) const;

private:
    std::vector<Point> points_;
};

LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const std::filesystem::path& path, const LandmarkSet& lms);

}  // namespace blr
