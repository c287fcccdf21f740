#include "landmarks.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace blr {

void LandmarkSet::validate_bounds(int width, int height) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!(p.x >= 0.0 && p.x < width && p.y >= 0.0 && p.y < height))
            throw std::runtime_error("landmark " + std::to_string(i) +
                                     " outside image bounds (" + std::to_string(p.x) +
                                     ", " + std::to_string(p.y) + ")");
    }
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open landmark file: " + path.string());
    std::vector<Point> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Point p;
        if (!(ss >> p.x >> p.y))
            throw std::runtime_error("bad landmark line " + std::to_string(lineno) +
                                     " in " + path.string());
        pts.push_back(p);
    }
    if (pts.empty()) throw std::runtime_error("empty landmark file: " + path.string());
    return LandmarkSet(std::move(pts));
}

void save_landmarks(const std::filesystem::path& path, const LandmarkSet& lms) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write landmark file: " + path.string());
    char buf[64];
    for (const auto& p : lms.points()) {
        std::snprintf(buf, sizeof(buf), "%.4f %.4f\n", p.x, p.y);
        out << buf;
    }
}

}  // namespace blr
