#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blr {

PatchGrid PatchGrid::build(int width, int height, int patch_size, int stride) {
    if (patch_size < 1 || stride < 1)
        throw std::invalid_argument("patch grid: patch size and stride must be positive");
    if (stride > patch_size)
        throw std::invalid_argument("patch grid: stride exceeds patch size (no overlap)");
    if (patch_size > width || patch_size > height)
        throw std::invalid_argument("patch grid: patch larger than image");

    auto axis_origins = [](int extent, int patch, int stride) {
        std::vector<int> xs;
        for (int x = 0; x + patch <= extent; x += stride) xs.push_back(x);
        if (xs.back() != extent - patch) xs.push_back(extent - patch);  // clamp to border
        return xs;
    };
    const std::vector<int> xs = axis_origins(width, patch_size, stride);
    const std::vector<int> ys = axis_origins(height, patch_size, stride);

    PatchGrid grid;
    grid.patch_size = patch_size;
    grid.stride = stride;
    grid.origins.reserve(xs.size() * ys.size());
    for (int y : ys)
        for (int x : xs) grid.origins.emplace_back(x, y);
    return grid;
}

namespace {

bool candidate_less(const Candidate& a, const Candidate& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.photo != b.photo) return a.photo < b.photo;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

}  // namespace

std::vector<Candidate> knn_search(const LuminanceImage& input, int px, int py,
                                  int patch_size,
                                  std::span<const LuminanceImage* const> training,
                                  int k, int center_x, int center_y, int radius) {
    if (k < 1) throw std::invalid_argument("knn_search: k must be >= 1");
    if (radius < 0) throw std::invalid_argument("knn_search: negative radius");

    // kept sorted ascending; candidates carry squared distance until the end
    std::vector<Candidate> best;
    best.reserve(k + 1);

    for (std::size_t ti = 0; ti < training.size(); ++ti) {
        const LuminanceImage& t = *training[ti];
        const int x_lo = std::max(0, center_x - radius);
        const int x_hi = std::min(t.width() - patch_size, center_x + radius);
        const int y_lo = std::max(0, center_y - radius);
        const int y_hi = std::min(t.height() - patch_size, center_y + radius);
        for (int qy = y_lo; qy <= y_hi; ++qy) {
            for (int qx = x_lo; qx <= x_hi; ++qx) {
                const double bound = best.size() == static_cast<std::size_t>(k)
                                         ? best.back().dist
                                         : std::numeric_limits<double>::max();
                double ssd = 0.0;
                for (int dy = 0; dy < patch_size && ssd <= bound; ++dy) {
                    const double* ip = &input.pixels()[(py + dy) * static_cast<std::size_t>(
                                                           input.width()) +
                                                       px];
                    const double* tp =
                        &t.pixels()[(qy + dy) * static_cast<std::size_t>(t.width()) + qx];
                    for (int dx = 0; dx < patch_size; ++dx) {
                        const double d = ip[dx] - tp[dx];
                        ssd += d * d;
                    }
                }
                if (ssd > bound) continue;
                Candidate c{static_cast<int>(ti), qx, qy, ssd};
                auto pos = std::upper_bound(best.begin(), best.end(), c, candidate_less);
                best.insert(pos, c);
                if (best.size() > static_cast<std::size_t>(k)) best.pop_back();
            }
        }
    }
    if (best.empty())
        throw std::runtime_error("knn_search: no candidate offsets in range");
    for (auto& c : best) c.dist = std::sqrt(c.dist);
    return best;
}

MatchResult match_grid(const LuminanceImage& input,
                       std::span<const LuminanceImage* const> training,
                       const PatchGrid& grid, const SynthParams& params) {
    MatchResult matches;
    matches.reserve(grid.origins.size());
    for (const auto& [ox, oy] : grid.origins)
        matches.push_back(knn_search(input, ox, oy, grid.patch_size, training,
                                     params.knn, ox, oy, params.search_radius));
    return matches;
}

LuminanceImage fuse_sketch(const MatchResult& matches,
                           std::span<const LuminanceImage* const> sketches,
                           const PatchGrid& grid, int width, int height) {
    if (matches.size() != grid.origins.size())
        throw std::invalid_argument("fuse_sketch: match/grid size mismatch");

    LuminanceImage acc(width, height, 0.0);
    LuminanceImage wsum(width, height, 0.0);
    constexpr double kZero = 1e-12;

    for (std::size_t cell = 0; cell < matches.size(); ++cell) {
        const auto& cands = matches[cell];
        if (cands.empty()) throw std::invalid_argument("fuse_sketch: cell without matches");
        const auto [ox, oy] = grid.origins[cell];

        std::vector<double> weights(cands.size());
        if (cands.front().dist < kZero) {
            // Zero-distance candidates dominate (the h -> 0 limit).
            for (std::size_t i = 0; i < cands.size(); ++i)
                weights[i] = cands[i].dist < kZero ? 1.0 : 0.0;
        } else {
            std::vector<double> d(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i) d[i] = cands[i].dist;
            std::vector<double> sorted = d;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t m = sorted.size();
            const double h = m % 2 == 1 ? sorted[m / 2]
                                        : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
            for (std::size_t i = 0; i < cands.size(); ++i)
                weights[i] = std::exp(-d[i] * d[i] / (2.0 * h * h));
        }
        double total = 0.0;
        for (double w : weights) total += w;
        if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);  // uniform fallback

        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            const auto& c = cands[i];
            const LuminanceImage& sk = *sketches[c.photo];
            for (int dy = 0; dy < grid.patch_size; ++dy)
                for (int dx = 0; dx < grid.patch_size; ++dx) {
                    acc.at(ox + dx, oy + dy) += weights[i] * sk.at(c.x + dx, c.y + dy);
                    wsum.at(ox + dx, oy + dy) += weights[i];
                }
        }
    }

    LuminanceImage out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double w = wsum.at(x, y);
            out.at(x, y) = w > 0.0 ? acc.at(x, y) / w : 0.0;
        }
    return out;
}

double match_accuracy(const MatchResult& matches,
                      std::span<const GroundTruthPatch> ground_truth,
                      double tolerance_px) {
    if (matches.size() != ground_truth.size())
        throw std::invalid_argument("match_accuracy: match/ground-truth size mismatch");
    if (matches.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        if (matches[i].empty()) continue;
        const Candidate& top = matches[i].front();
        const GroundTruthPatch& gt = ground_truth[i];
        if (top.photo == gt.photo &&
            std::max(std::abs(top.x - gt.x), std::abs(top.y - gt.y)) <= tolerance_px)
            ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(matches.size());
}

LuminanceImage synthesize_sketch(const LuminanceImage& input,
                                 std::span<const LuminanceImage* const> training,
                                 std::span<const LuminanceImage* const> sketches,
                                 const SynthParams& params) {
    if (training.empty() || training.size() != sketches.size())
        throw std::invalid_argument("synthesize_sketch: bad training/sketch lists");
    const PatchGrid grid =
        PatchGrid::build(input.width(), input.height(), params.patch_size, params.stride);
    const MatchResult matches = match_grid(input, training, grid, params);
    return fuse_sketch(matches, sketches, grid, input.width(), input.height());
}

}  // namespace blr
