#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "photo.hpp"

// Generated face-like benchmark corpus: elliptical head with procedural
// features over a gradient background, exact alpha/portrait/background
// layers, 68 landmarks, and an edge-map sketch. Ships as a generator so the
// repository stays data-free and runs stay reproducible.

namespace blr {

struct CorpusParams {
    int training_count = 20;
    int input_count = 10;  // inputs are clones of the first N training items
    int width = 100;
    int height = 125;
    std::uint64_t seed = 1234;
};

struct SyntheticCorpus {
    std::vector<LayeredPhoto> training;  // every item carries a sketch
    int input_count = 0;
};

SyntheticCorpus generate_corpus(const CorpusParams& params);

// Exports the corpus as a PNG/landmark dataset with a manifest.json usable
// by the prepare/remap/synthesize commands.
void write_corpus_dataset(const SyntheticCorpus& corpus,
                          const std::filesystem::path& dir);

// Deterministic uniform generator used by the corpus and the randomized
// test suites (std:: distributions are implementation-defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform(double lo, double hi) { return lo + (hi - lo) * next01(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next01() * (hi - lo + 1));
    }

private:
    double next01() {
        // splitmix64; top 53 bits to double in [0,1)
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        return static_cast<double>(z >> 11) * 0x1.0p-53;
    }

    std::uint64_t state_;
};

}  // namespace blr
