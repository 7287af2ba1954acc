#pragma once

#include <cstdint>
#include <vector>

#include "guided/rng.hpp"

namespace guided {

/// Draws sample indices with probability inversely proportional to the
/// frequency of the sample's class, so every class contributes equally in
/// expectation. The stream is deterministic in the seed.
class WeightedSampler {
public:
    WeightedSampler(const std::vector<int>& labels, std::size_t num_classes, std::uint64_t seed);

    std::size_t next();
    std::vector<std::size_t> draw(std::size_t count);

    /// Per-sample draw probability (sums to 1).
    const std::vector<double>& probabilities() const { return probs_; }

private:
    std::vector<double> probs_;
    std::vector<double> cumulative_;
    Rng rng_;
};

} // namespace guided
