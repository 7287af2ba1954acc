#include "guided/sampler.hpp"

#include <string>

#include "guided/errors.hpp"

namespace guided {

WeightedSampler::WeightedSampler(const std::vector<int>& labels, std::size_t num_classes,
                                 std::uint64_t seed)
    : rng_(seed) {
    if (labels.empty()) {
        throw DataError("weighted sampler needs at least one sample");
    }
    std::vector<std::size_t> counts(num_classes, 0);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
            throw LabelError("label " + std::to_string(y) + " outside [0, " +
                             std::to_string(num_classes) + ")");
        }
        ++counts[static_cast<std::size_t>(y)];
    }
    for (std::size_t k = 0; k < num_classes; ++k) {
        if (counts[k] == 0) {
            throw DataError("class " + std::to_string(k) +
                            " has no samples; cannot balance over it");
        }
    }
    probs_.resize(labels.size());
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        probs_[i] = 1.0 / static_cast<double>(counts[static_cast<std::size_t>(labels[i])]);
        total += probs_[i];
    }
    cumulative_.resize(labels.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        probs_[i] /= total;
        acc += probs_[i];
        cumulative_[i] = acc;
    }
    cumulative_.back() = 1.0;
}

std::size_t WeightedSampler::next() {
    const double u = rng_.uniform();
    // binary search for the first cumulative value strictly above u
    std::size_t lo = 0;
    std::size_t hi = cumulative_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cumulative_[mid] > u) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

std::vector<std::size_t> WeightedSampler::draw(std::size_t count) {
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = next();
    }
    return out;
}

} // namespace guided
