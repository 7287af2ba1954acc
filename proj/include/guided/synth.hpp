#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "guided/dataset.hpp"

namespace guided {

/// Generator spec for a paired two-modality benchmark. Both modalities see
/// the same class/subject embedding through seeded isometries; the inferior
/// one additionally loses a `rho` fraction of the label-carrying directions
/// and receives noise `sigma_I >= sigma_S`.
struct SynthSpec {
    std::size_t num_classes = 3;
    std::size_t d_I = 32;
    std::size_t d_S = 32;
    double sigma_I = 1.3;
    double sigma_S = 0.2;
    double rho = 0.5; // fraction of label-carrying directions absent from x_I
    std::vector<double> priors = {133.0, 34.0, 54.0}; // weights; normalized
    std::size_t n = 221;
    std::uint64_t seed = 1;

    // Embedding internals. Each sample belongs to one of `subject_types`
    // discrete subject groups; a group shifts the subject block by a shared
    // atom and, via `interaction_scale`, perturbs the label block in a
    // class-specific way. The interaction is what curves the class boundary
    // for the noisy modality: a linear model can only use the class means,
    // while the per-(class, subject) structure is recoverable from the clean
    // modality's geometry. `subject_types = 0` falls back to an i.i.d.
    // Gaussian subject vector per sample (no curvature).
    std::size_t m_label = 8;   // label-carrying directions
    std::size_t m_subject = 8; // nuisance subject directions
    std::size_t subject_types = 6;
    double centroid_scale = 1.0;
    double subject_scale = 2.5;
    double interaction_scale = 1.5;

    std::vector<double> split_fractions = {165.0 / 221.0, 28.0 / 221.0, 28.0 / 221.0};
    bool stratify = true;
    std::vector<std::string> label_names; // defaults to class_0..class_{K-1}

    /// Throws ConfigError on out-of-range fields; normalizes priors in place.
    void validate_and_normalize();

    nlohmann::json to_json() const;
    static SynthSpec from_json(const nlohmann::json& j);
};

/// Ground-truth generator state, exposed so tests can build Bayes-oracle
/// classifiers against the exact sampling distribution.
struct SynthTruth {
    Tensor centroids;          // [K x m_label]
    Tensor map_S;              // [d_S x (m_label+m_subject)], orthonormal columns
    Tensor map_I;              // [d_I x (m_label+m_subject)], orthonormal columns
    Tensor subject_atoms;      // [subject_types x m_subject] (empty if types=0)
    Tensor interactions;       // [K*subject_types x m_label], row = y*types + u
    std::vector<int> dropped;  // label dims zeroed for the inferior modality
    std::vector<double> priors;
    double sigma_I = 0.0, sigma_S = 0.0;
    double subject_scale = 0.0;
    double interaction_scale = 0.0;
    std::size_t m_label = 0, m_subject = 0, subject_types = 0;
};

PairedDataset generate(const SynthSpec& spec);
PairedDataset generate_with_truth(const SynthSpec& spec, SynthTruth& truth);

} // namespace guided
