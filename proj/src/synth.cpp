#include "guided/synth.hpp"

#include <cmath>

#include "guided/errors.hpp"
#include "guided/rng.hpp"

namespace guided {

using nlohmann::json;

void SynthSpec::validate_and_normalize() {
    if (num_classes < 2) throw ConfigError("need at least 2 classes");
    if (d_I == 0 || d_S == 0) throw ConfigError("feature dims must be positive");
    if (!(sigma_S >= 0.0) || !(sigma_I >= sigma_S))
        throw ConfigError("need sigma_I >= sigma_S >= 0 (the inferior modality is noisier)");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (priors.size() != num_classes)
        throw ConfigError("priors length " + std::to_string(priors.size()) + " != " +
                          std::to_string(num_classes) + " classes");
    double total = 0.0;
    for (double p : priors) {
        if (!(p > 0.0)) throw ConfigError("class priors must be positive");
        total += p;
    }
    for (double& p : priors) p /= total;
    if (n == 0) throw ConfigError("n must be positive");
    if (m_label == 0) throw ConfigError("need at least one label-carrying direction");
    const std::size_t m = m_label + m_subject;
    if (d_S < m || d_I < m)
        throw ConfigError("feature dims must be >= m_label + m_subject = " + std::to_string(m) +
                          " so the embedding maps stay isometric");
    if (!(centroid_scale > 0.0)) throw ConfigError("centroid_scale must be positive");
    if (!(subject_scale >= 0.0)) throw ConfigError("subject_scale must be >= 0");
    if (!(interaction_scale >= 0.0)) throw ConfigError("interaction_scale must be >= 0");
    if (interaction_scale > 0.0 && subject_types == 0)
        throw ConfigError("interaction_scale needs discrete subject groups (subject_types > 0)");
    if (!label_names.empty() && label_names.size() != num_classes)
        throw ConfigError("label_names length does not match num_classes");
}

json SynthSpec::to_json() const {
    return {{"num_classes", num_classes},
            {"d_I", d_I},
            {"d_S", d_S},
            {"sigma_I", sigma_I},
            {"sigma_S", sigma_S},
            {"rho", rho},
            {"priors", priors},
            {"n", n},
            {"seed", seed},
            {"m_label", m_label},
            {"m_subject", m_subject},
            {"subject_types", subject_types},
            {"centroid_scale", centroid_scale},
            {"subject_scale", subject_scale},
            {"interaction_scale", interaction_scale},
            {"split_fractions", split_fractions},
            {"stratify", stratify},
            {"label_names", label_names}};
}

SynthSpec SynthSpec::from_json(const json& j) {
    SynthSpec s;
    try {
        s.num_classes = j.value("num_classes", s.num_classes);
        s.d_I = j.value("d_I", s.d_I);
        s.d_S = j.value("d_S", s.d_S);
        s.sigma_I = j.value("sigma_I", s.sigma_I);
        s.sigma_S = j.value("sigma_S", s.sigma_S);
        s.rho = j.value("rho", s.rho);
        s.priors = j.value("priors", s.priors);
        s.n = j.value("n", s.n);
        s.seed = j.value("seed", s.seed);
        s.m_label = j.value("m_label", s.m_label);
        s.m_subject = j.value("m_subject", s.m_subject);
        s.subject_types = j.value("subject_types", s.subject_types);
        s.centroid_scale = j.value("centroid_scale", s.centroid_scale);
        s.subject_scale = j.value("subject_scale", s.subject_scale);
        s.interaction_scale = j.value("interaction_scale", s.interaction_scale);
        s.split_fractions = j.value("split_fractions", s.split_fractions);
        s.stratify = j.value("stratify", s.stratify);
        s.label_names = j.value("label_names", s.label_names);
    } catch (const json::exception& e) {
        throw ConfigError("bad generator spec: " + std::string(e.what()));
    }
    return s;
}

namespace {

// Random matrix with orthonormal columns (rows x cols, rows >= cols):
// Gaussian draw followed by two rounds of modified Gram-Schmidt.
Tensor orthonormal_columns(std::size_t rows, std::size_t cols, Rng& rng) {
    Tensor m({rows, cols});
    for (double& v : m.data()) v = rng.normal();
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t prev = 0; prev < j; ++prev) {
                double dot = 0.0;
                for (std::size_t r = 0; r < rows; ++r) dot += m.at(r, j) * m.at(r, prev);
                for (std::size_t r = 0; r < rows; ++r) m.at(r, j) -= dot * m.at(r, prev);
            }
            double norm = 0.0;
            for (std::size_t r = 0; r < rows; ++r) norm += m.at(r, j) * m.at(r, j);
            norm = std::sqrt(norm);
            if (norm < 1e-12) throw TrainingError("degenerate direction while orthonormalizing");
            for (std::size_t r = 0; r < rows; ++r) m.at(r, j) /= norm;
        }
    }
    return m;
}

int sample_class(const std::vector<double>& priors, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < priors.size(); ++k) {
        acc += priors[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(priors.size()) - 1;
}

} // namespace

PairedDataset generate_with_truth(const SynthSpec& spec_in, SynthTruth& truth) {
    SynthSpec spec = spec_in;
    spec.validate_and_normalize();
    const std::size_t m = spec.m_label + spec.m_subject;

    Rng struct_rng(mix_seed(spec.seed, 1));
    truth.centroids = Tensor({spec.num_classes, spec.m_label});
    for (double& v : truth.centroids.data()) v = spec.centroid_scale * struct_rng.normal();
    truth.map_S = orthonormal_columns(spec.d_S, m, struct_rng);
    truth.map_I = orthonormal_columns(spec.d_I, m, struct_rng);

    // The inferior modality zeroes round(rho * m_label) label directions.
    const auto drop = static_cast<std::size_t>(std::llround(spec.rho * static_cast<double>(spec.m_label)));
    std::vector<std::size_t> label_dims(spec.m_label);
    for (std::size_t i = 0; i < spec.m_label; ++i) label_dims[i] = i;
    struct_rng.shuffle(label_dims);
    truth.dropped.clear();
    for (std::size_t i = 0; i < drop; ++i) truth.dropped.push_back(static_cast<int>(label_dims[i]));
    std::vector<char> keep(m, 1);
    for (int d : truth.dropped) keep[static_cast<std::size_t>(d)] = 0;

    if (spec.subject_types > 0) {
        truth.subject_atoms = Tensor({spec.subject_types, spec.m_subject});
        for (double& v : truth.subject_atoms.data()) v = struct_rng.normal();
        truth.interactions = Tensor({spec.num_classes * spec.subject_types, spec.m_label});
        for (double& v : truth.interactions.data()) v = struct_rng.normal();
    }

    truth.priors = spec.priors;
    truth.sigma_I = spec.sigma_I;
    truth.sigma_S = spec.sigma_S;
    truth.subject_scale = spec.subject_scale;
    truth.interaction_scale = spec.interaction_scale;
    truth.m_label = spec.m_label;
    truth.m_subject = spec.m_subject;
    truth.subject_types = spec.subject_types;

    Rng sample_rng(mix_seed(spec.seed, 2));
    PairedDataset ds;
    ds.x_I = Tensor({spec.n, spec.d_I});
    ds.x_S = Tensor({spec.n, spec.d_S});
    ds.y.resize(spec.n);

    std::vector<double> emb(m);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int y = sample_class(spec.priors, sample_rng);
        ds.y[i] = y;
        for (std::size_t d = 0; d < spec.m_label; ++d)
            emb[d] = truth.centroids.at(static_cast<std::size_t>(y), d);
        if (spec.subject_types > 0) {
            auto u = static_cast<std::size_t>(sample_rng.uniform() *
                                              static_cast<double>(spec.subject_types));
            if (u >= spec.subject_types) u = spec.subject_types - 1;
            const std::size_t row = static_cast<std::size_t>(y) * spec.subject_types + u;
            for (std::size_t d = 0; d < spec.m_label; ++d)
                emb[d] += spec.interaction_scale * truth.interactions.at(row, d);
            for (std::size_t d = 0; d < spec.m_subject; ++d)
                emb[spec.m_label + d] = spec.subject_scale * truth.subject_atoms.at(u, d);
        } else {
            for (std::size_t d = 0; d < spec.m_subject; ++d)
                emb[spec.m_label + d] = spec.subject_scale * sample_rng.normal();
        }

        for (std::size_t r = 0; r < spec.d_S; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m; ++c) acc += truth.map_S.at(r, c) * emb[c];
            ds.x_S.at(i, r) = acc + spec.sigma_S * sample_rng.normal();
        }
        for (std::size_t r = 0; r < spec.d_I; ++r) {
            double acc = 0.0;
            for (std::size_t c = 0; c < m; ++c)
                if (keep[c]) acc += truth.map_I.at(r, c) * emb[c];
            ds.x_I.at(i, r) = acc + spec.sigma_I * sample_rng.normal();
        }
    }

    if (spec.label_names.empty()) {
        for (std::size_t k = 0; k < spec.num_classes; ++k)
            ds.label_names.push_back("class_" + std::to_string(k));
    } else {
        ds.label_names = spec.label_names;
    }

    ds.splits = make_splits(spec.n, spec.split_fractions, mix_seed(spec.seed, 4), spec.stratify,
                            ds.y);
    ds.validate();
    return ds;
}

PairedDataset generate(const SynthSpec& spec) {
    SynthTruth unused;
    return generate_with_truth(spec, unused);
}

} // namespace guided
