#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "guided/dataset.hpp"
#include "guided/errors.hpp"
#include "guided/mlp.hpp"
#include "guided/ops.hpp"
#include "guided/optim.hpp"
#include "guided/synth.hpp"

using namespace guided;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------
// Bayes-oracle classifier built directly from the generator ground truth.
// Class-conditional law of either modality: N(U*masked_emb, s^2*U_sub*U_sub^T
// + sigma^2*I) with U column-orthonormal, so the quadratic form and log-det
// split over the subject subspace and its complement.
// ---------------------------------------------------------------------
struct Oracle {
    const SynthTruth& truth;
    const Tensor& map; // map_S or map_I
    double sigma;
    bool inferior;

    double loglik(const double* x, std::size_t d, std::size_t k) const {
        const std::size_t m = truth.m_label + truth.m_subject;
        std::vector<char> keep(m, 1);
        if (inferior)
            for (int dd : truth.dropped) keep[static_cast<std::size_t>(dd)] = 0;

        std::vector<double> r(d);
        for (std::size_t row = 0; row < d; ++row) {
            double mean = 0.0;
            for (std::size_t c = 0; c < truth.m_label; ++c)
                if (keep[c]) mean += map.at(row, c) * truth.centroids.at(k, c);
            r[row] = x[row] - mean;
        }
        double stot = 0.0;
        for (double v : r) stot += v * v;
        double ssub = 0.0;
        for (std::size_t j = 0; j < truth.m_subject; ++j) {
            double p = 0.0;
            for (std::size_t row = 0; row < d; ++row)
                p += map.at(row, truth.m_label + j) * r[row];
            ssub += p * p;
        }
        const double var_sub = truth.subject_scale * truth.subject_scale + sigma * sigma;
        const double var_iso = sigma * sigma;
        const auto n_iso = static_cast<double>(d - truth.m_subject);
        return -0.5 * (ssub / var_sub + (stot - ssub) / var_iso +
                       static_cast<double>(truth.m_subject) * std::log(var_sub) +
                       n_iso * std::log(var_iso)) +
               std::log(truth.priors[k]);
    }

    std::vector<int> predict(const Tensor& x) const {
        std::vector<int> out(x.rows());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double* row = x.data().data() + i * x.cols();
            std::size_t best = 0;
            double best_ll = loglik(row, x.cols(), 0);
            for (std::size_t k = 1; k < truth.priors.size(); ++k) {
                const double ll = loglik(row, x.cols(), k);
                if (ll > best_ll) {
                    best_ll = ll;
                    best = k;
                }
            }
            out[i] = static_cast<int>(best);
        }
        return out;
    }
};

double accuracy(const std::vector<int>& pred, const std::vector<int>& y) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (pred[i] == y[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

// Macro recall, computed longhand.
double macro_recall(const std::vector<int>& pred, const std::vector<int>& y, std::size_t k) {
    std::vector<std::size_t> hit(k, 0), total(k, 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        total[y[i]] += 1;
        if (pred[i] == y[i]) hit[y[i]] += 1;
    }
    double acc = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        acc += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
    return acc / static_cast<double>(k);
}

// Multinomial logistic regression on one modality; returns test-split BA.
double logistic_ba(const Tensor& x, const std::vector<int>& y, const Splits& splits,
                   std::size_t k, std::uint64_t seed) {
    Tensor xtr = select_rows(x, splits.train);
    const auto ytr = select_labels(y, splits.train);
    Rng init(seed);
    Mlp net{MlpSpec{x.cols(), k}, init};
    Adam opt(net.params(), 0.05);
    for (int epoch = 0; epoch < 300; ++epoch) {
        Graph g;
        g.backward(cross_entropy(net.forward(g, g.constant(xtr)), ytr));
        opt.step();
    }
    const auto pred = argmax_rows(net.forward_values(select_rows(x, splits.test)));
    return macro_recall(pred, select_labels(y, splits.test), k);
}

fs::path temp_dir(const std::string& stem) {
    auto p = fs::temp_directory_path() / (stem + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("split sizes reproduce the 221-sample reference layout") {
    const std::vector<double> fr = {165.0 / 221.0, 28.0 / 221.0, 28.0 / 221.0};
    Splits s = make_splits(221, fr, 5);
    CHECK(s.train.size() == 165);
    CHECK(s.val.size() == 28);
    CHECK(s.test.size() == 28);
}

TEST_CASE("single full fraction assigns everything to train") {
    Splits s = make_splits(50, {1.0}, 9);
    CHECK(s.train.size() == 50);
    CHECK(s.val.empty());
    CHECK(s.test.empty());
}

TEST_CASE("stratified split keeps a 90/10 class at exact proportions") {
    std::vector<int> y(100, 0);
    for (std::size_t i = 90; i < 100; ++i) y[i] = 1;
    Splits s = make_splits(100, {0.8, 0.1, 0.1}, 3, true, y);
    auto count_class1 = [&](const std::vector<std::size_t>& idx) {
        std::size_t c = 0;
        for (std::size_t i : idx)
            if (y[i] == 1) ++c;
        return c;
    };
    CHECK(count_class1(s.train) == 8);
    CHECK(count_class1(s.val) == 1);
    CHECK(count_class1(s.test) == 1);
    CHECK(s.train.size() == 80);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 10);
}

TEST_CASE("stratified split proportions stay within one sample per class") {
    Rng rng(77);
    std::vector<int> y;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < (c + 1) * 37; ++i) y.push_back(c);
    rng.shuffle(y);
    const std::vector<double> fr = {0.7, 0.15, 0.15};
    Splits s = make_splits(y.size(), fr, 13, true, y);
    const std::vector<std::size_t>* parts[3] = {&s.train, &s.val, &s.test};
    for (int c = 0; c < 3; ++c) {
        const double class_n = (c + 1) * 37;
        for (int p = 0; p < 3; ++p) {
            std::size_t got = 0;
            for (std::size_t i : *parts[p])
                if (y[i] == c) ++got;
            CHECK(std::fabs(static_cast<double>(got) - fr[p] * class_n) <= 1.0);
        }
    }
}

TEST_CASE("splits are disjoint, in range and deterministic") {
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) y.push_back(i % 4);
    for (bool strat : {false, true}) {
        Splits a = make_splits(200, {0.6, 0.2, 0.2}, 42, strat, y);
        Splits b = make_splits(200, {0.6, 0.2, 0.2}, 42, strat, y);
        CHECK(a.train == b.train);
        CHECK(a.val == b.val);
        CHECK(a.test == b.test);

        std::vector<char> seen(200, 0);
        for (const auto* part : {&a.train, &a.val, &a.test})
            for (std::size_t i : *part) {
                CHECK(i < 200);
                CHECK(!seen[i]);
                seen[i] = 1;
            }
        Splits c = make_splits(200, {0.6, 0.2, 0.2}, 43, strat, y);
        CHECK(a.train != c.train);
    }
}

TEST_CASE("stratified split rejects classes smaller than the split count") {
    std::vector<int> y(50, 0);
    y[0] = 1;
    y[1] = 1; // class 1 has two samples, three splits requested
    CHECK_THROWS_AS(make_splits(50, {0.8, 0.1, 0.1}, 1, true, y), DataError);
}

TEST_CASE("split fraction validation") {
    CHECK_THROWS_AS(make_splits(10, {0.8, 0.3}, 1), ConfigError);
    CHECK_THROWS_AS(make_splits(10, {0.5, -0.1}, 1), ConfigError);
    CHECK_THROWS_AS(make_splits(10, {}, 1), ConfigError);
    CHECK_THROWS_AS(make_splits(10, {0.2, 0.2, 0.2, 0.2}, 1), ConfigError);
}

TEST_CASE("spec validation rejects out-of-range fields") {
    SynthSpec s;
    s.sigma_I = 0.1; // below sigma_S
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    s.rho = 1.5;
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    s.priors = {1.0, 2.0};
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    s.priors[1] = 0.0;
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    s.d_I = 4; // smaller than m_label + m_subject
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    s.n = 0;
    CHECK_THROWS_AS(s.validate_and_normalize(), ConfigError);

    s = SynthSpec{};
    CHECK_NOTHROW(s.validate_and_normalize());
    const double total = std::accumulate(s.priors.begin(), s.priors.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spec JSON round-trip") {
    SynthSpec s;
    s.seed = 99;
    s.rho = 0.25;
    s.label_names = {"a", "b", "c"};
    SynthSpec back = SynthSpec::from_json(s.to_json());
    CHECK(back.seed == 99);
    CHECK(back.rho == 0.25);
    CHECK(back.label_names == s.label_names);
    CHECK(back.priors == s.priors);
}

TEST_CASE("generation is deterministic in the seed and respects priors") {
    SynthSpec s;
    s.n = 500;
    s.seed = 31;
    s.split_fractions = {0.8, 0.1, 0.1};
    PairedDataset a = generate(s);
    PairedDataset b = generate(s);
    CHECK(a.x_I == b.x_I);
    CHECK(a.x_S == b.x_S);
    CHECK(a.y == b.y);
    CHECK(a.splits.train == b.splits.train);

    const auto counts = class_counts(a.y, 3);
    // priors ~ [0.60, 0.15, 0.24]; allow generous sampling slack
    CHECK(static_cast<double>(counts[0]) / 500.0 == doctest::Approx(133.0 / 221.0).epsilon(0.15));
    CHECK(counts[1] > 30);
    CHECK(counts[2] > 50);

    s.seed = 32;
    PairedDataset c = generate(s);
    CHECK(a.x_I != c.x_I);
}

TEST_CASE("equal noise and no information loss make the modalities equivalent") {
    SynthSpec s;
    s.sigma_I = 0.6;
    s.sigma_S = 0.6;
    s.rho = 0.0;
    s.centroid_scale = 0.7;
    s.priors = {1.0, 1.0, 1.0};
    s.n = 4000;
    s.seed = 7;
    s.split_fractions = {1.0};
    SynthTruth truth;
    PairedDataset ds = generate_with_truth(s, truth);

    Oracle oracle_S{truth, truth.map_S, truth.sigma_S, false};
    Oracle oracle_I{truth, truth.map_I, truth.sigma_I, true};
    const double acc_S = accuracy(oracle_S.predict(ds.x_S), ds.y);
    const double acc_I = accuracy(oracle_I.predict(ds.x_I), ds.y);
    // Both modalities are isometric embeddings of the same signal plus equal
    // noise, so the Bayes accuracies agree up to sampling error.
    CHECK(acc_S > 0.55);
    CHECK(acc_S < 0.999);
    CHECK(std::fabs(acc_S - acc_I) < 0.03);
}

TEST_CASE("rho = 1 strips every bit of label signal from the inferior modality") {
    SynthSpec s;
    s.rho = 1.0;
    s.n = 3000;
    s.seed = 11;
    s.split_fractions = {0.6, 0.2, 0.2};
    SynthTruth truth;
    PairedDataset ds = generate_with_truth(s, truth);
    CHECK(truth.dropped.size() == s.m_label);

    // The Bayes oracle can only follow the prior: recall 1 on the majority
    // class, 0 elsewhere, i.e. balanced accuracy exactly 1/K.
    Oracle oracle_I{truth, truth.map_I, truth.sigma_I, true};
    const double ba_oracle = macro_recall(oracle_I.predict(ds.x_I), ds.y, 3);
    CHECK(ba_oracle == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // And a trained classifier lands at chance too.
    const double ba_fit = logistic_ba(ds.x_I, ds.y, ds.splits, 3, 5);
    CHECK(std::fabs(ba_fit - 1.0 / 3.0) < 0.08);
}

TEST_CASE("default benchmark leaves a wide trained-accuracy gap between modalities") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthSpec s; // default benchmark: K=3, imbalanced priors, rho=0.5
        s.n = 1500;
        s.split_fractions = {0.6, 0.2, 0.2};
        s.seed = seed;
        PairedDataset ds = generate(s);
        const double ba_S = logistic_ba(ds.x_S, ds.y, ds.splits, 3, 100 + seed);
        const double ba_I = logistic_ba(ds.x_I, ds.y, ds.splits, 3, 200 + seed);
        INFO("seed ", seed, ": BA_S=", ba_S, " BA_I=", ba_I);
        CHECK(ba_S - ba_I >= 0.05);
    }
}

TEST_CASE("informativeness ordering holds for noisier, lossier inferior data") {
    SynthSpec s;
    s.sigma_I = 1.0;
    s.sigma_S = 0.2;
    s.rho = 0.75;
    s.centroid_scale = 1.0;
    s.n = 4000;
    s.seed = 17;
    s.split_fractions = {1.0};
    SynthTruth truth;
    PairedDataset ds = generate_with_truth(s, truth);
    Oracle oracle_S{truth, truth.map_S, truth.sigma_S, false};
    Oracle oracle_I{truth, truth.map_I, truth.sigma_I, true};
    const double ba_S = macro_recall(oracle_S.predict(ds.x_S), ds.y, 3);
    const double ba_I = macro_recall(oracle_I.predict(ds.x_I), ds.y, 3);
    CHECK(ba_S >= ba_I + 0.05);
}

TEST_CASE("permuting rows preserves pairing and split membership") {
    SynthSpec s;
    s.n = 120;
    s.seed = 23;
    s.split_fractions = {0.7, 0.15, 0.15};
    PairedDataset ds = generate(s);

    Rng rng(99);
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    PairedDataset p = permute_rows(ds, perm);
    p.validate();

    for (std::size_t j = 0; j < perm.size(); ++j) {
        CHECK(p.y[j] == ds.y[perm[j]]);
        for (std::size_t c = 0; c < ds.x_I.cols(); ++c) CHECK(p.x_I.at(j, c) == ds.x_I.at(perm[j], c));
        for (std::size_t c = 0; c < ds.x_S.cols(); ++c) CHECK(p.x_S.at(j, c) == ds.x_S.at(perm[j], c));
    }
    // Split members still point at the same subjects (same feature rows).
    CHECK(p.splits.train.size() == ds.splits.train.size());
    for (std::size_t t = 0; t < ds.splits.train.size(); ++t) {
        const std::size_t old_i = ds.splits.train[t];
        const std::size_t new_i = p.splits.train[t];
        CHECK(p.y[new_i] == ds.y[old_i]);
        for (std::size_t c = 0; c < ds.x_S.cols(); ++c)
            CHECK(p.x_S.at(new_i, c) == ds.x_S.at(old_i, c));
    }
}

TEST_CASE("dataset round-trips through the directory format bit-exactly") {
    SynthSpec s;
    s.n = 64;
    s.seed = 3;
    s.split_fractions = {0.5, 0.25, 0.25};
    PairedDataset ds = generate(s);
    const auto dir = temp_dir("ds_roundtrip");
    save_dataset(ds, dir.string(), s.to_json().dump());

    PairedDataset back = load_dataset(dir.string());
    CHECK(back.x_I == ds.x_I);
    CHECK(back.x_S == ds.x_S);
    CHECK(back.y == ds.y);
    CHECK(back.splits.train == ds.splits.train);
    CHECK(back.splits.val == ds.splits.val);
    CHECK(back.splits.test == ds.splits.test);
    CHECK(back.label_names == ds.label_names);

    SynthSpec echoed = SynthSpec::from_json(nlohmann::json::parse(dataset_spec_echo(dir.string())));
    CHECK(echoed.seed == 3);
    fs::remove_all(dir);
}

TEST_CASE("a truncated blob fails its checksum") {
    SynthSpec s;
    s.n = 32;
    s.split_fractions = {1.0};
    PairedDataset ds = generate(s);
    const auto dir = temp_dir("ds_trunc");
    save_dataset(ds, dir.string());
    fs::resize_file(dir / "x_S.bin", fs::file_size(dir / "x_S.bin") - 16);
    CHECK_THROWS_WITH_AS(load_dataset(dir.string()), doctest::Contains("checksum mismatch"),
                         DataError);
    fs::remove_all(dir);
}

TEST_CASE("a manifest that disagrees with the blobs names the bad field") {
    SynthSpec s;
    s.n = 9;
    s.split_fractions = {1.0};
    PairedDataset ds = generate(s);
    const auto dir = temp_dir("ds_badn");
    save_dataset(ds, dir.string());

    // Claim one extra sample: y.bin still holds 9 labels.
    auto mpath = dir / "manifest.json";
    nlohmann::json manifest;
    {
        std::ifstream in(mpath);
        in >> manifest;
    }
    manifest["n"] = 10;
    {
        std::ofstream out(mpath, std::ios::trunc);
        out << manifest.dump(2);
    }
    CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
    fs::remove_all(dir);
}

TEST_CASE("overlapping splits in a manifest are rejected") {
    SynthSpec s;
    s.n = 40;
    s.split_fractions = {0.5, 0.25, 0.25};
    PairedDataset ds = generate(s);
    ds.splits.val[0] = ds.splits.train[0];
    CHECK_THROWS_WITH_AS(ds.validate(), doctest::Contains("overlaps"), DataError);
}
