#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "guided/tensor.hpp"

namespace guided {

struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

/// Paired two-modality dataset. Row i of x_I, x_S and y always refers to the
/// same underlying subject; every transform preserves that alignment.
struct PairedDataset {
    Tensor x_I; // [N x d_I]
    Tensor x_S; // [N x d_S]
    std::vector<int> y;
    Splits splits;
    std::vector<std::string> label_names;

    std::size_t size() const { return y.size(); }
    std::size_t num_classes() const { return label_names.size(); }

    /// Checks row counts, label range and split disjointness (DataError).
    void validate() const;
};

/// Draws disjoint train/val/test index sets. `fractions` holds up to three
/// positive entries summing to <= 1; sizes follow largest-remainder rounding,
/// so near-integer targets land exactly. With `stratify`, per-class
/// proportions are preserved within one sample (labels required; any class
/// smaller than the number of requested splits is a DataError).
Splits make_splits(std::size_t n, const std::vector<double>& fractions, std::uint64_t seed,
                   bool stratify = false, const std::vector<int>& labels = {});

/// Row subset of a 2-D tensor, in the order given.
Tensor select_rows(const Tensor& t, const std::vector<std::size_t>& idx);
std::vector<int> select_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx);

/// New dataset whose row j is old row `new_from_old[j]`; splits are remapped
/// so they keep referring to the same subjects.
PairedDataset permute_rows(const PairedDataset& ds, const std::vector<std::size_t>& new_from_old);

/// Per-class sample counts (length K).
std::vector<std::size_t> class_counts(const std::vector<int>& y, std::size_t k);

/// Directory layout: manifest.json + x_I.bin, x_S.bin, y.bin (raw
/// little-endian float64). The manifest records dims, label names, split
/// indices and a SHA-256 checksum per blob.
void save_dataset(const PairedDataset& ds, const std::string& dir,
                  const std::string& spec_echo_json = "");
PairedDataset load_dataset(const std::string& dir);

/// Spec echo stored at save time ("" if none).
std::string dataset_spec_echo(const std::string& dir);

} // namespace guided
