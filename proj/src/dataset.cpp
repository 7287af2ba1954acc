#include "guided/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "guided/errors.hpp"
#include "guided/rng.hpp"

namespace guided {

namespace fs = std::filesystem;
using nlohmann::json;

void PairedDataset::validate() const {
    const std::size_t n = y.size();
    if (x_I.ndim() != 2 || x_S.ndim() != 2)
        throw DataError("modality tensors must be 2-D");
    if (x_I.rows() != n || x_S.rows() != n)
        throw DataError("row counts disagree: x_I " + std::to_string(x_I.rows()) + ", x_S " +
                        std::to_string(x_S.rows()) + ", y " + std::to_string(n));
    const std::size_t k = num_classes();
    if (k < 2) throw DataError("need at least 2 label names");
    for (int label : y)
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw DataError("label " + std::to_string(label) + " outside [0, " +
                            std::to_string(k) + ")");

    std::vector<char> seen(n, 0);
    auto check = [&](const std::vector<std::size_t>& idx, const char* name) {
        for (std::size_t i : idx) {
            if (i >= n)
                throw DataError(std::string("split '") + name + "' index " + std::to_string(i) +
                                " outside dataset of size " + std::to_string(n));
            if (seen[i])
                throw DataError(std::string("split '") + name + "' overlaps another split at index " +
                                std::to_string(i));
            seen[i] = 1;
        }
    };
    check(splits.train, "train");
    check(splits.val, "val");
    check(splits.test, "test");
}

namespace {

// Largest-remainder apportionment of n slots to the given fractions.
std::vector<std::size_t> split_sizes(std::size_t n, const std::vector<double>& fractions) {
    if (fractions.empty() || fractions.size() > 3)
        throw ConfigError("expected 1..3 split fractions");
    double total_frac = 0.0;
    for (double f : fractions) {
        if (!(f > 0.0)) throw ConfigError("split fractions must be positive");
        total_frac += f;
    }
    if (total_frac > 1.0 + 1e-9) throw ConfigError("split fractions sum above 1");

    const auto dn = static_cast<double>(n);
    std::vector<std::size_t> sizes(fractions.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double quota = fractions[i] * dn;
        sizes[i] = static_cast<std::size_t>(std::floor(quota + 1e-9));
        assigned += sizes[i];
        remainders.emplace_back(quota - std::floor(quota + 1e-9), i);
    }
    auto want = static_cast<std::size_t>(std::llround(total_frac * dn));
    want = std::min(want, n);
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < want; ++r, ++assigned) {
        sizes[remainders[r % remainders.size()].second] += 1;
    }
    return sizes;
}

void append_assignment(Splits& out, const std::vector<std::size_t>& pool,
                       const std::vector<std::size_t>& sizes) {
    std::size_t pos = 0;
    std::vector<std::size_t>* dests[3] = {&out.train, &out.val, &out.test};
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        for (std::size_t i = 0; i < sizes[s]; ++i) dests[s]->push_back(pool[pos++]);
    }
}

} // namespace

Splits make_splits(std::size_t n, const std::vector<double>& fractions, std::uint64_t seed,
                   bool stratify, const std::vector<int>& labels) {
    Splits out;
    Rng rng(seed);
    if (!stratify) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        rng.shuffle(idx);
        append_assignment(out, idx, split_sizes(n, fractions));
    } else {
        if (labels.size() != n)
            throw ConfigError("stratified split needs one label per sample");
        const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
        for (int c = 0; c < k; ++c) {
            std::vector<std::size_t> pool;
            for (std::size_t i = 0; i < n; ++i)
                if (labels[i] == c) pool.push_back(i);
            if (pool.size() < fractions.size())
                throw DataError("class " + std::to_string(c) + " has " +
                                std::to_string(pool.size()) + " samples, fewer than " +
                                std::to_string(fractions.size()) + " splits");
            rng.shuffle(pool);
            append_assignment(out, pool, split_sizes(pool.size(), fractions));
        }
        std::sort(out.train.begin(), out.train.end());
        std::sort(out.val.begin(), out.val.end());
        std::sort(out.test.begin(), out.test.end());
    }
    return out;
}

Tensor select_rows(const Tensor& t, const std::vector<std::size_t>& idx) {
    const std::size_t d = t.cols();
    Tensor out({idx.size(), d});
    for (std::size_t j = 0; j < idx.size(); ++j) {
        if (idx[j] >= t.rows())
            throw DataError("row index " + std::to_string(idx[j]) + " outside tensor with " +
                            std::to_string(t.rows()) + " rows");
        std::copy_n(t.data().data() + idx[j] * d, d, out.data().data() + j * d);
    }
    return out;
}

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        if (i >= y.size())
            throw DataError("label index " + std::to_string(i) + " outside dataset of size " +
                            std::to_string(y.size()));
        out.push_back(y[i]);
    }
    return out;
}

PairedDataset permute_rows(const PairedDataset& ds, const std::vector<std::size_t>& new_from_old) {
    if (new_from_old.size() != ds.size())
        throw DataError("permutation length does not match dataset size");
    PairedDataset out;
    out.x_I = select_rows(ds.x_I, new_from_old);
    out.x_S = select_rows(ds.x_S, new_from_old);
    out.y = select_labels(ds.y, new_from_old);
    out.label_names = ds.label_names;

    std::vector<std::size_t> old_to_new(ds.size());
    for (std::size_t j = 0; j < new_from_old.size(); ++j) old_to_new[new_from_old[j]] = j;
    auto remap = [&](const std::vector<std::size_t>& idx) {
        std::vector<std::size_t> r;
        r.reserve(idx.size());
        for (std::size_t i : idx) r.push_back(old_to_new[i]);
        return r;
    };
    out.splits.train = remap(ds.splits.train);
    out.splits.val = remap(ds.splits.val);
    out.splits.test = remap(ds.splits.test);
    return out;
}

std::vector<std::size_t> class_counts(const std::vector<int>& y, std::size_t k) {
    std::vector<std::size_t> counts(k, 0);
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= k)
            throw LabelError("label " + std::to_string(label) + " outside [0, " +
                             std::to_string(k) + ")");
        counts[label] += 1;
    }
    return counts;
}

namespace {

std::string sha256_hex(const unsigned char* bytes, std::size_t len) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int dlen = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, bytes, len) != 1 || EVP_DigestFinal_ex(ctx, digest, &dlen) != 1) {
        EVP_MD_CTX_free(ctx);
        throw IoError("SHA-256 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(dlen * 2);
    for (unsigned int i = 0; i < dlen; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::vector<unsigned char> doubles_to_le_bytes(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(bytes.data(), values.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t bits;
            std::memcpy(&bits, &values[i], 8);
            for (int b = 0; b < 8; ++b)
                bytes[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
        }
    }
    return bytes;
}

std::vector<double> le_bytes_to_doubles(const std::vector<unsigned char>& bytes) {
    std::vector<double> values(bytes.size() / 8);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes.data(), bytes.size());
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::uint64_t bits = 0;
            for (int b = 0; b < 8; ++b)
                bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
            std::memcpy(&values[i], &bits, 8);
        }
    }
    return values;
}

void write_blob(const fs::path& path, const std::vector<double>& values, json& checksums) {
    const auto bytes = doubles_to_le_bytes(values);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
    checksums[path.filename().string()] = sha256_hex(bytes.data(), bytes.size());
}

std::vector<double> read_blob(const fs::path& path, const json& checksums,
                              std::size_t expect_count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    const std::string name = path.filename().string();
    if (!checksums.contains(name)) throw DataError("manifest has no checksum for " + name);
    if (sha256_hex(bytes.data(), bytes.size()) != checksums.at(name).get<std::string>())
        throw DataError("checksum mismatch for " + name);
    if (bytes.size() != expect_count * 8)
        throw DataError(name + " holds " + std::to_string(bytes.size() / 8) +
                        " values, manifest expects " + std::to_string(expect_count));
    return le_bytes_to_doubles(bytes);
}

} // namespace

void save_dataset(const PairedDataset& ds, const std::string& dir,
                  const std::string& spec_echo_json) {
    ds.validate();
    fs::create_directories(dir);
    const fs::path root(dir);

    json checksums = json::object();
    write_blob(root / "x_I.bin", ds.x_I.data(), checksums);
    write_blob(root / "x_S.bin", ds.x_S.data(), checksums);
    std::vector<double> yv(ds.y.begin(), ds.y.end());
    write_blob(root / "y.bin", yv, checksums);

    json manifest = {{"format", "guided-dataset"},
                     {"version", 1},
                     {"n", ds.size()},
                     {"d_I", ds.x_I.cols()},
                     {"d_S", ds.x_S.cols()},
                     {"num_classes", ds.num_classes()},
                     {"label_names", ds.label_names},
                     {"splits",
                      {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}}},
                     {"checksums", checksums}};
    if (!spec_echo_json.empty()) manifest["spec"] = json::parse(spec_echo_json);

    std::ofstream out(root / "manifest.json");
    if (!out) throw IoError("cannot open " + (root / "manifest.json").string() + " for writing");
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + (root / "manifest.json").string());
}

namespace {

json read_manifest(const fs::path& root) {
    const fs::path mpath = root / "manifest.json";
    if (!fs::exists(mpath)) throw DataError("no dataset manifest at " + mpath.string());
    std::ifstream in(mpath);
    if (!in) throw IoError("cannot open " + mpath.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw DataError("bad dataset manifest: " + std::string(e.what()));
    }
}

} // namespace

PairedDataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    const json manifest = read_manifest(root);
    if (manifest.value("format", "") != "guided-dataset" || manifest.value("version", 0) != 1)
        throw DataError("unsupported dataset manifest version in " + dir);

    const auto n = manifest.at("n").get<std::size_t>();
    const auto d_I = manifest.at("d_I").get<std::size_t>();
    const auto d_S = manifest.at("d_S").get<std::size_t>();
    const json& checksums = manifest.at("checksums");

    PairedDataset ds;
    ds.x_I = Tensor({n, d_I}, read_blob(root / "x_I.bin", checksums, n * d_I));
    ds.x_S = Tensor({n, d_S}, read_blob(root / "x_S.bin", checksums, n * d_S));
    const auto yv = read_blob(root / "y.bin", checksums, n);
    ds.y.reserve(n);
    for (double v : yv) {
        if (v != std::floor(v)) throw DataError("y.bin holds a non-integer label");
        ds.y.push_back(static_cast<int>(v));
    }
    ds.label_names = manifest.at("label_names").get<std::vector<std::string>>();
    if (ds.label_names.size() != manifest.at("num_classes").get<std::size_t>())
        throw DataError("label_names length disagrees with num_classes");
    const json& sp = manifest.at("splits");
    ds.splits.train = sp.at("train").get<std::vector<std::size_t>>();
    ds.splits.val = sp.at("val").get<std::vector<std::size_t>>();
    ds.splits.test = sp.at("test").get<std::vector<std::size_t>>();
    if (!ds.x_I.all_finite() || !ds.x_S.all_finite())
        throw DataError("dataset blobs contain NaN or Inf");
    ds.validate();
    return ds;
}

std::string dataset_spec_echo(const std::string& dir) {
    const json manifest = read_manifest(dir);
    if (!manifest.contains("spec")) return "";
    return manifest.at("spec").dump();
}

} // namespace guided
