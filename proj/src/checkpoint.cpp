#include "guided/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "guided/errors.hpp"

namespace guided {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_doubles_le(std::ostream& out, const std::vector<double>& values) {
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * 8));
    } else {
        for (double d : values) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            put_u64_le(out, bits);
        }
    }
}

void get_doubles_le(std::istream& in, std::vector<double>& values) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(values.size() * 8));
    } else {
        for (double& d : values) {
            const std::uint64_t bits = get_u64_le(in);
            std::memcpy(&d, &bits, 8);
        }
    }
}

nlohmann::json mlp_manifest(Mlp& net) {
    return {{"layer_widths", net.spec().layer_widths}, {"frozen", net.frozen()}};
}

Mlp mlp_from_manifest(const nlohmann::json& j, const std::string& prefix,
                      std::map<std::string, Tensor>& tensors) {
    Mlp net{MlpSpec(j.at("layer_widths").get<std::vector<std::size_t>>())};
    for (auto& [name, param] : net.named_params()) {
        auto it = tensors.find(prefix + name);
        if (it == tensors.end()) throw ArtifactError("checkpoint missing tensor " + prefix + name);
        if (!param->value.same_shape(it->second))
            throw ArtifactError("checkpoint tensor " + prefix + name + " has shape " +
                                shape_str(it->second.shape()) + ", expected " +
                                shape_str(param->value.shape()));
        param->value = it->second;
    }
    net.set_frozen(j.value("frozen", false));
    return net;
}

void append_mlp_tensors(Mlp& net, const std::string& prefix,
                        std::vector<std::pair<std::string, const Tensor*>>& out) {
    for (auto& [name, param] : net.named_params()) out.emplace_back(prefix + name, &param->value);
}

} // namespace

void write_checkpoint(const std::string& path, nlohmann::json manifest,
                      const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
    nlohmann::json index = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        index.push_back({{"name", name},
                         {"shape", t->shape()},
                         {"offset", offset},
                         {"count", t->size()}});
        offset += t->size() * 8;
    }
    manifest["tensors"] = std::move(index);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::string m = manifest.dump();
    put_u64_le(out, m.size());
    out.write(m.data(), static_cast<std::streamsize>(m.size()));
    for (const auto& [name, t] : tensors) put_doubles_le(out, t->data());
    if (!out) throw IoError("failed writing " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    if (!std::filesystem::exists(path)) throw ArtifactError("checkpoint not found: " + path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ArtifactError("not a model checkpoint: " + path);

    const std::uint64_t mlen = get_u64_le(in);
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw ArtifactError("truncated checkpoint manifest: " + path);

    Checkpoint ck;
    try {
        ck.manifest = nlohmann::json::parse(mtext);
    } catch (const nlohmann::json::exception& e) {
        throw ArtifactError("bad checkpoint manifest in " + path + ": " + e.what());
    }

    const std::streampos blob_start = in.tellg();
    for (const auto& entry : ck.manifest.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        const auto count = entry.at("count").get<std::uint64_t>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        Tensor t{shape};
        if (t.size() != count)
            throw ArtifactError("checkpoint tensor " + name + " count/shape mismatch in " + path);
        in.seekg(blob_start + static_cast<std::streamoff>(offset));
        get_doubles_le(in, t.data());
        if (!in) throw ArtifactError("truncated checkpoint blob: " + path);
        if (!t.all_finite()) throw ArtifactError("non-finite values in checkpoint tensor " + name);
        ck.tensors.emplace(name, std::move(t));
    }
    return ck;
}

void save_mlp(const std::string& path, Mlp& net, nlohmann::json meta) {
    nlohmann::json manifest = {{"kind", "mlp"}, {"net", mlp_manifest(net)}, {"meta", std::move(meta)}};
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    append_mlp_tensors(net, "", tensors);
    write_checkpoint(path, std::move(manifest), tensors);
}

Mlp load_mlp(const std::string& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.manifest.value("kind", "") != "mlp")
        throw ArtifactError(path + " does not hold a plain network");
    return mlp_from_manifest(ck.manifest.at("net"), "", ck.tensors);
}

void save_classifier(const std::string& path, Classifier& c, nlohmann::json meta) {
    nlohmann::json manifest = {{"kind", "classifier"},
                               {"encoder", mlp_manifest(c.encoder())},
                               {"decoder", mlp_manifest(c.decoder())},
                               {"meta", std::move(meta)}};
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    append_mlp_tensors(c.encoder(), "encoder.", tensors);
    append_mlp_tensors(c.decoder(), "decoder.", tensors);
    write_checkpoint(path, std::move(manifest), tensors);
}

Classifier load_classifier(const std::string& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.manifest.value("kind", "") != "classifier")
        throw ArtifactError(path + " does not hold a classifier");
    return Classifier(mlp_from_manifest(ck.manifest.at("encoder"), "encoder.", ck.tensors),
                      mlp_from_manifest(ck.manifest.at("decoder"), "decoder.", ck.tensors));
}

void save_guidance(const std::string& path, GuidanceNet& g, nlohmann::json meta) {
    nlohmann::json manifest = {{"kind", "guidance"}, {"net", mlp_manifest(g.net())},
                               {"meta", std::move(meta)}};
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    append_mlp_tensors(g.net(), "", tensors);
    write_checkpoint(path, std::move(manifest), tensors);
}

GuidanceNet load_guidance(const std::string& path) {
    Checkpoint ck = read_checkpoint(path);
    if (ck.manifest.value("kind", "") != "guidance")
        throw ArtifactError(path + " does not hold a guidance network");
    return GuidanceNet(mlp_from_manifest(ck.manifest.at("net"), "", ck.tensors));
}

nlohmann::json checkpoint_meta(const std::string& path) {
    return read_checkpoint(path).manifest.value("meta", nlohmann::json::object());
}

} // namespace guided
