#include "guided/models.hpp"

#include <algorithm>

#include "guided/errors.hpp"
#include "guided/ops.hpp"

namespace guided {

Classifier::Classifier(Mlp encoder, Mlp decoder)
    : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
    if (encoder_.out_width() != decoder_.in_width())
        throw ConfigError("encoder output width " + std::to_string(encoder_.out_width()) +
                          " does not match decoder input width " +
                          std::to_string(decoder_.in_width()));
}

Tensor Classifier::classify_values(const Tensor& x) {
    Graph g;
    return g.value(classify(g, g.constant(x)));
}

void GuidanceNet::check_bottleneck(const MlpSpec& spec) {
    const std::size_t in = spec.in_width(), out = spec.out_width();
    const std::size_t b = spec.layer_widths[1];
    if (b >= std::max(in, out))
        throw ConfigError("guidance bottleneck " + std::to_string(b) +
                          " must be narrower than max(" + std::to_string(in) + ", " +
                          std::to_string(out) + ")");
}

GuidanceNet::GuidanceNet(std::size_t in, std::size_t bottleneck, std::size_t out, Rng& rng)
    : net_(MlpSpec{in, bottleneck, out}, rng) {
    check_bottleneck(net_.spec());
}

GuidanceNet::GuidanceNet(Mlp net) : net_(std::move(net)) {
    if (net_.spec().layer_widths.size() != 3)
        throw ConfigError("guidance network must have exactly one bottleneck layer");
    check_bottleneck(net_.spec());
}

Mlp& ModelBundle::network(const std::string& name) {
    if (name == "E_I") return inferior.encoder();
    if (name == "D_I") return inferior.decoder();
    if (name == "E_S") return superior.encoder();
    if (name == "D_S") return superior.decoder();
    if (name == "G") return guidance.net();
    if (name == "D_c") return combined_decoder;
    throw ConfigError("unknown network name '" + name +
                      "' (expected one of E_I, D_I, E_S, D_S, G, D_c)");
}

void ModelBundle::freeze(const std::vector<std::string>& names) {
    for (const auto& n : names) network(n).set_frozen(true);
}

void ModelBundle::unfreeze(const std::vector<std::string>& names) {
    for (const auto& n : names) network(n).set_frozen(false);
}

void ModelBundle::freeze_all_except(const std::vector<std::string>& trainable) {
    for (const char* n : {"E_I", "D_I", "E_S", "D_S", "G", "D_c"}) network(n).set_frozen(true);
    unfreeze(trainable);
}

std::vector<Parameter*> ModelBundle::params_of(const std::vector<std::string>& names) {
    std::vector<Parameter*> out;
    for (const auto& n : names)
        for (Parameter* p : network(n).params()) out.push_back(p);
    return out;
}

void BundleSpec::validate() const {
    if (d_I == 0 || d_S == 0) throw ConfigError("input widths must be positive");
    if (num_classes < 2) throw ConfigError("need at least 2 classes");
    if (latent_I == 0 || latent_S == 0) throw ConfigError("latent widths must be positive");
    if (bottleneck == 0) throw ConfigError("bottleneck width must be positive");
}

namespace {

std::vector<std::size_t> widths(std::size_t in, const std::vector<std::size_t>& hidden,
                                std::size_t out) {
    std::vector<std::size_t> w;
    w.push_back(in);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
}

} // namespace

ModelBundle make_bundle(const BundleSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ModelBundle b;
    b.inferior = Classifier(Mlp(MlpSpec(widths(spec.d_I, spec.encoder_hidden, spec.latent_I)), rng),
                            Mlp(MlpSpec(widths(spec.latent_I, spec.decoder_hidden, spec.num_classes)), rng));
    b.superior = Classifier(Mlp(MlpSpec(widths(spec.d_S, spec.encoder_hidden, spec.latent_S)), rng),
                            Mlp(MlpSpec(widths(spec.latent_S, spec.decoder_hidden, spec.num_classes)), rng));
    b.guidance = GuidanceNet(spec.latent_I, spec.bottleneck, spec.latent_S, rng);
    b.combined_decoder = Mlp(
        MlpSpec(widths(spec.latent_S + spec.latent_I, spec.decoder_hidden, spec.num_classes)), rng);
    return b;
}

Var guided_forward(ModelBundle& b, Graph& g, Var x_I) {
    Var z_I = b.inferior.encode(g, x_I);
    Var z_hat = b.guidance.guide(g, z_I);
    return b.combined_decoder.forward(g, concat(z_hat, z_I));
}

Tensor guided_forward_values(ModelBundle& b, const Tensor& x_I) {
    Graph g;
    return g.value(guided_forward(b, g, g.constant(x_I)));
}

Var guidance_diag_forward(ModelBundle& b, Graph& g, Var x_I) {
    Var z_I = b.inferior.encode(g, x_I);
    Var z_hat = b.guidance.guide(g, z_I);
    return b.superior.decode(g, z_hat);
}

Tensor guidance_diag_forward_values(ModelBundle& b, const Tensor& x_I) {
    Graph g;
    return g.value(guidance_diag_forward(b, g, g.constant(x_I)));
}

} // namespace guided
