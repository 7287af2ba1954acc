#pragma once

#include <string>
#include <vector>

#include "guided/mlp.hpp"

namespace guided {

/// Encoder/decoder pair: forward(x) == decoder(encoder(x)).
class Classifier {
public:
    Classifier() = default;
    Classifier(Mlp encoder, Mlp decoder);

    Var encode(Graph& g, Var x) { return encoder_.forward(g, x); }
    Var decode(Graph& g, Var z) { return decoder_.forward(g, z); }
    Var classify(Graph& g, Var x) { return decode(g, encode(g, x)); }

    Tensor encode_values(const Tensor& x) { return encoder_.forward_values(x); }
    Tensor classify_values(const Tensor& x);

    std::size_t latent_dim() const { return encoder_.out_width(); }
    std::size_t num_classes() const { return decoder_.out_width(); }
    std::size_t in_width() const { return encoder_.in_width(); }

    Mlp& encoder() { return encoder_; }
    Mlp& decoder() { return decoder_; }
    const Mlp& encoder() const { return encoder_; }
    const Mlp& decoder() const { return decoder_; }

private:
    Mlp encoder_;
    Mlp decoder_;
};

/// Latent-to-latent translator with a compressing middle layer.
class GuidanceNet {
public:
    GuidanceNet() = default;

    /// Widths {in, bottleneck, out}; the bottleneck must be narrower than
    /// the wider of the two latent spaces, otherwise ConfigError.
    GuidanceNet(std::size_t in, std::size_t bottleneck, std::size_t out, Rng& rng);

    /// Reconstruction from a checkpointed spec (must still be 3 layers).
    explicit GuidanceNet(Mlp net);

    Var guide(Graph& g, Var z) { return net_.forward(g, z); }
    Tensor guide_values(const Tensor& z) { return net_.forward_values(z); }

    std::size_t in_width() const { return net_.in_width(); }
    std::size_t out_width() const { return net_.out_width(); }
    std::size_t bottleneck() const { return net_.spec().layer_widths[1]; }

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }

private:
    static void check_bottleneck(const MlpSpec& spec);

    Mlp net_;
};

/// All networks of one experiment. Copy the bundle for concurrent read-only
/// inference; a single trainer owns the original.
struct ModelBundle {
    Classifier inferior;  // E_I, D_I
    Classifier superior;  // E_S, D_S
    GuidanceNet guidance; // G
    Mlp combined_decoder; // D_c

    /// Network lookup by the short names used throughout:
    /// E_I, D_I, E_S, D_S, G, D_c. Unknown name -> ConfigError.
    Mlp& network(const std::string& name);

    void freeze(const std::vector<std::string>& names);
    void unfreeze(const std::vector<std::string>& names);

    /// Freezes everything, then unfreezes the given set (stage setup).
    void freeze_all_except(const std::vector<std::string>& trainable);

    std::vector<Parameter*> params_of(const std::vector<std::string>& names);
};

/// Sizes for building a fresh bundle.
struct BundleSpec {
    std::size_t d_I = 0; // inferior input width
    std::size_t d_S = 0; // superior input width
    std::size_t num_classes = 0;
    std::size_t latent_I = 64;
    std::size_t latent_S = 64;
    std::vector<std::size_t> encoder_hidden = {64, 64};
    std::vector<std::size_t> decoder_hidden = {32};
    std::size_t bottleneck = 32;

    void validate() const;
};

ModelBundle make_bundle(const BundleSpec& spec, std::uint64_t seed);

/// Eq.-style guided prediction: D_c([G(E_I(x)) concat E_I(x)]). The
/// estimated superior latent comes first, the inferior latent second.
Var guided_forward(ModelBundle& b, Graph& g, Var x_I);
Tensor guided_forward_values(ModelBundle& b, const Tensor& x_I);

/// Diagnostic head: superior decoder applied to the estimated latent,
/// D_S(G(E_I(x))). Uses no superior-modality data at inference.
Var guidance_diag_forward(ModelBundle& b, Graph& g, Var x_I);
Tensor guidance_diag_forward_values(ModelBundle& b, const Tensor& x_I);

} // namespace guided
