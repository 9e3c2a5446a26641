#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "styler/image.hpp"
#include "styler/layers.hpp"
#include "styler/tensor.hpp"

namespace styler {

class TensorArchive;

enum class Tap { ReLU_1_1, ReLU_1_2, ReLU_2_1, ReLU_2_2, ReLU_3_1, ReLU_3_3, ReLU_4_1 };

inline constexpr std::array<Tap, 7> kAllTaps = {Tap::ReLU_1_1, Tap::ReLU_1_2, Tap::ReLU_2_1, Tap::ReLU_2_2,
                                                Tap::ReLU_3_1, Tap::ReLU_3_3, Tap::ReLU_4_1};

std::string_view tap_name(Tap tap);
/// Accepts "ReLU_3_1" style names; throws ConfigError otherwise.
Tap parse_tap(std::string_view name);
/// VGG block (1..4) the tap belongs to.
int tap_block(Tap tap);

using TapSet = std::set<Tap>;
using TapFeatures = std::map<Tap, Tensor>;

enum class ProfileKind { full, toy };

std::string_view profile_name(ProfileKind kind);
ProfileKind parse_profile(std::string_view name);

struct EncoderProfile {
    ProfileKind kind = ProfileKind::toy;
    std::array<int, 4> widths = {8, 16, 32, 64};
    /// Pretrained weights (full profile).
    std::optional<std::filesystem::path> archive;
    /// Weight seed (toy profile).
    std::uint64_t seed = 7;

    static EncoderProfile full(std::filesystem::path archive);
    static EncoderProfile toy(std::uint64_t seed = 7);

    /// Full-profile inputs are normalized with the ImageNet statistics the
    /// public VGG-19 weights were trained under; toy inputs are fed as-is.
    bool normalizes_input() const { return kind == ProfileKind::full; }
};

/// Activations recorded by a forward pass, needed to backpropagate into the
/// input image.
struct EncoderTape {
    std::vector<Tensor> activations;  // activations[0] is the (normalized) input
};

/// Frozen VGG-19 feature extractor, instantiated up to conv4_1.
///
/// Layer sequence: conv1_1 conv1_2 pool conv2_1 conv2_2 pool conv3_1 conv3_2
/// conv3_3 conv3_4 pool conv4_1, every conv 3×3 with reflect padding and a
/// ReLU. A tap in block b therefore has spatial size (h, w) / 2^(b-1).
class Encoder {
public:
    /// Builds and initializes the weights (see build_encoder).
    explicit Encoder(const EncoderProfile& profile);

    const EncoderProfile& profile() const { return profile_; }
    const std::array<int, 4>& widths() const { return profile_.widths; }
    int tap_channels(Tap tap) const { return profile_.widths[tap_block(tap) - 1]; }
    const std::vector<Conv3x3>& convs() const { return convs_; }

    /// Single forward pass returning the requested taps. The input must be
    /// 3×h×w with h and w divisible by 8.
    TapFeatures extract(const Tensor& image, const TapSet& taps, EncoderTape* tape = nullptr) const;
    TapFeatures extract(const Image& image, const TapSet& taps) const { return extract(image.tensor(), taps); }

    /// Gradient with respect to the input image, given gradients at a subset
    /// of the taps recorded in `tape`.
    Tensor backward(const EncoderTape& tape, const TapFeatures& tap_grads) const;

    void store(TensorArchive& archive) const;

private:
    void load_weights();

    struct Step {
        int conv = -1;  // index into convs_, or -1 for a 2×2 max pool
        std::optional<Tap> tap;
    };

    EncoderProfile profile_;
    std::vector<Conv3x3> convs_;
    std::vector<Step> steps_;
    std::array<float, 3> mean_ = {0.0f, 0.0f, 0.0f};
    std::array<float, 3> inv_std_ = {1.0f, 1.0f, 1.0f};
};

/// Builds the encoder; the full profile loads conv{b}_{i}.weight/.bias from
/// the profile's archive (LoadError naming the offending layer), the toy
/// profile draws He-normal weights from its seed.
Encoder build_encoder(const EncoderProfile& profile);

/// Names of the conv layers the encoder expects, in forward order.
std::vector<std::string> encoder_layer_names();

}  // namespace styler
