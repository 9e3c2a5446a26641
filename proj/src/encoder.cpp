#include "styler/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "styler/archive.hpp"
#include "styler/errors.hpp"
#include "styler/rng.hpp"

namespace styler {

namespace {

struct LayerSpec {
    const char* name;
    int block;        // output width index (1..4)
    int input_block;  // 0 = RGB input
};

// VGG-19 through conv4_1.
constexpr LayerSpec kLayers[] = {
    {"conv1_1", 1, 0}, {"conv1_2", 1, 1}, {"conv2_1", 2, 1}, {"conv2_2", 2, 2}, {"conv3_1", 3, 2},
    {"conv3_2", 3, 3}, {"conv3_3", 3, 3}, {"conv3_4", 3, 3}, {"conv4_1", 4, 3},
};

constexpr std::array<float, 3> kImagenetMean = {0.485f, 0.456f, 0.406f};
constexpr std::array<float, 3> kImagenetStd = {0.229f, 0.224f, 0.225f};

std::array<float, 3> parse_triple(const std::string& text, const std::string& key)
{
    std::array<float, 3> out{};
    std::stringstream s(text);
    std::string item;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(s, item, ',')) throw LoadError("archive metadata \"" + key + "\" needs three values");
        out[i] = std::stof(item);
    }
    return out;
}

}  // namespace

std::string_view tap_name(Tap tap)
{
    switch (tap) {
    case Tap::ReLU_1_1: return "ReLU_1_1";
    case Tap::ReLU_1_2: return "ReLU_1_2";
    case Tap::ReLU_2_1: return "ReLU_2_1";
    case Tap::ReLU_2_2: return "ReLU_2_2";
    case Tap::ReLU_3_1: return "ReLU_3_1";
    case Tap::ReLU_3_3: return "ReLU_3_3";
    case Tap::ReLU_4_1: return "ReLU_4_1";
    }
    return "?";
}

Tap parse_tap(std::string_view name)
{
    for (Tap t : kAllTaps) {
        if (tap_name(t) == name) return t;
    }
    throw ConfigError("unknown tap \"" + std::string(name) + "\"");
}

int tap_block(Tap tap)
{
    switch (tap) {
    case Tap::ReLU_1_1:
    case Tap::ReLU_1_2: return 1;
    case Tap::ReLU_2_1:
    case Tap::ReLU_2_2: return 2;
    case Tap::ReLU_3_1:
    case Tap::ReLU_3_3: return 3;
    case Tap::ReLU_4_1: return 4;
    }
    return 0;
}

std::string_view profile_name(ProfileKind kind)
{
    return kind == ProfileKind::full ? "full" : "toy";
}

ProfileKind parse_profile(std::string_view name)
{
    if (name == "full") return ProfileKind::full;
    if (name == "toy") return ProfileKind::toy;
    throw ConfigError("unknown profile \"" + std::string(name) + "\" (expected full or toy)");
}

EncoderProfile EncoderProfile::full(std::filesystem::path archive)
{
    EncoderProfile p;
    p.kind = ProfileKind::full;
    p.widths = {64, 128, 256, 512};
    p.archive = std::move(archive);
    return p;
}

EncoderProfile EncoderProfile::toy(std::uint64_t seed)
{
    EncoderProfile p;
    p.seed = seed;
    return p;
}

std::vector<std::string> encoder_layer_names()
{
    std::vector<std::string> names;
    for (const auto& l : kLayers) names.emplace_back(l.name);
    return names;
}

Encoder::Encoder(const EncoderProfile& profile)
    : profile_(profile)
{
    for (int w : profile_.widths) {
        if (w < 1) throw ConfigError("encoder block widths must be positive");
    }
    for (const auto& l : kLayers) {
        const int cin = l.input_block == 0 ? 3 : profile_.widths[l.input_block - 1];
        convs_.emplace_back(l.name, cin, profile_.widths[l.block - 1]);
    }
    auto conv = [](int i, std::optional<Tap> tap = std::nullopt) { return Step{i, tap}; };
    const Step pool{-1, std::nullopt};
    steps_ = {conv(0, Tap::ReLU_1_1), conv(1, Tap::ReLU_1_2), pool,
              conv(2, Tap::ReLU_2_1), conv(3, Tap::ReLU_2_2), pool,
              conv(4, Tap::ReLU_3_1), conv(5),                conv(6, Tap::ReLU_3_3),
              conv(7),                pool,                   conv(8, Tap::ReLU_4_1)};
    if (profile_.normalizes_input()) {
        mean_ = kImagenetMean;
        for (int c = 0; c < 3; ++c) inv_std_[c] = 1.0f / kImagenetStd[c];
    }
    load_weights();
}

void Encoder::load_weights()
{
    if (profile_.archive) {
        const auto archive = TensorArchive::load(*profile_.archive);
        for (auto& c : convs_) {
            load(c.weight, archive);
            load(c.bias, archive);
        }
        if (profile_.normalizes_input() && archive.has_meta("input_mean") && archive.has_meta("input_std")) {
            const auto mean = parse_triple(archive.meta("input_mean"), "input_mean");
            const auto sd = parse_triple(archive.meta("input_std"), "input_std");
            for (int c = 0; c < 3; ++c) {
                if (std::abs(mean[c] - kImagenetMean[c]) > 1e-4f || std::abs(sd[c] - kImagenetStd[c]) > 1e-4f) {
                    throw LoadError("encoder archive declares a normalization other than the ImageNet convention");
                }
            }
        }
        return;
    }
    if (profile_.kind == ProfileKind::full) {
        throw ConfigError("full encoder profile needs a weight archive");
    }
    Rng rng(profile_.seed);
    for (auto& c : convs_) c.init_he(rng);
}

Encoder build_encoder(const EncoderProfile& profile)
{
    return Encoder(profile);
}

TapFeatures Encoder::extract(const Tensor& image, const TapSet& taps, EncoderTape* tape) const
{
    if (image.channels() != 3) {
        throw InvalidInput("encoder input must have 3 channels, got " + image.shape().str());
    }
    if (image.height() % 8 != 0 || image.width() % 8 != 0 || image.height() == 0 || image.width() == 0) {
        throw InvalidInput("encoder input dimensions must be divisible by 8, got " + image.shape().str());
    }
    TapFeatures out;
    if (taps.empty()) return out;

    std::size_t last = 0;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i].tap && taps.count(*steps_[i].tap)) last = i;
    }

    Tensor x = image;
    if (profile_.normalizes_input()) {
        for (int c = 0; c < 3; ++c) {
            float* p = x.channel(c);
            for (std::size_t i = 0; i < x.shape().plane(); ++i) p[i] = (p[i] - mean_[c]) * inv_std_[c];
        }
    }
    if (tape) {
        tape->activations.clear();
        tape->activations.push_back(x);
    }
    for (std::size_t i = 0; i <= last; ++i) {
        const Step& s = steps_[i];
        if (s.conv < 0) {
            x = max_pool2(x);
        } else {
            x = convs_[s.conv].forward(x);
            relu_inplace(x);
        }
        if (tape) tape->activations.push_back(x);
        if (s.tap && taps.count(*s.tap)) out.emplace(*s.tap, x);
    }
    return out;
}

Tensor Encoder::backward(const EncoderTape& tape, const TapFeatures& tap_grads) const
{
    if (tape.activations.empty() || tape.activations.size() - 1 > steps_.size()) {
        throw InvalidInput("encoder backward: tape does not belong to this encoder");
    }
    const std::size_t depth = tape.activations.size() - 1;
    for (const auto& [tap, g] : tap_grads) {
        bool recorded = false;
        for (std::size_t i = 0; i < depth; ++i) recorded = recorded || steps_[i].tap == tap;
        if (!recorded) {
            throw InvalidInput("encoder backward: tap " + std::string(tap_name(tap)) + " was not recorded");
        }
    }

    Tensor grad;
    for (std::size_t i = depth; i-- > 0;) {
        const Step& s = steps_[i];
        const Tensor& out = tape.activations[i + 1];
        if (s.tap) {
            auto it = tap_grads.find(*s.tap);
            if (it != tap_grads.end()) {
                if (it->second.shape() != out.shape()) {
                    throw InvalidInput("encoder backward: gradient for " + std::string(tap_name(*s.tap)) +
                                       " has shape " + it->second.shape().str() + ", expected " + out.shape().str());
                }
                if (grad.empty()) {
                    grad = it->second;
                } else {
                    grad += it->second;
                }
            }
        }
        if (grad.empty()) continue;
        const Tensor& in = tape.activations[i];
        if (s.conv < 0) {
            grad = max_pool2_backward(in, grad);
        } else {
            relu_backward_inplace(grad, out);
            grad = convs_[s.conv].input_grad(in, grad);
        }
    }
    if (grad.empty()) return Tensor(tape.activations.front().shape());
    if (profile_.normalizes_input()) {
        for (int c = 0; c < 3; ++c) {
            float* p = grad.channel(c);
            for (std::size_t i = 0; i < grad.shape().plane(); ++i) p[i] *= inv_std_[c];
        }
    }
    return grad;
}

void Encoder::store(TensorArchive& archive) const
{
    for (const auto& c : convs_) {
        styler::store(c.weight, archive);
        styler::store(c.bias, archive);
    }
}

}  // namespace styler
