#include "styler/coarse_net.hpp"

#include "styler/archive.hpp"
#include "styler/errors.hpp"

namespace styler {

CoarseDecoder::CoarseDecoder(const std::array<int, 4>& widths)
    : widths_(widths)
{
    const auto [w1, w2, w3, w4] = widths;
    const int channel_plan[9][2] = {{w4, w3}, {w3, w3}, {w3, w3}, {w3, w3}, {w3, w2},
                                    {w2, w2}, {w2, w1}, {w1, w1}, {w1, 3}};
    for (int k = 0; k < 9; ++k) {
        convs_.emplace_back("dec_conv" + std::to_string(k + 1), channel_plan[k][0], channel_plan[k][1]);
    }
    const Step up{-1, false};
    steps_ = {{0, true}, up, {1, true}, {2, true}, {3, true}, {4, true}, up,
              {5, true}, {6, true}, up, {7, true}, {8, false}};
    tap1_step_ = 5;  // after dec_conv5, before the second upsample
    tap2_step_ = 8;  // after dec_conv7, before the third upsample
}

void CoarseDecoder::init(std::uint64_t seed)
{
    Rng rng(seed);
    for (auto& c : convs_) c.init_he(rng);
}

CoarseTaps CoarseDecoder::forward(const Tensor& feature, CoarseDecoderTape* tape) const
{
    if (feature.channels() != widths_[3]) {
        throw InvalidInput("coarse decoder expects " + std::to_string(widths_[3]) + " channels, got " +
                           feature.shape().str());
    }
    if (tape) {
        tape->activations.clear();
        tape->activations.push_back(feature);
    }
    CoarseTaps taps;
    Tensor x = feature;
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        const Step& s = steps_[i];
        if (s.conv < 0) {
            x = upsample2(x);
        } else {
            x = convs_[s.conv].forward(x);
            if (s.relu) relu_inplace(x);
        }
        if (tape) tape->activations.push_back(x);
        if (i == tap1_step_) taps.r1 = x;
        if (i == tap2_step_) taps.r2 = x;
    }
    taps.r3 = std::move(x);
    return taps;
}

void CoarseDecoder::backward(const CoarseDecoderTape& tape, const Tensor& grad_output)
{
    if (tape.activations.size() != steps_.size() + 1) {
        throw InvalidInput("coarse decoder backward: incomplete tape");
    }
    Tensor grad = grad_output;
    for (std::size_t i = steps_.size(); i-- > 0;) {
        const Step& s = steps_[i];
        if (s.conv < 0) {
            grad = upsample2_backward(grad);
            continue;
        }
        if (s.relu) relu_backward_inplace(grad, tape.activations[i + 1]);
        grad = convs_[s.conv].backward(tape.activations[i], grad, i > 0);
    }
}

std::vector<Param*> CoarseDecoder::params()
{
    std::vector<Param*> out;
    for (auto& c : convs_) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    }
    return out;
}

std::vector<const Param*> CoarseDecoder::params() const
{
    std::vector<const Param*> out;
    for (const auto& c : convs_) {
        out.push_back(&c.weight);
        out.push_back(&c.bias);
    }
    return out;
}

void CoarseDecoder::zero_grad()
{
    for (auto* p : params()) p->zero_grad();
}

void CoarseDecoder::store(TensorArchive& archive) const
{
    for (const auto* p : params()) styler::store(*p, archive);
}

void CoarseDecoder::load(const TensorArchive& archive)
{
    for (auto* p : params()) styler::load(*p, archive);
}

CoarseTaps coarse_forward_cached(const Encoder& enc, const CoarseDecoder& dec, const Image& content,
                                 const Tensor& style_relu4_1, const WctConfig& cfg)
{
    const auto content_feature = enc.extract(content, {Tap::ReLU_4_1}).at(Tap::ReLU_4_1);
    return dec.forward(wct_transform(content_feature, style_relu4_1, cfg));
}

CoarseTaps coarse_forward(const Encoder& enc, const CoarseDecoder& dec, const Image& content, const Image& style,
                          const WctConfig& cfg)
{
    const auto style_feature = enc.extract(style, {Tap::ReLU_4_1}).at(Tap::ReLU_4_1);
    return coarse_forward_cached(enc, dec, content, style_feature, cfg);
}

Image coarse_stylize(const Encoder& enc, const CoarseDecoder& dec, const Image& content, const Image& style,
                     const WctConfig& cfg)
{
    return Image(coarse_forward(enc, dec, content, style, cfg).r3).clamped();
}

Image reconstruct_only(const Encoder& enc, const CoarseDecoder& dec, const Image& x)
{
    const auto feature = enc.extract(x, {Tap::ReLU_4_1}).at(Tap::ReLU_4_1);
    return Image(dec.forward(feature).r3).clamped();
}

}  // namespace styler
