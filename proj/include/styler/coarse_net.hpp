#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "styler/encoder.hpp"
#include "styler/image.hpp"
#include "styler/layers.hpp"
#include "styler/wct.hpp"

namespace styler {

class TensorArchive;

/// Reconstructed stylized features handed from the coarse to the fine
/// network. For a coarse input of size h̄×w̄: r1 is (width₂ × h̄/4 × w̄/4),
/// r2 is (width₁ × h̄/2 × w̄/2), r3 is (3 × h̄ × w̄).
struct CoarseTaps {
    Tensor r1;
    Tensor r2;
    Tensor r3;
};

struct CoarseDecoderTape {
    std::vector<Tensor> activations;  // activations[0] is the decoder input
};

/// Reconstruction decoder mirroring VGG-19 from ReLU_4_1 down:
///
///     dec_conv1 (w4→w3), up,
///     dec_conv2..4 (w3→w3), dec_conv5 (w3→w2) [tap r1], up,
///     dec_conv6 (w2→w2), dec_conv7 (w2→w1) [tap r2], up,
///     dec_conv8 (w1→w1), dec_conv9 (w1→3) [tap r3]
///
/// Every conv is 3×3 reflect-padded with a ReLU except dec_conv9.
/// Upsampling is nearest neighbour.
class CoarseDecoder {
public:
    explicit CoarseDecoder(const std::array<int, 4>& widths);

    void init(std::uint64_t seed);

    /// Runs the decoder, optionally recording activations for backward().
    CoarseTaps forward(const Tensor& feature, CoarseDecoderTape* tape = nullptr) const;

    /// Accumulates parameter gradients from a gradient on the final output
    /// (tap r3).
    void backward(const CoarseDecoderTape& tape, const Tensor& grad_output);

    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    void zero_grad();

    const std::array<int, 4>& widths() const { return widths_; }

    void store(TensorArchive& archive) const;
    void load(const TensorArchive& archive);

private:
    struct Step {
        int conv = -1;  // -1: nearest upsample
        bool relu = true;
    };
    std::array<int, 4> widths_;
    std::vector<Conv3x3> convs_;
    std::vector<Step> steps_;
    // Step indices after which r1, r2 are captured.
    std::size_t tap1_step_ = 0;
    std::size_t tap2_step_ = 0;
};

/// Encoder → WCT at ReLU_4_1 → decoder; runs without any gradient tape.
CoarseTaps coarse_forward(const Encoder& enc, const CoarseDecoder& dec, const Image& content, const Image& style,
                          const WctConfig& cfg = {});

/// As coarse_forward with a precomputed style ReLU_4_1 feature.
CoarseTaps coarse_forward_cached(const Encoder& enc, const CoarseDecoder& dec, const Image& content,
                                 const Tensor& style_relu4_1, const WctConfig& cfg = {});

/// The r3 tap clamped to [0,1]: a stylization at the coarse input resolution.
Image coarse_stylize(const Encoder& enc, const CoarseDecoder& dec, const Image& content, const Image& style,
                     const WctConfig& cfg = {});

/// decode(extract(x, ReLU_4_1)) without WCT, clamped to [0,1].
Image reconstruct_only(const Encoder& enc, const CoarseDecoder& dec, const Image& x);

}  // namespace styler
