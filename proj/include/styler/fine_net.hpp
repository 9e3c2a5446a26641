#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "styler/coarse_net.hpp"
#include "styler/image.hpp"
#include "styler/layers.hpp"
#include "styler/ssf.hpp"

namespace styler {

class TensorArchive;

struct FineConfig {
    std::array<int, 4> widths = {8, 16, 32, 64};
    int merge_channels = 16;
    FusionMode fusion = FusionMode::ssf;
    /// false builds the ablation baseline without SSF stages or coarse taps.
    bool use_coarse = true;
    int residual_blocks = 5;

    static FineConfig full();
    static FineConfig toy();
};

struct FineTape {
    std::array<Tensor, 4> enc_in;
    std::array<Tensor, 4> enc_out;
    std::vector<Tensor> res_in;
    std::vector<Tensor> res_mid;
    std::array<SsfModule::Tape, 3> ssf;
    std::array<Tensor, 3> conv_in;
    std::array<Tensor, 3> conv_out;
};

/// Full-resolution stage: four-conv encoder (strides 1,2,2,2), a residual
/// trunk at the deepest width, and three decoder stages
/// [SSF_k, nearest up ×2, dec_conv_k]. The first SSF fuses the trunk output
/// with r1, the next two fuse the previous decoder conv output with r2, r3.
/// dec_conv1 and dec_conv2 carry a ReLU; dec_conv3 is the linear output
/// projection.
class FineNetwork {
public:
    explicit FineNetwork(const FineConfig& cfg);

    const FineConfig& config() const { return cfg_; }
    void init(std::uint64_t seed);

    /// Unclamped output. `taps` must be non-null exactly when the network
    /// was built with use_coarse.
    Tensor forward_raw(const Tensor& content, const CoarseTaps* taps, FineTape* tape = nullptr) const;

    /// Accumulates parameter gradients given d(loss)/d(raw output). Taps are
    /// constants and receive no gradient.
    void backward(const FineTape& tape, const Tensor& grad_output);

    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    std::size_t parameter_count() const;
    void zero_grad();

    SsfModule& ssf(int k) { return ssfs_.at(k); }
    const SsfModule& ssf(int k) const { return ssfs_.at(k); }
    Conv3x3& decoder_conv(int k) { return dec_.at(k); }

    void store(TensorArchive& archive) const;
    void load(const TensorArchive& archive);

private:
    FineConfig cfg_;
    std::vector<Conv3x3> enc_;
    std::vector<Conv3x3> res_;  // two per block
    std::vector<SsfModule> ssfs_;
    std::vector<Conv3x3> dec_;
};

/// x_cs = clamp(FineNetwork(x_c, taps)). Tap sizes must be x_c/8, x_c/4,
/// x_c/2; a mismatch throws InvalidInput naming the stage.
Image fine_forward(const FineNetwork& net, const Image& content, const CoarseTaps& taps);

/// The ablation network without the coarse stage. Calling it on a network
/// built with use_coarse throws ConfigError.
Image fine_forward_nocoarse(const FineNetwork& net, const Image& content);

}  // namespace styler
