#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "styler/layers.hpp"
#include "styler/tensor.hpp"

namespace styler {

class TensorArchive;

enum class FusionMode { ssf, concat };

std::string_view fusion_name(FusionMode mode);
FusionMode parse_fusion(std::string_view name);

/// Structural selective fusion.
///
///     f_csr = [f_cs ; f_r]
///     M     = sigmoid(mlp2(relu(mlp1(avgpool(f_csr)))))    one weight per f_cs channel
///     out   = [M ⊗ f_cs ; relu(refine(f_csr))]
///
/// With FusionMode::concat the attention is replaced by ones, which is the
/// plain concatenation baseline.
class SsfModule {
public:
    SsfModule(const std::string& name, int cs_channels, int r_channels, int merge_channels);

    int cs_channels() const { return cs_channels_; }
    int r_channels() const { return r_channels_; }
    int merge_channels() const { return merge_channels_; }
    int hidden_width() const { return mlp1_.out_features; }
    int out_channels() const { return cs_channels_ + merge_channels_; }

    void init(Rng& rng);

    struct Tape {
        Tensor f_cs;
        Tensor f_csr;
        std::vector<float> pooled;
        std::vector<float> hidden;
        std::vector<float> attention;
        Tensor refined;
    };

    Tensor forward(const Tensor& f_cs, const Tensor& f_r, FusionMode mode = FusionMode::ssf,
                   Tape* tape = nullptr) const;

    /// The per-channel attention M_cs ∈ (0,1)^{c_cs}.
    std::vector<float> attention(const Tensor& f_cs, const Tensor& f_r) const;

    struct InputGrads {
        Tensor f_cs;
        Tensor f_r;
    };
    /// Accumulates parameter gradients and returns input gradients.
    InputGrads backward(const Tape& tape, const Tensor& grad_out, FusionMode mode = FusionMode::ssf);

    Dense& mlp1() { return mlp1_; }
    Dense& mlp2() { return mlp2_; }
    Conv3x3& refine() { return refine_; }
    const Conv3x3& refine() const { return refine_; }

    std::vector<Param*> params();
    std::vector<const Param*> params() const;

private:
    void check_inputs(const Tensor& f_cs, const Tensor& f_r) const;

    std::string name_;
    int cs_channels_;
    int r_channels_;
    int merge_channels_;
    Dense mlp1_;
    Dense mlp2_;
    Conv3x3 refine_;
};

Tensor ssf_forward(const SsfModule& module, const Tensor& f_cs, const Tensor& f_r);

/// [f_cs ; relu(refine([f_cs ; f_r]))].
Tensor concat_fusion(const Tensor& f_cs, const Tensor& f_r, const Conv3x3& refine);

}  // namespace styler
