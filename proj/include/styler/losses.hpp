#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "styler/encoder.hpp"
#include "styler/tensor.hpp"

namespace styler {

/// Weights of L = α·l_p + λ1·l_r + λ2·l_g + λ3·l_m, plus the λ of the
/// reconstruction loss. A zero weight disables its term.
struct LossWeights {
    double alpha = 1.0;
    double lambda1 = 20.0;
    double lambda2 = 1000.0;
    double lambda3 = 5.0;
    double recon_lambda = 1.0;

    void validate() const;
};

struct LayerAssignment {
    TapSet perceptual = {Tap::ReLU_1_1, Tap::ReLU_2_1, Tap::ReLU_3_1, Tap::ReLU_4_1};
    TapSet meanvar = {Tap::ReLU_1_1, Tap::ReLU_2_1, Tap::ReLU_3_1, Tap::ReLU_4_1};
    TapSet remd = {Tap::ReLU_2_1, Tap::ReLU_3_1, Tap::ReLU_4_1};
    TapSet gram = {Tap::ReLU_1_2, Tap::ReLU_2_2, Tap::ReLU_3_3};

    TapSet all() const;
};

struct RemdConfig {
    /// Positions kept per side; larger sets are subsampled without
    /// replacement from `seed`.
    int max_samples = 1024;
    std::uint64_t seed = 0;
};

/// (1/(c·h·w))·‖F_c − F_cs‖². `grad_cs` receives d/dF_cs when given.
double perceptual_loss(const Tensor& f_c, const Tensor& f_cs, Tensor* grad_cs = nullptr);

/// Cosine-distance matrix between all spatial positions:
/// C_ij = 1 − s_i·x_j / ((‖s_i‖ + 1e-8)(‖x_j‖ + 1e-8)), rows over `f_s`.
Eigen::MatrixXd cost_matrix(const Tensor& f_s, const Tensor& f_cs);

/// The positions remd_loss keeps out of `n` for a given side (0 = style,
/// 1 = stylized). All positions, in order, when n ≤ max_samples.
std::vector<int> remd_sample_indices(int n, const RemdConfig& cfg, int side);

/// max(mean_i min_j C_ij, mean_j min_i C_ij) over the sampled positions.
/// The gradient follows the achieved minima (lowest index on ties) of the
/// larger side (the row side on a tie).
double remd_loss(const Tensor& f_s, const Tensor& f_cs, const RemdConfig& cfg = {}, Tensor* grad_cs = nullptr);

/// Gram matrix F·Fᵀ/(c·h·w) with F viewed as c×(h·w).
Eigen::MatrixXd gram_matrix(const Tensor& f);

/// ‖G(F_s) − G(F_cs)‖²_F.
double gram_loss(const Tensor& f_s, const Tensor& f_cs, Tensor* grad_cs = nullptr);

/// mean_c (μ_s − μ_cs)² + mean_c (σ_s − σ_cs)², population σ with 1e-8
/// inside the square root.
double meanvar_loss(const Tensor& f_s, const Tensor& f_cs, Tensor* grad_cs = nullptr);

/// Mean squared pixel error plus λ·Σ_{X=1..4} perceptual_loss at ReLU_X_1.
/// `output` is the raw (unclamped) reconstruction.
double reconstruction_loss(const Tensor& output, const Tensor& input, const Encoder& enc, double lambda,
                           Tensor* grad_output = nullptr);

struct LossTerms {
    double perceptual = 0.0;
    double remd = 0.0;
    double gram = 0.0;
    double meanvar = 0.0;
    double total = 0.0;
};

/// α·l_p + λ1·l_r + λ2·l_g + λ3·l_m.
double weighted_total(const LossTerms& terms, const LossWeights& weights);

struct LossResult {
    LossTerms terms;
    TapFeatures grad_stylized;  // d total / d F_cs per tap, when requested
};

/// Each term is the unweighted sum over its assigned taps; terms with zero
/// weight are skipped and read 0. The RemdConfig seed is mixed with the tap
/// so each layer draws its own subsample.
LossResult total_loss(const TapFeatures& content, const TapFeatures& style, const TapFeatures& stylized,
                      const LossWeights& weights, const LayerAssignment& assignment, const RemdConfig& remd,
                      bool want_grad);

}  // namespace styler
