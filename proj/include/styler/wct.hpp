#pragma once

#include "styler/tensor.hpp"

namespace styler {

struct WctConfig {
    /// Covariance eigenvalues are floored here before the inverse square
    /// root of whitening.
    double eig_floor = 1e-5;
};

/// ZCA whitening: E·diag(max(λ, floor)^(-1/2))·Eᵀ·(f − mean).
/// A constant feature whitens to zeros.
Tensor whiten(const Tensor& content, const WctConfig& cfg = {});

/// ZCA coloring with the style statistics: E_s·diag(max(λ_s, 0)^(1/2))·E_sᵀ·f + mean_s.
Tensor color(const Tensor& whitened, const Tensor& style, const WctConfig& cfg = {});

/// color(whiten(content), style). Output keeps the content's spatial size;
/// the style may have any spatial size but the same channel count.
Tensor wct_transform(const Tensor& content, const Tensor& style, const WctConfig& cfg = {});

}  // namespace styler
