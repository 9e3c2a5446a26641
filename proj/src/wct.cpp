#include "styler/wct.hpp"

#include <cmath>

#include "styler/errors.hpp"
#include "styler/linalg.hpp"

namespace styler {

namespace {

Eigen::MatrixXd spectral_power(const SymEig& eig, double floor, double power)
{
    Eigen::VectorXd d(eig.values.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        d(i) = std::pow(std::max(eig.values(i), floor), power);
    }
    return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
}

}  // namespace

Tensor whiten(const Tensor& content, const WctConfig& cfg)
{
    if (!(cfg.eig_floor > 0.0)) throw InvalidInput("whiten: eig_floor must be positive");
    if (content.shape().plane() < 2) {
        throw InvalidInput("whiten needs at least two spatial positions, got " + content.shape().str());
    }
    const Moments m = covariance(content);
    Eigen::MatrixXd x = as_matrix(content);
    x.colwise() -= m.mean;
    const Eigen::MatrixXd transform = spectral_power(sym_eig(m.cov), cfg.eig_floor, -0.5);
    return from_matrix(transform * x, content.height(), content.width());
}

Tensor color(const Tensor& whitened, const Tensor& style, const WctConfig&)
{
    if (whitened.channels() != style.channels()) {
        throw InvalidInput("color: channel mismatch " + whitened.shape().str() + " vs style " + style.shape().str());
    }
    const Moments m = covariance(style);
    const Eigen::MatrixXd transform = spectral_power(sym_eig(m.cov), 0.0, 0.5);
    Eigen::MatrixXd y = transform * as_matrix(whitened);
    y.colwise() += m.mean;
    return from_matrix(y, whitened.height(), whitened.width());
}

Tensor wct_transform(const Tensor& content, const Tensor& style, const WctConfig& cfg)
{
    if (content.channels() != style.channels()) {
        throw InvalidInput("wct_transform: channel mismatch " + content.shape().str() + " vs " +
                           style.shape().str());
    }
    return color(whiten(content, cfg), style, cfg);
}

}  // namespace styler
