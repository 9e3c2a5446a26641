#include "styler/optim.hpp"

#include <cmath>

#include "styler/errors.hpp"

namespace styler {

Adam::Adam(std::vector<Param*> params, const AdamConfig& cfg) : params_(std::move(params)), cfg_(cfg)
{
    if (!(cfg.lr > 0.0) || cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0 ||
        !(cfg.eps > 0.0)) {
        throw ConfigError("Adam: lr and eps must be positive and betas in [0, 1)");
    }
    for (const Param* p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step()
{
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        Param& p = *params_[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p.value[i] = static_cast<float>(p.value[i] - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
        }
    }
}

}  // namespace styler
