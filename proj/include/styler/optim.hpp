#pragma once

#include <vector>

#include "styler/layers.hpp"

namespace styler {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed parameter list. Moments are kept
/// per parameter in the order given at construction.
class Adam {
public:
    Adam(std::vector<Param*> params, const AdamConfig& cfg = {});

    /// One update from the gradients currently stored in the parameters.
    void step();

    long steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<Param*> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    long t_ = 0;
};

}  // namespace styler
