#include "styler/losses.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "styler/errors.hpp"
#include "styler/linalg.hpp"
#include "styler/rng.hpp"

namespace styler {

namespace {

constexpr double kNormEps = 1e-8;
constexpr double kStdEps = 1e-8;

void require_same_shape(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.shape() != b.shape()) {
        throw InvalidInput(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

void require_same_channels(const Tensor& a, const Tensor& b, const char* what)
{
    if (a.channels() != b.channels()) {
        throw InvalidInput(std::string(what) + ": channel mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
}

// Position-major copy of selected positions: rows are positions, columns channels.
struct PositionSet {
    int count = 0;
    int channels = 0;
    std::vector<double> values;  // count × channels
    std::vector<double> norms;

    PositionSet(const Tensor& f, const std::vector<int>& positions)
        : count(static_cast<int>(positions.size())), channels(f.channels())
    {
        values.resize(static_cast<std::size_t>(count) * channels);
        norms.resize(count);
        for (int i = 0; i < count; ++i) {
            double sq = 0.0;
            for (int c = 0; c < channels; ++c) {
                const double v = f.channel(c)[positions[i]];
                values[static_cast<std::size_t>(i) * channels + c] = v;
                sq += v * v;
            }
            norms[i] = std::sqrt(sq);
        }
    }

    const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * channels; }
};

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrixXd cosine_costs(const PositionSet& s, const PositionSet& x)
{
    // Stylized features channel-major so each row vectorizes over j; every
    // entry still sums its channel products in channel order.
    std::vector<double> xt(static_cast<std::size_t>(x.channels) * x.count);
    for (int j = 0; j < x.count; ++j)
        for (int c = 0; c < x.channels; ++c) xt[static_cast<std::size_t>(c) * x.count + j] = x.row(j)[c];
    RowMatrixXd cost(s.count, x.count);
    for (int i = 0; i < s.count; ++i) {
        const double* si = s.row(i);
        double* ci = cost.data() + static_cast<std::size_t>(i) * x.count;
        std::fill(ci, ci + x.count, 0.0);
        for (int c = 0; c < s.channels; ++c) {
            const double v = si[c];
            const double* xc = xt.data() + static_cast<std::size_t>(c) * x.count;
            for (int j = 0; j < x.count; ++j) ci[j] += v * xc[j];
        }
        const double a = s.norms[i] + kNormEps;
        for (int j = 0; j < x.count; ++j) ci[j] = 1.0 - ci[j] / (a * (x.norms[j] + kNormEps));
    }
    return cost;
}

std::vector<int> all_positions(const Tensor& f)
{
    std::vector<int> idx(f.shape().plane());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

void LossWeights::validate() const
{
    for (double w : {alpha, lambda1, lambda2, lambda3, recon_lambda}) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("loss weights must be finite and non-negative");
    }
}

TapSet LayerAssignment::all() const
{
    TapSet out = perceptual;
    out.insert(meanvar.begin(), meanvar.end());
    out.insert(remd.begin(), remd.end());
    out.insert(gram.begin(), gram.end());
    return out;
}

double perceptual_loss(const Tensor& f_c, const Tensor& f_cs, Tensor* grad_cs)
{
    require_same_shape(f_c, f_cs, "perceptual_loss");
    const double n = static_cast<double>(f_c.size());
    if (grad_cs) {
        *grad_cs = Tensor(f_cs.shape());
        for (std::size_t i = 0; i < f_cs.size(); ++i) {
            (*grad_cs)[i] = static_cast<float>(2.0 * (static_cast<double>(f_cs[i]) - f_c[i]) / n);
        }
    }
    return sum_squared_difference(f_c, f_cs) / n;
}

Eigen::MatrixXd cost_matrix(const Tensor& f_s, const Tensor& f_cs)
{
    require_same_channels(f_s, f_cs, "cost_matrix");
    return cosine_costs(PositionSet(f_s, all_positions(f_s)), PositionSet(f_cs, all_positions(f_cs)));
}

std::vector<int> remd_sample_indices(int n, const RemdConfig& cfg, int side)
{
    if (cfg.max_samples < 1) throw ConfigError("remd max_samples must be positive");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (n <= cfg.max_samples) return idx;
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(side)));
    for (int i = 0; i < cfg.max_samples; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cfg.max_samples);
    return idx;
}

double remd_loss(const Tensor& f_s, const Tensor& f_cs, const RemdConfig& cfg, Tensor* grad_cs)
{
    require_same_channels(f_s, f_cs, "remd_loss");
    const auto s_idx = remd_sample_indices(static_cast<int>(f_s.shape().plane()), cfg, 0);
    const auto x_idx = remd_sample_indices(static_cast<int>(f_cs.shape().plane()), cfg, 1);
    if (s_idx.empty() || x_idx.empty()) throw InvalidInput("remd_loss needs at least one position per side");

    const PositionSet s(f_s, s_idx);
    const PositionSet x(f_cs, x_idx);
    const RowMatrixXd cost = cosine_costs(s, x);

    // Row side: every style position to its nearest stylized position.
    // Column side: every stylized position to its nearest style position,
    // scanned in row order; strict comparisons keep the lowest index on ties.
    std::vector<int> row_arg(s.count);
    std::vector<int> col_arg(x.count, 0);
    std::vector<double> col_best(cost.row(0).begin(), cost.row(0).end());
    double row_term = 0.0;
    for (int i = 0; i < s.count; ++i) {
        const double* ci = cost.data() + static_cast<std::size_t>(i) * x.count;
        int best = 0;
        for (int j = 1; j < x.count; ++j) {
            if (ci[j] < ci[best]) best = j;
        }
        row_arg[i] = best;
        row_term += ci[best];
        if (i == 0) continue;
        for (int j = 0; j < x.count; ++j) {
            if (ci[j] < col_best[j]) {
                col_best[j] = ci[j];
                col_arg[j] = i;
            }
        }
    }
    row_term /= s.count;

    double col_term = 0.0;
    for (int j = 0; j < x.count; ++j) col_term += col_best[j];
    col_term /= x.count;

    if (grad_cs) {
        *grad_cs = Tensor(f_cs.shape());
        // d C_ij / d x_j = −s_i/(a·b) + (s_i·x_j)/(a·b²)·x_j/‖x_j‖, a = ‖s_i‖+ε, b = ‖x_j‖+ε.
        auto accumulate = [&](int i, int j, double scale) {
            const double* si = s.row(i);
            const double* xj = x.row(j);
            const double a = s.norms[i] + kNormEps;
            const double b = x.norms[j] + kNormEps;
            double dot = 0.0;
            for (int c = 0; c < s.channels; ++c) dot += si[c] * xj[c];
            const double radial = x.norms[j] > 0.0 ? dot / (a * b * b * x.norms[j]) : 0.0;
            const int pos = x_idx[j];
            for (int c = 0; c < s.channels; ++c) {
                const double d = -si[c] / (a * b) + radial * xj[c];
                grad_cs->channel(c)[pos] += static_cast<float>(scale * d);
            }
        };
        if (row_term >= col_term) {
            for (int i = 0; i < s.count; ++i) accumulate(i, row_arg[i], 1.0 / s.count);
        } else {
            for (int j = 0; j < x.count; ++j) accumulate(col_arg[j], j, 1.0 / x.count);
        }
    }
    return std::max(row_term, col_term);
}

Eigen::MatrixXd gram_matrix(const Tensor& f)
{
    const Eigen::MatrixXd m = as_matrix(f);
    return (m * m.transpose()) / static_cast<double>(f.size());
}

double gram_loss(const Tensor& f_s, const Tensor& f_cs, Tensor* grad_cs)
{
    require_same_channels(f_s, f_cs, "gram_loss");
    const Eigen::MatrixXd diff = gram_matrix(f_cs) - gram_matrix(f_s);
    if (grad_cs) {
        const Eigen::MatrixXd g = (4.0 / static_cast<double>(f_cs.size())) * diff * as_matrix(f_cs);
        *grad_cs = from_matrix(g, f_cs.height(), f_cs.width());
    }
    return diff.squaredNorm();
}

double meanvar_loss(const Tensor& f_s, const Tensor& f_cs, Tensor* grad_cs)
{
    require_same_channels(f_s, f_cs, "meanvar_loss");
    const int channels = f_s.channels();
    auto stats = [](const Tensor& f, int c) {
        const float* p = f.channel(c);
        const std::size_t n = f.shape().plane();
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += p[i];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
        var /= static_cast<double>(n);
        return std::pair{mean, std::sqrt(var + kStdEps)};
    };
    if (grad_cs) *grad_cs = Tensor(f_cs.shape());
    double mean_term = 0.0;
    double std_term = 0.0;
    const double n = static_cast<double>(f_cs.shape().plane());
    for (int c = 0; c < channels; ++c) {
        const auto [mu_s, sigma_s] = stats(f_s, c);
        const auto [mu, sigma] = stats(f_cs, c);
        mean_term += (mu_s - mu) * (mu_s - mu);
        std_term += (sigma_s - sigma) * (sigma_s - sigma);
        if (grad_cs) {
            const float* p = f_cs.channel(c);
            float* g = grad_cs->channel(c);
            const double g_mu = -2.0 * (mu_s - mu) / (channels * n);
            const double g_sigma = -2.0 * (sigma_s - sigma) / (channels * n * sigma);
            for (std::size_t i = 0; i < f_cs.shape().plane(); ++i) {
                g[i] = static_cast<float>(g_mu + g_sigma * (p[i] - mu));
            }
        }
    }
    return (mean_term + std_term) / channels;
}

double reconstruction_loss(const Tensor& output, const Tensor& input, const Encoder& enc, double lambda,
                           Tensor* grad_output)
{
    require_same_shape(output, input, "reconstruction_loss");
    const double n = static_cast<double>(output.size());
    double loss = sum_squared_difference(output, input) / n;
    if (grad_output) {
        *grad_output = Tensor(output.shape());
        for (std::size_t i = 0; i < output.size(); ++i) {
            (*grad_output)[i] = static_cast<float>(2.0 * (static_cast<double>(output[i]) - input[i]) / n);
        }
    }
    if (lambda == 0.0) return loss;

    const TapSet taps = {Tap::ReLU_1_1, Tap::ReLU_2_1, Tap::ReLU_3_1, Tap::ReLU_4_1};
    const auto target = enc.extract(input, taps);
    EncoderTape tape;
    const auto features = enc.extract(output, taps, grad_output ? &tape : nullptr);
    TapFeatures tap_grads;
    for (Tap t : taps) {
        Tensor g;
        loss += lambda * perceptual_loss(target.at(t), features.at(t), grad_output ? &g : nullptr);
        if (grad_output) {
            g *= static_cast<float>(lambda);
            tap_grads.emplace(t, std::move(g));
        }
    }
    if (grad_output) *grad_output += enc.backward(tape, tap_grads);
    return loss;
}

double weighted_total(const LossTerms& terms, const LossWeights& weights)
{
    return weights.alpha * terms.perceptual + weights.lambda1 * terms.remd + weights.lambda2 * terms.gram +
           weights.lambda3 * terms.meanvar;
}

LossResult total_loss(const TapFeatures& content, const TapFeatures& style, const TapFeatures& stylized,
                      const LossWeights& weights, const LayerAssignment& assignment, const RemdConfig& remd,
                      bool want_grad)
{
    weights.validate();
    auto fetch = [](const TapFeatures& features, Tap t, const char* which) -> const Tensor& {
        auto it = features.find(t);
        if (it == features.end()) {
            throw ConfigError(std::string("total_loss: ") + which + " features are missing tap " +
                              std::string(tap_name(t)));
        }
        return it->second;
    };

    LossResult result;
    auto add_grad = [&](Tap t, Tensor& g, double weight) {
        g *= static_cast<float>(weight);
        auto it = result.grad_stylized.find(t);
        if (it == result.grad_stylized.end()) {
            result.grad_stylized.emplace(t, std::move(g));
        } else {
            it->second += g;
        }
    };

    Tensor g;
    Tensor* gp = want_grad ? &g : nullptr;
    if (weights.alpha != 0.0) {
        for (Tap t : assignment.perceptual) {
            result.terms.perceptual += perceptual_loss(fetch(content, t, "content"), fetch(stylized, t, "stylized"), gp);
            if (want_grad) add_grad(t, g, weights.alpha);
        }
    }
    if (weights.lambda1 != 0.0) {
        for (Tap t : assignment.remd) {
            RemdConfig layer_cfg = remd;
            layer_cfg.seed = mix_seed(remd.seed, static_cast<std::uint64_t>(t));
            result.terms.remd += remd_loss(fetch(style, t, "style"), fetch(stylized, t, "stylized"), layer_cfg, gp);
            if (want_grad) add_grad(t, g, weights.lambda1);
        }
    }
    if (weights.lambda2 != 0.0) {
        for (Tap t : assignment.gram) {
            result.terms.gram += gram_loss(fetch(style, t, "style"), fetch(stylized, t, "stylized"), gp);
            if (want_grad) add_grad(t, g, weights.lambda2);
        }
    }
    if (weights.lambda3 != 0.0) {
        for (Tap t : assignment.meanvar) {
            result.terms.meanvar += meanvar_loss(fetch(style, t, "style"), fetch(stylized, t, "stylized"), gp);
            if (want_grad) add_grad(t, g, weights.lambda3);
        }
    }
    result.terms.total = weighted_total(result.terms, weights);
    return result;
}

}  // namespace styler
