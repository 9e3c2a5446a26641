#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "styler/encoder.hpp"
#include "styler/layers.hpp"
#include "styler/rng.hpp"
#include "styler/ssf.hpp"
#include "styler/tensor.hpp"

namespace styler::testing {

inline Tensor random_tensor(int c, int h, int w, std::uint64_t seed, double scale = 1.0, double offset = 0.0)
{
    Rng rng(seed);
    Tensor t(c, h, w);
    for (auto& v : t.values()) v = static_cast<float>(offset + scale * rng.normal());
    return t;
}

inline Tensor random_uniform(int c, int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 1.0)
{
    Rng rng(seed);
    Tensor t(c, h, w);
    for (auto& v : t.values()) v = static_cast<float>(lo + (hi - lo) * rng.uniform());
    return t;
}

/// ‖a − b‖ / max(‖a‖, ‖b‖): the gradient-check metric.
inline double relative_error(const Tensor& a, const Tensor& b)
{
    double diff = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (static_cast<double>(a[i]) - b[i]) * (static_cast<double>(a[i]) - b[i]);
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    const double denom = std::sqrt(std::max(na, nb));
    return denom == 0.0 ? std::sqrt(diff) : std::sqrt(diff) / denom;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(static_cast<double>(a[i]) - b[i]));
    return m;
}

/// Piecewise-linear networks have kinks wherever a ReLU switches or a pool
/// argmax moves. A central difference is only a valid oracle when both probes
/// stay in the linear region of the base point, so each evaluation reports a
/// region signature alongside its value and straddling coordinates are masked.
using RegionSignature = std::vector<std::uint8_t>;
using RegionFn = std::function<std::pair<double, RegionSignature>(const Tensor&)>;

struct RegionGrad {
    Tensor grad;
    std::vector<bool> valid;
    std::size_t n_valid = 0;
};

/// Each coordinate tries the steps of `eps_ladder` in order and keeps the
/// first central difference whose two probes both stay in the base region.
/// Larger steps are tried first because float32 rounding noise shrinks with
/// the step. Coordinates with no such step are masked.
inline RegionGrad finite_diff_in_region(const RegionFn& fn, const Tensor& x, const std::vector<double>& eps_ladder)
{
    RegionGrad out{Tensor(x.shape()), std::vector<bool>(x.size(), false), 0};
    const auto base = fn(x).second;
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float orig = probe[i];
        for (double eps : eps_ladder) {
            probe[i] = orig + static_cast<float>(eps);
            const double up_step = static_cast<double>(probe[i]) - orig;
            const auto up = fn(probe);
            probe[i] = orig - static_cast<float>(eps);
            const double down_step = static_cast<double>(orig) - probe[i];
            const auto down = fn(probe);
            probe[i] = orig;
            if (up.second == base && down.second == base) {
                out.grad[i] = static_cast<float>((up.first - down.first) / (up_step + down_step));
                out.valid[i] = true;
                ++out.n_valid;
                break;
            }
        }
    }
    return out;
}

inline RegionGrad finite_diff_in_region(const RegionFn& fn, const Tensor& x, double eps)
{
    return finite_diff_in_region(fn, x, std::vector<double>{eps});
}

/// relative_error restricted to the coordinates marked valid.
inline double relative_error(const Tensor& a, const Tensor& b, const std::vector<bool>& valid)
{
    Tensor ma(a.shape());
    Tensor mb(b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (valid[i]) {
            ma[i] = a[i];
            mb[i] = b[i];
        }
    }
    return relative_error(ma, mb);
}

/// ReLU on/off bits for every recorded activation plus the argmax of every
/// pooling window.
inline RegionSignature encoder_region(const EncoderTape& tape)
{
    RegionSignature sig;
    for (std::size_t i = 1; i < tape.activations.size(); ++i) {
        const Tensor& prev = tape.activations[i - 1];
        const Tensor& cur = tape.activations[i];
        if (cur.height() * 2 == prev.height() && cur.channels() == prev.channels()) {
            for (int c = 0; c < cur.channels(); ++c)
                for (int y = 0; y < cur.height(); ++y)
                    for (int x = 0; x < cur.width(); ++x) {
                        std::uint8_t arg = 0;
                        float best = prev(c, 2 * y, 2 * x);
                        for (std::uint8_t k = 1; k < 4; ++k) {
                            const float v = prev(c, 2 * y + k / 2, 2 * x + k % 2);
                            if (v > best) {
                                best = v;
                                arg = k;
                            }
                        }
                        sig.push_back(arg);
                    }
        } else {
            for (float v : cur.values()) sig.push_back(v > 0.0f ? 1 : 0);
        }
    }
    return sig;
}

/// Appends the ReLU on/off bits of `t` to `sig`.
inline void append_relu_bits(RegionSignature& sig, const Tensor& t)
{
    for (float v : t.values()) sig.push_back(v > 0.0f ? 1 : 0);
}

inline double weighted_sum(const Tensor& t, const Tensor& w)
{
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(t[i]) * w[i];
    return s;
}

inline Tensor param_tensor(const Param& p)
{
    return Tensor({1, 1, static_cast<int>(p.size())}, p.value);
}

inline Tensor grad_tensor(const Param& p)
{
    return Tensor({1, 1, static_cast<int>(p.size())}, p.grad);
}

inline void assign(Param& p, const Tensor& t)
{
    p.value.assign(t.values().begin(), t.values().end());
}

inline RegionSignature ssf_region(const SsfModule::Tape& tape)
{
    RegionSignature sig;
    for (float v : tape.hidden) sig.push_back(v > 0.0f ? 1 : 0);
    append_relu_bits(sig, tape.refined);
    return sig;
}

// Correlated feature: a random channel mix of Gaussian noise plus an offset.
inline Tensor correlated_feature(int c, int h, int w, std::uint64_t seed)
{
    const Tensor z = random_tensor(c, h, w, seed);
    const Tensor mix = random_tensor(1, c, c, seed + 1000);
    Rng rng(seed + 2000);
    Tensor out(c, h, w);
    for (int i = 0; i < c; ++i) {
        const double offset = rng.uniform() * 2.0;
        for (int p = 0; p < h * w; ++p) {
            double acc = offset;
            for (int j = 0; j < c; ++j) acc += mix[i * c + j] * z.channel(j)[p];
            out.channel(i)[p] = static_cast<float>(acc);
        }
    }
    return out;
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("styler_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace styler::testing
