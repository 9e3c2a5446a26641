#include "styler/evalkit.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "styler/errors.hpp"
#include "styler/losses.hpp"
#include "styler/pipeline.hpp"
#include "styler/rng.hpp"

namespace styler {

std::vector<double> gaussian_taps(int size, double sigma)
{
    if (size < 1 || size % 2 == 0 || !(sigma > 0.0)) {
        throw InvalidInput("gaussian window needs an odd positive size and positive sigma");
    }
    std::vector<double> taps(size);
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

std::vector<double> luminance(const Image& image)
{
    const int n = image.height() * image.width();
    const Tensor& t = image.tensor();
    std::vector<double> y(n);
    for (int p = 0; p < n; ++p) {
        y[p] = 0.299 * t.channel(0)[p] + 0.587 * t.channel(1)[p] + 0.114 * t.channel(2)[p];
    }
    return y;
}

namespace {

// Valid-mode separable filtering of a row-major h×w map.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& taps)
{
    const int k = static_cast<int>(taps.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * src[y * w + x + i];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < k; ++i) acc += taps[i] * rows[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, const SsimConfig& cfg)
{
    if (a.height() != b.height() || a.width() != b.width()) {
        throw InvalidInput("ssim: shape mismatch " + a.tensor().shape().str() + " vs " + b.tensor().shape().str());
    }
    if (a.height() < cfg.window || a.width() < cfg.window) {
        throw InvalidInput("ssim: image smaller than the " + std::to_string(cfg.window) + "-pixel window");
    }
    if (!a.in_unit_range() || !b.in_unit_range()) throw ContractViolation("ssim: pixel values outside [0,1]");

    const int h = a.height();
    const int w = a.width();
    const auto taps = gaussian_taps(cfg.window, cfg.sigma);
    const auto x = luminance(a);
    const auto y = luminance(b);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto mu_x = filter_valid(x, h, w, taps);
    const auto mu_y = filter_valid(y, h, w, taps);
    const auto e_xx = filter_valid(xx, h, w, taps);
    const auto e_yy = filter_valid(yy, h, w, taps);
    const auto e_xy = filter_valid(xy, h, w, taps);

    const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
    const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double mx = mu_x[i];
        const double my = mu_y[i];
        const double vx = e_xx[i] - mx * mx;
        const double vy = e_yy[i] - my * my;
        const double cxy = e_xy[i] - mx * my;
        const double num = (2.0 * mx * my + c1) * (2.0 * cxy + c2);
        const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
        sum += num / den;
    }
    return sum / static_cast<double>(mu_x.size());
}

namespace {

Tensor unit_channels(const Tensor& f)
{
    Tensor out(f.shape());
    const int n = f.height() * f.width();
    for (int p = 0; p < n; ++p) {
        double sq = 0.0;
        for (int c = 0; c < f.channels(); ++c) sq += static_cast<double>(f.channel(c)[p]) * f.channel(c)[p];
        const double inv = 1.0 / (std::sqrt(sq) + 1e-10);
        for (int c = 0; c < f.channels(); ++c) out.channel(c)[p] = static_cast<float>(f.channel(c)[p] * inv);
    }
    return out;
}

}  // namespace

double perceptual_distance(const Image& a, const Image& b, const Encoder& enc)
{
    if (a.height() != b.height() || a.width() != b.width()) {
        throw InvalidInput("perceptual_distance: shape mismatch " + a.tensor().shape().str() + " vs " +
                           b.tensor().shape().str());
    }
    const TapSet taps = {Tap::ReLU_1_1, Tap::ReLU_2_1, Tap::ReLU_3_1, Tap::ReLU_4_1};
    const auto fa = enc.extract(a, taps);
    const auto fb = enc.extract(b, taps);
    double sum = 0.0;
    for (Tap t : taps) sum += perceptual_loss(unit_channels(fa.at(t)), unit_channels(fb.at(t)));
    return sum / static_cast<double>(taps.size());
}

std::string hardware_note()
{
    std::string model = "unknown CPU";
    std::ifstream in("/proc/cpuinfo");
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) model = line.substr(colon + 2);
            break;
        }
    }
    return model + ", " + std::to_string(std::thread::hardware_concurrency()) + " logical cores, single-threaded run";
}

BenchResult bench_stylize(const std::optional<std::filesystem::path>& coarse_ckpt,
                          const std::optional<std::filesystem::path>& fine_ckpt, int n, int size)
{
    if (n < 1) throw InvalidInput("bench: n must be at least 1");
    if (size < 16 || size % 16 != 0) throw InvalidInput("bench: size must be a positive multiple of 16");
    if (coarse_ckpt.has_value() != fine_ckpt.has_value()) {
        throw ConfigError("bench: give both checkpoints or neither");
    }
    const Stylizer model = coarse_ckpt ? Stylizer::load(*coarse_ckpt, *fine_ckpt) : Stylizer::fresh_toy(1);

    Rng rng(2024);
    Image content(size, size);
    Image style(size, size);
    for (auto& v : content.tensor().values()) v = static_cast<float>(rng.uniform());
    for (auto& v : style.tensor().values()) v = static_cast<float>(rng.uniform());

    for (int i = 0; i < 3; ++i) model.stylize(content, style);
    BenchResult r;
    r.n = n;
    r.size = size;
    for (int i = 0; i < n; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        model.stylize(content, style);
        const auto t1 = std::chrono::steady_clock::now();
        r.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    double sum = 0.0;
    for (double s : r.samples) sum += s;
    r.mean_seconds = sum / n;
    double var = 0.0;
    for (double s : r.samples) var += (s - r.mean_seconds) * (s - r.mean_seconds);
    r.std_seconds = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    r.hardware = hardware_note();
    return r;
}

}  // namespace styler
