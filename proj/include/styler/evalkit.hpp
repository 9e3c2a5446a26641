#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "styler/encoder.hpp"
#include "styler/image.hpp"

namespace styler {

struct SsimConfig {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_taps(int size, double sigma);

/// Luminance 0.299 R + 0.587 G + 0.114 B per pixel, row-major.
std::vector<double> luminance(const Image& image);

/// Mean SSIM index on luminance over every window position that fits
/// entirely inside the image. Images must share a shape, lie in [0,1] and
/// be at least one window in each dimension.
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

/// Mean over ReLU_1_1..ReLU_4_1 of the perceptual loss between features
/// scaled to unit length across channels at every position. A coarse
/// feature-space distance, not comparable to LPIPS.
double perceptual_distance(const Image& a, const Image& b, const Encoder& enc);

struct BenchResult {
    int n = 0;
    int size = 0;
    double mean_seconds = 0.0;
    double std_seconds = 0.0;
    std::vector<double> samples;
    std::string hardware;
};

/// Wall-clock stylization time of a size×size content/style pair, averaged
/// over n runs after three warm-up runs. Without checkpoints, freshly
/// initialized toy networks are timed.
BenchResult bench_stylize(const std::optional<std::filesystem::path>& coarse_ckpt,
                          const std::optional<std::filesystem::path>& fine_ckpt, int n, int size);

/// CPU model and logical core count, for reporting next to timings.
std::string hardware_note();

}  // namespace styler
