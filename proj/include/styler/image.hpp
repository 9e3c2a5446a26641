#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "styler/tensor.hpp"

namespace styler {

/// RGB picture with values in [0,1], stored channel-major (3×h×w).
class Image {
public:
    Image() = default;
    Image(int height, int width, float fill = 0.0f) : pixels_(3, height, width, fill) {}
    /// Wraps a 3-channel tensor. Values are taken as-is; call clamped() to
    /// enforce the [0,1] range.
    explicit Image(Tensor pixels);

    int height() const { return pixels_.height(); }
    int width() const { return pixels_.width(); }
    const Tensor& tensor() const { return pixels_; }
    Tensor& tensor() { return pixels_; }

    float& operator()(int c, int y, int x) { return pixels_(c, y, x); }
    float operator()(int c, int y, int x) const { return pixels_(c, y, x); }

    Image clamped() const;
    bool in_unit_range() const;

    bool operator==(const Image&) const = default;

private:
    Tensor pixels_;
};

/// Decodes PNG or JPEG (detected by signature). Grayscale is replicated to
/// three channels, alpha is dropped. Throws IoError naming the path on a
/// missing, truncated or undecodable file.
Image load_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; values are clamped and rounded to the nearest
/// level.
void save_image(const Image& image, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centers.
Image resize(const Image& image, int target_h, int target_w);

/// Exact halving by non-overlapping 2×2 averaging. Odd dimensions throw.
Image downsample2(const Image& image);

/// Image tiles laid out left to right (heights must agree).
Image hconcat(const std::vector<Image>& tiles);

/// Deterministic, seeded iteration over every *.png/*.jpg/*.jpeg below a
/// root directory. Single consumer.
class DatasetCursor {
public:
    DatasetCursor(std::filesystem::path root, std::uint64_t seed);

    std::size_t size() const { return files_.size(); }
    const std::vector<std::filesystem::path>& order() const { return order_; }
    std::size_t position() const { return position_; }

    /// Next decodable image in the seeded order; undecodable files are
    /// skipped with a warning on stderr. After the last file a new epoch
    /// starts with a fresh permutation derived from (seed, epoch).
    Image next();

private:
    void shuffle_epoch();

    std::filesystem::path root_;
    std::uint64_t seed_;
    std::vector<std::filesystem::path> files_;
    std::vector<std::filesystem::path> order_;
    std::size_t position_ = 0;
    std::uint64_t epoch_ = 0;
};

}  // namespace styler
