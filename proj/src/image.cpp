#include "styler/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <png.h>
// jpeglib.h expects FILE and size_t to be declared.
#include <jpeglib.h>

#include "styler/errors.hpp"
#include "styler/rng.hpp"

namespace styler {

Image::Image(Tensor pixels)
    : pixels_(std::move(pixels))
{
    if (pixels_.channels() != 3) {
        throw InvalidInput("image needs 3 channels, got " + pixels_.shape().str());
    }
}

Image Image::clamped() const
{
    Image out = *this;
    for (auto& v : out.pixels_.values()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

bool Image::in_unit_range() const
{
    return std::all_of(pixels_.values().begin(), pixels_.values().end(),
                       [](float v) { return std::isfinite(v) && v >= 0.0f && v <= 1.0f; });
}

namespace {

Image from_interleaved(const std::vector<unsigned char>& rgb, int h, int w)
{
    Image img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * w + x) * 3;
            for (int c = 0; c < 3; ++c) img(c, y, x) = rgb[base + c] / 255.0f;
        }
    }
    return img;
}

Image decode_png(const std::filesystem::path& path)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError(path.string() + ": cannot decode PNG: " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw IoError(path.string() + ": cannot decode PNG: " + msg);
    }
    return from_interleaved(buffer, static_cast<int>(image.height), static_cast<int>(image.width));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    bool warned = false;
    char message[JMSG_LENGTH_MAX] = {};
};

void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_emit_message(j_common_ptr cinfo, int level)
{
    // Negative levels are warnings, e.g. premature end of data.
    if (level < 0) {
        auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
        if (!err->warned) (*cinfo->err->format_message)(cinfo, err->message);
        err->warned = true;
    }
}

Image decode_jpeg(const std::filesystem::path& path)
{
    std::FILE* file = std::fopen(path.c_str(), "rb");
    if (file == nullptr) throw IoError(path.string() + ": cannot open");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(file, &std::fclose);

    jpeg_decompress_struct cinfo{};
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_emit_message;
    std::vector<unsigned char> rgb;
    int h = 0;
    int w = 0;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError(path.string() + ": cannot decode JPEG: " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    h = static_cast<int>(cinfo.output_height);
    w = static_cast<int>(cinfo.output_width);
    rgb.resize(static_cast<std::size_t>(h) * w * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    if (err.warned) {
        throw IoError(path.string() + ": corrupt JPEG: " + err.message);
    }
    return from_interleaved(rgb, h, w);
}

}  // namespace

Image load_image(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string() + ": cannot open");
    unsigned char magic[8] = {};
    in.read(reinterpret_cast<char*>(magic), sizeof magic);
    if (in.gcount() >= 8 && png_sig_cmp(magic, 0, 8) == 0) return decode_png(path);
    if (in.gcount() >= 3 && magic[0] == 0xFF && magic[1] == 0xD8 && magic[2] == 0xFF) return decode_jpeg(path);
    throw IoError(path.string() + ": not a PNG or JPEG file");
}

void save_image(const Image& image, const std::filesystem::path& path)
{
    const int h = image.height();
    const int w = image.width();
    std::vector<unsigned char> rgb(static_cast<std::size_t>(h) * w * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const float v = std::clamp(image(c, y, x), 0.0f, 1.0f);
                rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
                    static_cast<unsigned char>(std::lround(v * 255.0f));
            }
        }
    }
    png_image out{};
    out.version = PNG_IMAGE_VERSION;
    out.width = static_cast<png_uint_32>(w);
    out.height = static_cast<png_uint_32>(h);
    out.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&out, path.c_str(), 0, rgb.data(), 0, nullptr)) {
        std::string msg = out.message;
        png_image_free(&out);
        throw IoError(path.string() + ": cannot write PNG: " + msg);
    }
}

Image resize(const Image& image, int target_h, int target_w)
{
    if (target_h < 1 || target_w < 1) {
        throw InvalidInput("resize target must be at least 1x1");
    }
    const int h = image.height();
    const int w = image.width();
    if (h == target_h && w == target_w) return image;
    Image out(target_h, target_w);
    const double sy = static_cast<double>(h) / target_h;
    const double sx = static_cast<double>(w) / target_w;
    for (int y = 0; y < target_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                const double top = (1.0 - wx) * image(c, y0, x0) + wx * image(c, y0, x1);
                const double bottom = (1.0 - wx) * image(c, y1, x0) + wx * image(c, y1, x1);
                out(c, y, x) = static_cast<float>((1.0 - wy) * top + wy * bottom);
            }
        }
    }
    return out;
}

Image downsample2(const Image& image)
{
    const int h = image.height();
    const int w = image.width();
    if (h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0) {
        throw InvalidInput("downsample2 needs even dimensions, got " + std::to_string(h) + "x" + std::to_string(w));
    }
    Image out(h / 2, w / 2);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < h / 2; ++y) {
            for (int x = 0; x < w / 2; ++x) {
                const double s = static_cast<double>(image(c, 2 * y, 2 * x)) + image(c, 2 * y, 2 * x + 1) +
                                 image(c, 2 * y + 1, 2 * x) + image(c, 2 * y + 1, 2 * x + 1);
                out(c, y, x) = static_cast<float>(0.25 * s);
            }
        }
    }
    return out;
}

Image hconcat(const std::vector<Image>& tiles)
{
    if (tiles.empty()) throw InvalidInput("hconcat of no images");
    const int h = tiles.front().height();
    int total_w = 0;
    for (const auto& t : tiles) {
        if (t.height() != h) throw InvalidInput("hconcat needs equal heights");
        total_w += t.width();
    }
    Image out(h, total_w);
    int offset = 0;
    for (const auto& t : tiles) {
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < t.width(); ++x) out(c, y, offset + x) = t(c, y, x);
        offset += t.width();
    }
    return out;
}

DatasetCursor::DatasetCursor(std::filesystem::path root, std::uint64_t seed)
    : root_(std::move(root)), seed_(seed)
{
    std::error_code ec;
    if (!std::filesystem::is_directory(root_, ec)) {
        throw ConfigError("dataset root is not a directory: " + root_.string());
    }
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files_.push_back(entry.path());
    }
    if (files_.empty()) {
        throw ConfigError("dataset root has no PNG/JPEG files: " + root_.string());
    }
    std::sort(files_.begin(), files_.end());
    shuffle_epoch();
}

void DatasetCursor::shuffle_epoch()
{
    order_ = files_;
    Rng rng(mix_seed(seed_, epoch_));
    for (std::size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[rng.below(i)]);
    }
    position_ = 0;
}

Image DatasetCursor::next()
{
    std::size_t failures = 0;
    while (true) {
        if (position_ == order_.size()) {
            ++epoch_;
            shuffle_epoch();
        }
        const auto& path = order_[position_++];
        try {
            return load_image(path);
        } catch (const IoError& e) {
            std::cerr << "warning: skipping " << e.what() << "\n";
            if (++failures >= files_.size()) {
                throw ConfigError("no decodable images under " + root_.string());
            }
        }
    }
}

}  // namespace styler
