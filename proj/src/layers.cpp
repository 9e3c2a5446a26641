#include "styler/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "styler/archive.hpp"
#include "styler/errors.hpp"

namespace styler {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using StridedMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Bound on the im2col scratch per chunk (floats).
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

inline int reflect(int i, int n)
{
    if (n == 1) return 0;
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

struct ConvGeometry {
    int cin, h, w, stride, hout, wout;
    std::vector<int> col_index[3];  // reflected source column per (kx, x)
    std::vector<int> row_index[3];  // reflected source row per (ky, y)

    ConvGeometry(const Shape& in, int s)
        : cin(in.c), h(in.h), w(in.w), stride(s), hout(conv_out_size(in.h, s)), wout(conv_out_size(in.w, s))
    {
        for (int k = 0; k < 3; ++k) {
            col_index[k].resize(wout);
            row_index[k].resize(hout);
            for (int x = 0; x < wout; ++x) col_index[k][x] = reflect(x * stride + k - 1, w);
            for (int y = 0; y < hout; ++y) row_index[k][y] = reflect(y * stride + k - 1, h);
        }
    }

    int rows_per_chunk() const
    {
        const std::size_t per_row = static_cast<std::size_t>(cin) * 9 * wout;
        return static_cast<int>(std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_row, 1), 1, hout));
    }

    void im2col(const Tensor& x, int y0, int y1, RowMatrix& cols) const
    {
        const int p = (y1 - y0) * wout;
        cols.resize(static_cast<Eigen::Index>(cin) * 9, p);
        for (int ci = 0; ci < cin; ++ci) {
            const float* plane = x.channel(ci);
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    float* dst = cols.row(ci * 9 + ky * 3 + kx).data();
                    const int* cx = col_index[kx].data();
                    for (int y = y0; y < y1; ++y) {
                        const float* src = plane + static_cast<std::size_t>(row_index[ky][y]) * w;
                        for (int xo = 0; xo < wout; ++xo) *dst++ = src[cx[xo]];
                    }
                }
            }
        }
    }

    void col2im_add(const RowMatrix& cols, int y0, int y1, Tensor& gx) const
    {
        for (int ci = 0; ci < cin; ++ci) {
            float* plane = gx.channel(ci);
            for (int ky = 0; ky < 3; ++ky) {
                for (int kx = 0; kx < 3; ++kx) {
                    const float* src = cols.row(ci * 9 + ky * 3 + kx).data();
                    const int* cx = col_index[kx].data();
                    for (int y = y0; y < y1; ++y) {
                        float* dst = plane + static_cast<std::size_t>(row_index[ky][y]) * w;
                        for (int xo = 0; xo < wout; ++xo) dst[cx[xo]] += *src++;
                    }
                }
            }
        }
    }
};

}  // namespace

Param::Param(std::string n, std::vector<std::int64_t> s)
    : name(std::move(n)), shape(std::move(s))
{
    std::int64_t count = 1;
    for (auto d : shape) count *= d;
    value.assign(static_cast<std::size_t>(count), 0.0f);
    grad.assign(static_cast<std::size_t>(count), 0.0f);
}

void Param::zero_grad()
{
    std::fill(grad.begin(), grad.end(), 0.0f);
}

void Param::init_normal(Rng& rng, double variance)
{
    const double sd = std::sqrt(variance);
    for (auto& v : value) v = static_cast<float>(sd * rng.normal());
}

void store(const Param& p, TensorArchive& archive)
{
    archive.put(p.name, p.shape, std::vector<float>(p.value.begin(), p.value.end()));
}

void load(Param& p, const TensorArchive& archive)
{
    const auto& values = archive.get(p.name, p.shape).values;
    p.value.assign(values.begin(), values.end());
}

Conv3x3::Conv3x3(const std::string& name, int cin, int cout, int s)
    : in_channels(cin), out_channels(cout), stride(s), weight(name + ".weight", {cout, cin, 3, 3}),
      bias(name + ".bias", {cout})
{
    if (cin < 1 || cout < 1 || (s != 1 && s != 2)) {
        throw InvalidInput("invalid conv configuration for " + name);
    }
}

void Conv3x3::init_he(Rng& rng)
{
    weight.init_normal(rng, 2.0 / (in_channels * 9.0));
    std::fill(bias.value.begin(), bias.value.end(), 0.0f);
}

Tensor Conv3x3::forward(const Tensor& x) const
{
    if (x.channels() != in_channels) {
        throw InvalidInput(weight.name + ": expected " + std::to_string(in_channels) + " input channels, got " +
                           x.shape().str());
    }
    const ConvGeometry g(x.shape(), stride);
    Tensor out(out_channels, g.hout, g.wout);
    const Eigen::Map<const RowMatrix> w(weight.value.data(), out_channels, static_cast<Eigen::Index>(in_channels) * 9);
    const Eigen::Map<const Eigen::VectorXf> b(bias.value.data(), out_channels);
    const int plane = g.hout * g.wout;
    RowMatrix cols;
    const int chunk = g.rows_per_chunk();
    for (int y0 = 0; y0 < g.hout; y0 += chunk) {
        const int y1 = std::min(g.hout, y0 + chunk);
        g.im2col(x, y0, y1, cols);
        StridedMap o(out.data() + static_cast<std::size_t>(y0) * g.wout, out_channels, cols.cols(),
                     Eigen::OuterStride<>(plane));
        o.noalias() = w * cols;
        o.colwise() += b;
    }
    return out;
}

Tensor Conv3x3::input_grad(const Tensor& x, const Tensor& grad_out) const
{
    const ConvGeometry g(x.shape(), stride);
    Tensor gx(x.shape());
    const Eigen::Map<const RowMatrix> w(weight.value.data(), out_channels, static_cast<Eigen::Index>(in_channels) * 9);
    const int plane = g.hout * g.wout;
    RowMatrix gcols;
    const int chunk = g.rows_per_chunk();
    for (int y0 = 0; y0 < g.hout; y0 += chunk) {
        const int y1 = std::min(g.hout, y0 + chunk);
        ConstStridedMap gy(grad_out.data() + static_cast<std::size_t>(y0) * g.wout, out_channels, (y1 - y0) * g.wout,
                           Eigen::OuterStride<>(plane));
        gcols.noalias() = w.transpose() * gy;
        g.col2im_add(gcols, y0, y1, gx);
    }
    return gx;
}

Tensor Conv3x3::backward(const Tensor& x, const Tensor& grad_out, bool want_input_grad)
{
    const ConvGeometry g(x.shape(), stride);
    if (grad_out.shape() != Shape{out_channels, g.hout, g.wout}) {
        throw InvalidInput(weight.name + ": gradient shape " + grad_out.shape().str() + " does not match output");
    }
    Tensor gx;
    if (want_input_grad) gx = Tensor(x.shape());
    const Eigen::Map<const RowMatrix> w(weight.value.data(), out_channels, static_cast<Eigen::Index>(in_channels) * 9);
    Eigen::Map<RowMatrix> gw(weight.grad.data(), out_channels, static_cast<Eigen::Index>(in_channels) * 9);
    Eigen::Map<Eigen::VectorXf> gb(bias.grad.data(), out_channels);
    const int plane = g.hout * g.wout;
    RowMatrix cols;
    RowMatrix gcols;
    const int chunk = g.rows_per_chunk();
    for (int y0 = 0; y0 < g.hout; y0 += chunk) {
        const int y1 = std::min(g.hout, y0 + chunk);
        g.im2col(x, y0, y1, cols);
        ConstStridedMap gy(grad_out.data() + static_cast<std::size_t>(y0) * g.wout, out_channels, cols.cols(),
                           Eigen::OuterStride<>(plane));
        gw.noalias() += gy * cols.transpose();
        gb += gy.rowwise().sum();
        if (want_input_grad) {
            gcols.noalias() = w.transpose() * gy;
            g.col2im_add(gcols, y0, y1, gx);
        }
    }
    return gx;
}

Dense::Dense(const std::string& name, int in, int out)
    : in_features(in), out_features(out), weight(name + ".weight", {out, in}), bias(name + ".bias", {out})
{
}

void Dense::init_he(Rng& rng)
{
    weight.init_normal(rng, 2.0 / in_features);
    std::fill(bias.value.begin(), bias.value.end(), 0.0f);
}

std::vector<float> Dense::forward(const std::vector<float>& x) const
{
    if (static_cast<int>(x.size()) != in_features) {
        throw InvalidInput(weight.name + ": expected " + std::to_string(in_features) + " inputs");
    }
    std::vector<float> y(out_features);
    for (int o = 0; o < out_features; ++o) {
        double acc = bias.value[o];
        for (int i = 0; i < in_features; ++i) acc += static_cast<double>(weight.value[o * in_features + i]) * x[i];
        y[o] = static_cast<float>(acc);
    }
    return y;
}

std::vector<float> Dense::backward(const std::vector<float>& x, const std::vector<float>& grad_out)
{
    std::vector<float> gx(in_features, 0.0f);
    for (int o = 0; o < out_features; ++o) {
        const float g = grad_out[o];
        bias.grad[o] += g;
        for (int i = 0; i < in_features; ++i) {
            weight.grad[o * in_features + i] += g * x[i];
            gx[i] += weight.value[o * in_features + i] * g;
        }
    }
    return gx;
}

void relu_inplace(Tensor& t)
{
    for (auto& v : t.values()) v = v > 0.0f ? v : 0.0f;
}

void relu_backward_inplace(Tensor& grad, const Tensor& activated)
{
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!(activated[i] > 0.0f)) grad[i] = 0.0f;
    }
}

Tensor max_pool2(const Tensor& x)
{
    if (x.height() % 2 != 0 || x.width() % 2 != 0) {
        throw InvalidInput("max_pool2 needs even spatial size, got " + x.shape().str());
    }
    Tensor out(x.channels(), x.height() / 2, x.width() / 2);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int xo = 0; xo < out.width(); ++xo)
                out(c, y, xo) = std::max(std::max(x(c, 2 * y, 2 * xo), x(c, 2 * y, 2 * xo + 1)),
                                         std::max(x(c, 2 * y + 1, 2 * xo), x(c, 2 * y + 1, 2 * xo + 1)));
    return out;
}

Tensor max_pool2_backward(const Tensor& x, const Tensor& grad_out)
{
    Tensor gx(x.shape());
    for (int c = 0; c < x.channels(); ++c) {
        for (int y = 0; y < grad_out.height(); ++y) {
            for (int xo = 0; xo < grad_out.width(); ++xo) {
                // First maximum in scan order receives the gradient.
                int by = 2 * y;
                int bx = 2 * xo;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx)
                        if (x(c, 2 * y + dy, 2 * xo + dx) > x(c, by, bx)) {
                            by = 2 * y + dy;
                            bx = 2 * xo + dx;
                        }
                gx(c, by, bx) += grad_out(c, y, xo);
            }
        }
    }
    return gx;
}

Tensor upsample2(const Tensor& x)
{
    Tensor out(x.channels(), x.height() * 2, x.width() * 2);
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < out.height(); ++y)
            for (int xo = 0; xo < out.width(); ++xo) out(c, y, xo) = x(c, y / 2, xo / 2);
    return out;
}

Tensor upsample2_backward(const Tensor& grad_out)
{
    Tensor gx(grad_out.channels(), grad_out.height() / 2, grad_out.width() / 2);
    for (int c = 0; c < grad_out.channels(); ++c)
        for (int y = 0; y < grad_out.height(); ++y)
            for (int xo = 0; xo < grad_out.width(); ++xo) gx(c, y / 2, xo / 2) += grad_out(c, y, xo);
    return gx;
}

}  // namespace styler
