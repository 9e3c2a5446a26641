#include "styler/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "styler/errors.hpp"

namespace styler {

std::string Shape::str() const
{
    return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

Tensor::Tensor(int c, int h, int w, float fill)
    : shape_{c, h, w}
{
    if (c < 0 || h < 0 || w < 0) {
        throw InvalidInput("negative tensor dimension " + shape_.str());
    }
    data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape s, const std::vector<float>& values)
    : Tensor(s, std::span<const float>(values))
{
}

Tensor::Tensor(Shape s, std::span<const float> values)
    : shape_(s), data_(values.begin(), values.end())
{
    if (data_.size() != s.numel()) {
        throw InvalidInput("tensor " + s.str() + " given " + std::to_string(data_.size()) + " values");
    }
}

Tensor& Tensor::operator+=(const Tensor& other)
{
    if (other.shape_ != shape_) {
        throw InvalidInput("tensor add shape mismatch " + shape_.str() + " vs " + other.shape_.str());
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(float s)
{
    for (auto& v : data_) v *= s;
    return *this;
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

float Tensor::max_abs() const
{
    float m = 0.0f;
    for (float v : data_) m = std::max(m, std::fabs(v));
    return m;
}

Tensor concat_channels(const Tensor& a, const Tensor& b)
{
    if (a.height() != b.height() || a.width() != b.width()) {
        throw InvalidInput("channel concat needs equal spatial size, got " + a.shape().str() + " and " +
                           b.shape().str());
    }
    Tensor out(a.channels() + b.channels(), a.height(), a.width());
    std::copy(a.values().begin(), a.values().end(), out.data());
    std::copy(b.values().begin(), b.values().end(), out.data() + a.size());
    return out;
}

Tensor slice_channels(const Tensor& t, int begin, int count)
{
    if (begin < 0 || count < 0 || begin + count > t.channels()) {
        throw InvalidInput("channel slice out of range for " + t.shape().str());
    }
    Tensor out(count, t.height(), t.width());
    std::memcpy(out.data(), t.channel(begin), out.size() * sizeof(float));
    return out;
}

double sum_squared_difference(const Tensor& a, const Tensor& b)
{
    if (a.shape() != b.shape()) {
        throw InvalidInput("shape mismatch " + a.shape().str() + " vs " + b.shape().str());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc;
}

}  // namespace styler
