#pragma once

#include <cstddef>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace styler {

/// 64-byte aligned allocation. Eigen's vectorized kernels peel loops
/// according to pointer alignment, so aligned buffers make results
/// independent of where the allocator happened to place them.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept
    {
    }

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept
    {
        return true;
    }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

struct Shape {
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t numel() const { return static_cast<std::size_t>(c) * h * w; }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense channel-major c×h×w float tensor. This is the carrier of every
/// activation in the networks and of images internally.
class Tensor {
public:
    Tensor() = default;
    Tensor(int c, int h, int w, float fill = 0.0f);
    explicit Tensor(Shape s, float fill = 0.0f) : Tensor(s.c, s.h, s.w, fill) {}
    Tensor(Shape s, const std::vector<float>& values);
    Tensor(Shape s, std::span<const float> values);

    const Shape& shape() const { return shape_; }
    int channels() const { return shape_.c; }
    int height() const { return shape_.h; }
    int width() const { return shape_.w; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    float* channel(int c) { return data_.data() + c * shape_.plane(); }
    const float* channel(int c) const { return data_.data() + c * shape_.plane(); }

    float& operator()(int c, int y, int x) { return data_[(c * shape_.plane()) + y * shape_.w + x]; }
    float operator()(int c, int y, int x) const { return data_[(c * shape_.plane()) + y * shape_.w + x]; }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator*=(float s);

    bool all_finite() const;
    float max_abs() const;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    FloatBuffer data_;
};

/// Stacks channels of `a` then `b`; spatial sizes must agree.
Tensor concat_channels(const Tensor& a, const Tensor& b);

/// Channels [begin, begin + count) of `t`.
Tensor slice_channels(const Tensor& t, int begin, int count);

double sum_squared_difference(const Tensor& a, const Tensor& b);

}  // namespace styler
