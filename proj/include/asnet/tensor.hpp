#pragma once

#include <algorithm>
#include <cstddef>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace asnet {

/// 64-byte aligned storage. Vectorised kernels pick their code path from the
/// address alignment, so a fixed alignment keeps results bit-reproducible.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept {
        return true;
    }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// NCHW shape of a dense 4-D tensor.
struct Shape4 {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    [[nodiscard]] std::size_t size() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    [[nodiscard]] std::size_t sample_size() const {
        return static_cast<std::size_t>(c) * h * w;
    }
    bool operator==(const Shape4&) const = default;

    [[nodiscard]] std::string str() const;
};

/// Dense row-major NCHW tensor owning its storage.
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w, T fill = T(0)) : shape_{n, c, h, w} {
        if (n < 0 || c < 0 || h < 0 || w < 0) {
            throw std::invalid_argument("Tensor: negative dimension " + shape_.str());
        }
        data_.assign(shape_.size(), fill);
    }
    explicit Tensor(Shape4 s, T fill = T(0)) : Tensor(s.n, s.c, s.h, s.w, fill) {}

    [[nodiscard]] const Shape4& shape() const { return shape_; }
    [[nodiscard]] int n() const { return shape_.n; }
    [[nodiscard]] int c() const { return shape_.c; }
    [[nodiscard]] int h() const { return shape_.h; }
    [[nodiscard]] int w() const { return shape_.w; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    [[nodiscard]] const T* data() const { return data_.data(); }
    std::span<T> span() { return data_; }
    [[nodiscard]] std::span<const T> span() const { return data_; }

    std::span<T> sample(int i) {
        return std::span<T>(data_).subspan(i * shape_.sample_size(), shape_.sample_size());
    }
    [[nodiscard]] std::span<const T> sample(int i) const {
        return std::span<const T>(data_).subspan(i * shape_.sample_size(), shape_.sample_size());
    }

    T& operator()(int i, int ch, int y, int x) {
        return data_[((static_cast<std::size_t>(i) * shape_.c + ch) * shape_.h + y) * shape_.w + x];
    }
    const T& operator()(int i, int ch, int y, int x) const {
        return data_[((static_cast<std::size_t>(i) * shape_.c + ch) * shape_.h + y) * shape_.w + x];
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    [[nodiscard]] double sum() const {
        double s = 0.0;
        for (const T& v : data_) s += static_cast<double>(v);
        return s;
    }

    template <typename U>
    [[nodiscard]] Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    Shape4 shape_{};
    AlignedVector<T> data_;
};

/// Stack two batches along N. Shapes must agree in C, H, W.
template <typename T>
Tensor<T> concat_batch(const Tensor<T>& a, const Tensor<T>& b);

/// Samples [begin, begin+count) of a batch.
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& t, int begin, int count);

}  // namespace asnet
