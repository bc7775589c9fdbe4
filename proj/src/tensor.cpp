#include "asnet/tensor.hpp"

#include <algorithm>

namespace asnet {

std::string Shape4::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
}

template <typename T>
Tensor<T> concat_batch(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.c() != b.c() || a.h() != b.h() || a.w() != b.w()) {
        throw std::invalid_argument("concat_batch: shape mismatch " + a.shape().str() + " vs " +
                                    b.shape().str());
    }
    Tensor<T> out(a.n() + b.n(), a.c(), a.h(), a.w());
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

template <typename T>
Tensor<T> slice_batch(const Tensor<T>& t, int begin, int count) {
    if (begin < 0 || count < 0 || begin + count > t.n()) {
        throw std::out_of_range("slice_batch: range outside batch");
    }
    Tensor<T> out(count, t.c(), t.h(), t.w());
    const std::size_t stride = t.shape().sample_size();
    std::copy(t.data() + begin * stride, t.data() + (begin + count) * stride, out.data());
    return out;
}

template Tensor<float> concat_batch(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> concat_batch(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> slice_batch(const Tensor<float>&, int, int);
template Tensor<double> slice_batch(const Tensor<double>&, int, int);

}  // namespace asnet
