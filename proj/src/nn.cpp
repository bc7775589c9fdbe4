#include "asnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iterator>
#include <stdexcept>

#include <Eigen/Core>

namespace asnet {

void LayerSpec::validate() const {
    if (kernel_h < 1 || kernel_w < 1) throw std::invalid_argument("LayerSpec: kernel must be positive");
    if (stride < 1) throw std::invalid_argument("LayerSpec: stride must be positive");
    if (dilation < 1) throw std::invalid_argument("LayerSpec: dilation must be >= 1");
    if (padding < 0) throw std::invalid_argument("LayerSpec: padding must be >= 0");
    if (kind == LayerKind::conv && out_channels < 1) {
        throw std::invalid_argument("LayerSpec: conv needs out_channels >= 1");
    }
}

namespace {

int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

int conv_extent(int in, int k, int stride, int pad, int dil) {
    return floor_div(in + 2 * pad - dil * (k - 1) - 1, stride) + 1;
}

}  // namespace

int layer_output_extent(const LayerSpec& spec, int extent) {
    switch (spec.kind) {
        case LayerKind::conv:
            return conv_extent(extent, spec.kernel_h, spec.stride, spec.padding, spec.dilation);
        case LayerKind::maxpool:
            return floor_div(extent - spec.kernel_h, spec.stride) + 1;
        case LayerKind::upsample_nearest:
            return extent * spec.stride;
    }
    return 0;
}

std::size_t parameter_count(const std::vector<LayerSpec>& specs, int in_channels) {
    std::size_t total = 0;
    int c = in_channels;
    for (const LayerSpec& s : specs) {
        if (s.kind != LayerKind::conv) continue;
        total += static_cast<std::size_t>(s.out_channels) *
                 (static_cast<std::size_t>(c) * s.kernel_h * s.kernel_w + 1);
        c = s.out_channels;
    }
    return total;
}

template <typename T>
class Op {
public:
    virtual ~Op() = default;
    virtual Tensor<T> forward(const Tensor<T>& x) = 0;
    virtual Tensor<T> backward(const Tensor<T>& g, bool input_grad, bool param_grad) = 0;
    virtual std::unique_ptr<Op<T>> clone() const = 0;
    virtual void zero_grad() {}
    virtual void init(InitScheme, std::mt19937_64&) {}
    virtual void collect(std::vector<ParamRef<T>>&, int) {}
    /// Mixes the piecewise-linear branch taken in the last forward into h.
    virtual void pattern(std::uint64_t& /*h*/) const {}
};

namespace {

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i, v >>= 8) {
        h ^= v & 0xffu;
        h *= 1099511628211ULL;
    }
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
class ConvOp final : public Op<T> {
public:
    ConvOp(const LayerSpec& s, int in_channels)
        : in_c_(in_channels), out_c_(s.out_channels), kh_(s.kernel_h), kw_(s.kernel_w),
          stride_(s.stride), pad_(s.padding), dil_(s.dilation),
          weight_(static_cast<std::size_t>(out_c_) * in_c_ * kh_ * kw_, T(0)),
          bias_(out_c_, T(0)), gweight_(weight_.size(), T(0)), gbias_(out_c_, T(0)) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        if (x.c() != in_c_) {
            throw std::invalid_argument("conv: expected " + std::to_string(in_c_) +
                                        " input channels, got " + std::to_string(x.c()));
        }
        const int ho = conv_extent(x.h(), kh_, stride_, pad_, dil_);
        const int wo = conv_extent(x.w(), kw_, stride_, pad_, dil_);
        if (ho < 1 || wo < 1) {
            throw std::invalid_argument("conv: input " + x.shape().str() + " too small for kernel");
        }
        input_ = x;
        Tensor<T> y(x.n(), out_c_, ho, wo);
        if (direct()) {
            direct_forward(x, y);
            return y;
        }
        const int k = in_c_ * kh_ * kw_;
        const int p = ho * wo;
        const int chunk = chunk_size(k, p, x.n());
        Eigen::Map<const RowMat<T>> w(weight_.data(), out_c_, k);
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias_.data(), out_c_);
        for (int i0 = 0; i0 < x.n(); i0 += chunk) {
            const int m = std::min(chunk, x.n() - i0);
            const long cols = static_cast<long>(m) * p;
            col_.resize(static_cast<std::size_t>(k) * cols);
            for (int i = 0; i < m; ++i) im2col(x.sample(i0 + i).data(), x.h(), x.w(), ho, wo, i * p, cols);
            out_.resize(static_cast<std::size_t>(out_c_) * cols);
            Eigen::Map<RowMat<T>> out(out_.data(), out_c_, cols);
            out.noalias() = w * Eigen::Map<const RowMat<T>>(col_.data(), k, cols);
            out.colwise() += b;
            for (int i = 0; i < m; ++i) {
                Eigen::Map<RowMat<T>>(y.sample(i0 + i).data(), out_c_, p) = out.middleCols(static_cast<long>(i) * p, p);
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g, bool input_grad, bool param_grad) override {
        const Tensor<T>& x = input_;
        Tensor<T> dx = input_grad ? Tensor<T>(x.shape()) : Tensor<T>();
        if (direct()) {
            direct_backward(g, input_grad ? &dx : nullptr, param_grad);
            return dx;
        }
        if (!input_grad && !param_grad) return dx;
        const int ho = g.h();
        const int wo = g.w();
        const int k = in_c_ * kh_ * kw_;
        const int p = ho * wo;
        const int chunk = chunk_size(k, p, x.n());
        Eigen::Map<const RowMat<T>> w(weight_.data(), out_c_, k);
        Eigen::Map<RowMat<T>> gw(gweight_.data(), out_c_, k);
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(gbias_.data(), out_c_);
        for (int i0 = 0; i0 < x.n(); i0 += chunk) {
            const int m = std::min(chunk, x.n() - i0);
            const long cols = static_cast<long>(m) * p;
            col_.resize(static_cast<std::size_t>(k) * cols);
            out_.resize(static_cast<std::size_t>(out_c_) * cols);
            Eigen::Map<RowMat<T>> dy(out_.data(), out_c_, cols);
            for (int i = 0; i < m; ++i) {
                im2col(x.sample(i0 + i).data(), x.h(), x.w(), ho, wo, i * p, cols);
                dy.middleCols(static_cast<long>(i) * p, p) = Eigen::Map<const RowMat<T>>(g.sample(i0 + i).data(), out_c_, p);
            }
            if (param_grad) {
                gw.noalias() += dy * Eigen::Map<const RowMat<T>>(col_.data(), k, cols).transpose();
                gb += dy.rowwise().sum();
            }
            if (!input_grad) continue;
            dcol_.resize(col_.size());
            Eigen::Map<RowMat<T>>(dcol_.data(), k, cols).noalias() = w.transpose() * dy;
            for (int i = 0; i < m; ++i) col2im(dx.sample(i0 + i).data(), x.h(), x.w(), ho, wo, i * p, cols);
        }
        return dx;
    }

    std::unique_ptr<Op<T>> clone() const override { return std::make_unique<ConvOp>(*this); }

    void zero_grad() override {
        std::fill(gweight_.begin(), gweight_.end(), T(0));
        std::fill(gbias_.begin(), gbias_.end(), T(0));
    }

    void init(InitScheme scheme, std::mt19937_64& rng) override {
        const double fan_in = static_cast<double>(in_c_) * kh_ * kw_;
        const double std = scheme == InitScheme::kaiming ? std::sqrt(2.0 / fan_in) : 0.01;
        std::normal_distribution<double> dist(0.0, std);
        for (T& v : weight_) v = static_cast<T>(dist(rng));
        std::fill(bias_.begin(), bias_.end(), T(0));
    }

    void collect(std::vector<ParamRef<T>>& out, int index) override {
        const std::string base = "conv" + std::to_string(index);
        out.push_back({base + ".weight", weight_, gweight_});
        out.push_back({base + ".bias", bias_, gbias_});
    }

private:
    // Layers with very few output channels (density heads, discriminator
    // outputs) run as plain loops over the valid taps; im2col would mostly
    // copy padding for them.
    [[nodiscard]] bool direct() const { return out_c_ <= 4; }

    // Output range [lo, hi) whose input coordinate o*stride - pad + tap*dil is inside [0, n).
    std::pair<int, int> valid_range(int tap, int n, int out) const {
        const int off = tap * dil_ - pad_;
        int lo = off >= 0 ? 0 : (-off + stride_ - 1) / stride_;
        int hi = n - off <= 0 ? 0 : (n - off - 1) / stride_ + 1;
        return {std::min(lo, out), std::clamp(hi, 0, out)};
    }

    void direct_forward(const Tensor<T>& x, Tensor<T>& y) const {
        const int h = x.h(), w = x.w(), ho = y.h(), wo = y.w();
        for (int i = 0; i < x.n(); ++i) {
            for (int o = 0; o < out_c_; ++o) {
                T* out = &y(i, o, 0, 0);
                std::fill(out, out + static_cast<std::size_t>(ho) * wo, bias_[o]);
                for (int c = 0; c < in_c_; ++c) {
                    const T* in = &x(i, c, 0, 0);
                    const T* wk = weight_.data() + (static_cast<std::size_t>(o) * in_c_ + c) * kh_ * kw_;
                    for (int ki = 0; ki < kh_; ++ki) {
                        const auto [y0, y1] = valid_range(ki, h, ho);
                        for (int kj = 0; kj < kw_; ++kj) {
                            const auto [x0, x1] = valid_range(kj, w, wo);
                            const T wv = wk[ki * kw_ + kj];
                            for (int oy = y0; oy < y1; ++oy) {
                                const T* row = in + static_cast<std::size_t>(oy * stride_ - pad_ + ki * dil_) * w;
                                T* orow = out + static_cast<std::size_t>(oy) * wo;
                                const int base = kj * dil_ - pad_;
                                for (int ox = x0; ox < x1; ++ox) orow[ox] += wv * row[ox * stride_ + base];
                            }
                        }
                    }
                }
            }
        }
    }

    void direct_backward(const Tensor<T>& g, Tensor<T>* dx, bool param_grad) {
        const Tensor<T>& x = input_;
        const int h = x.h(), w = x.w(), ho = g.h(), wo = g.w();
        for (int i = 0; i < x.n(); ++i) {
            for (int o = 0; o < out_c_; ++o) {
                const T* dy = &g(i, o, 0, 0);
                if (param_grad) {
                    T sb = 0;
                    for (int q = 0; q < ho * wo; ++q) sb += dy[q];
                    gbias_[o] += sb;
                }
                for (int c = 0; c < in_c_; ++c) {
                    const T* in = &x(i, c, 0, 0);
                    T* din = dx ? &(*dx)(i, c, 0, 0) : nullptr;
                    const std::size_t widx = (static_cast<std::size_t>(o) * in_c_ + c) * kh_ * kw_;
                    for (int ki = 0; ki < kh_; ++ki) {
                        const auto [y0, y1] = valid_range(ki, h, ho);
                        for (int kj = 0; kj < kw_; ++kj) {
                            const auto [x0, x1] = valid_range(kj, w, wo);
                            const T wv = weight_[widx + ki * kw_ + kj];
                            const int base = kj * dil_ - pad_;
                            T acc = 0;
                            for (int oy = y0; oy < y1; ++oy) {
                                const std::size_t r = static_cast<std::size_t>(oy * stride_ - pad_ + ki * dil_) * w;
                                const T* grow = dy + static_cast<std::size_t>(oy) * wo;
                                for (int ox = x0; ox < x1; ++ox) {
                                    acc += grow[ox] * in[r + ox * stride_ + base];
                                    if (din) din[r + ox * stride_ + base] += wv * grow[ox];
                                }
                            }
                            if (param_grad) gweight_[widx + ki * kw_ + kj] += acc;
                        }
                    }
                }
            }
        }
    }

    // Column block [offset, offset + ho*wo) of a k x ld matrix.
    void im2col(const T* src, int h, int w, int ho, int wo, long offset, long ld) {
        T* base = col_.data() + offset;
        long row_idx = 0;
        for (int c = 0; c < in_c_; ++c) {
            const T* plane = src + static_cast<std::size_t>(c) * h * w;
            for (int ki = 0; ki < kh_; ++ki) {
                for (int kj = 0; kj < kw_; ++kj, ++row_idx) {
                    T* dst = base + row_idx * ld;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + ki * dil_;
                        if (iy < 0 || iy >= h) {
                            std::fill(dst, dst + wo, T(0));
                            dst += wo;
                            continue;
                        }
                        const T* row = plane + static_cast<std::size_t>(iy) * w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride_ - pad_ + kj * dil_;
                            *dst++ = (ix >= 0 && ix < w) ? row[ix] : T(0);
                        }
                    }
                }
            }
        }
    }

    void col2im(T* dst, int h, int w, int ho, int wo, long offset, long ld) const {
        const T* base = dcol_.data() + offset;
        long row_idx = 0;
        for (int c = 0; c < in_c_; ++c) {
            T* plane = dst + static_cast<std::size_t>(c) * h * w;
            for (int ki = 0; ki < kh_; ++ki) {
                for (int kj = 0; kj < kw_; ++kj, ++row_idx) {
                    const T* src = base + row_idx * ld;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + ki * dil_;
                        if (iy < 0 || iy >= h) {
                            src += wo;
                            continue;
                        }
                        T* row = plane + static_cast<std::size_t>(iy) * w;
                        for (int ox = 0; ox < wo; ++ox, ++src) {
                            const int ix = ox * stride_ - pad_ + kj * dil_;
                            if (ix >= 0 && ix < w) row[ix] += *src;
                        }
                    }
                }
            }
        }
    }

    // Samples per GEMM, keeping the im2col buffer around 4M entries.
    static int chunk_size(int k, int p, int n) {
        const long per = static_cast<long>(k) * p;
        return static_cast<int>(std::clamp<long>((1L << 22) / std::max(1L, per), 1, std::max(1, n)));
    }

    int in_c_, out_c_, kh_, kw_, stride_, pad_, dil_;
    AlignedVector<T> weight_, bias_, gweight_, gbias_;
    Tensor<T> input_;
    AlignedVector<T> col_, dcol_, out_;
};

template <typename T>
class ActivationOp final : public Op<T> {
public:
    explicit ActivationOp(Activation a) : act_(a) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> y(x.shape());
        const T* in = x.data();
        T* out = y.data();
        const std::size_t n = x.size();
        const T slope = static_cast<T>(kLeakySlope);
        switch (act_) {
            case Activation::relu:
                for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
                break;
            case Activation::leaky_relu:
                for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > T(0) ? in[i] : slope * in[i];
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < n; ++i) {
                    const T v = in[i];
                    out[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
                }
                break;
            case Activation::none: std::copy(in, in + n, out); break;
        }
        output_ = y;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g, bool /*input_grad*/, bool /*param_grad*/) override {
        Tensor<T> dx(g.shape());
        const T* y = output_.data();
        const T* gi = g.data();
        T* d = dx.data();
        const std::size_t n = g.size();
        const T slope = static_cast<T>(kLeakySlope);
        switch (act_) {
            case Activation::relu:
                for (std::size_t i = 0; i < n; ++i) d[i] = y[i] > T(0) ? gi[i] : T(0);
                break;
            case Activation::leaky_relu:
                for (std::size_t i = 0; i < n; ++i) d[i] = y[i] > T(0) ? gi[i] : slope * gi[i];
                break;
            case Activation::sigmoid:
                for (std::size_t i = 0; i < n; ++i) d[i] = gi[i] * y[i] * (T(1) - y[i]);
                break;
            case Activation::none: std::copy(gi, gi + n, d); break;
        }
        return dx;
    }

    std::unique_ptr<Op<T>> clone() const override { return std::make_unique<ActivationOp>(*this); }

    void pattern(std::uint64_t& h) const override {
        if (act_ != Activation::relu && act_ != Activation::leaky_relu) return;
        std::uint64_t word = 0;
        const std::size_t n = output_.size();
        for (std::size_t i = 0; i < n; ++i) {
            word = (word << 1) | (output_.data()[i] > T(0) ? 1u : 0u);
            if (i % 64 == 63 || i + 1 == n) {
                fnv_mix(h, word);
                word = 0;
            }
        }
    }

private:
    Activation act_;
    Tensor<T> output_;
};

template <typename T>
class MaxPoolOp final : public Op<T> {
public:
    MaxPoolOp(int k, int stride) : k_(k), stride_(stride) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        const int ho = floor_div(x.h() - k_, stride_) + 1;
        const int wo = floor_div(x.w() - k_, stride_) + 1;
        if (ho < 1 || wo < 1) throw std::invalid_argument("maxpool: input " + x.shape().str() + " too small");
        in_shape_ = x.shape();
        Tensor<T> y(x.n(), x.c(), ho, wo);
        argmax_.assign(y.size(), 0);
        std::size_t o = 0;
        for (int i = 0; i < x.n(); ++i) {
            for (int c = 0; c < x.c(); ++c) {
                const std::size_t plane = (static_cast<std::size_t>(i) * x.c() + c) * x.h() * x.w();
                for (int oy = 0; oy < ho; ++oy) {
                    for (int ox = 0; ox < wo; ++ox, ++o) {
                        std::size_t best = plane + static_cast<std::size_t>(oy * stride_) * x.w() + ox * stride_;
                        for (int dy = 0; dy < k_; ++dy) {
                            for (int dx = 0; dx < k_; ++dx) {
                                const std::size_t idx =
                                    plane + static_cast<std::size_t>(oy * stride_ + dy) * x.w() + ox * stride_ + dx;
                                if (x.data()[idx] > x.data()[best]) best = idx;
                            }
                        }
                        argmax_[o] = best;
                        y.data()[o] = x.data()[best];
                    }
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g, bool /*input_grad*/, bool /*param_grad*/) override {
        Tensor<T> dx(in_shape_);
        for (std::size_t o = 0; o < g.size(); ++o) dx.data()[argmax_[o]] += g.data()[o];
        return dx;
    }

    std::unique_ptr<Op<T>> clone() const override { return std::make_unique<MaxPoolOp>(*this); }

    void pattern(std::uint64_t& h) const override {
        for (std::size_t a : argmax_) fnv_mix(h, a);
    }

private:
    int k_, stride_;
    Shape4 in_shape_;
    std::vector<std::size_t> argmax_;
};

template <typename T>
class UpsampleOp final : public Op<T> {
public:
    explicit UpsampleOp(int factor) : f_(factor) {}

    Tensor<T> forward(const Tensor<T>& x) override {
        Tensor<T> y(x.n(), x.c(), x.h() * f_, x.w() * f_);
        for (int i = 0; i < x.n(); ++i)
            for (int c = 0; c < x.c(); ++c)
                for (int yy = 0; yy < y.h(); ++yy)
                    for (int xx = 0; xx < y.w(); ++xx) y(i, c, yy, xx) = x(i, c, yy / f_, xx / f_);
        return y;
    }

    Tensor<T> backward(const Tensor<T>& g, bool /*input_grad*/, bool /*param_grad*/) override {
        Tensor<T> dx(g.n(), g.c(), g.h() / f_, g.w() / f_);
        for (int i = 0; i < g.n(); ++i)
            for (int c = 0; c < g.c(); ++c)
                for (int yy = 0; yy < g.h(); ++yy)
                    for (int xx = 0; xx < g.w(); ++xx) dx(i, c, yy / f_, xx / f_) += g(i, c, yy, xx);
        return dx;
    }

    std::unique_ptr<Op<T>> clone() const override { return std::make_unique<UpsampleOp>(*this); }

private:
    int f_;
};

}  // namespace

template <typename T>
Network<T>::Network(std::vector<LayerSpec> specs, int in_channels)
    : specs_(std::move(specs)), in_channels_(in_channels) {
    if (in_channels < 1) throw std::invalid_argument("Network: in_channels must be >= 1");
    int c = in_channels;
    for (const LayerSpec& s : specs_) {
        s.validate();
        switch (s.kind) {
            case LayerKind::conv:
                ops_.push_back(std::make_unique<ConvOp<T>>(s, c));
                c = s.out_channels;
                if (s.activation != Activation::none) ops_.push_back(std::make_unique<ActivationOp<T>>(s.activation));
                break;
            case LayerKind::maxpool:
                ops_.push_back(std::make_unique<MaxPoolOp<T>>(s.kernel_h, s.stride));
                break;
            case LayerKind::upsample_nearest:
                ops_.push_back(std::make_unique<UpsampleOp<T>>(s.stride));
                break;
        }
    }
}

template <typename T>
Network<T>::~Network() = default;

template <typename T>
Network<T>::Network(const Network& other) : specs_(other.specs_), in_channels_(other.in_channels_) {
    for (const auto& op : other.ops_) ops_.push_back(op->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
    if (this != &other) {
        Network tmp(other);
        *this = std::move(tmp);
    }
    return *this;
}

template <typename T>
Network<T>::Network(Network&&) noexcept = default;
template <typename T>
Network<T>& Network<T>::operator=(Network&&) noexcept = default;

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x) {
    Tensor<T> h = x;
    for (auto& op : ops_) h = op->forward(h);
    return h;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& grad_out, bool input_grad, bool param_grad) {
    Tensor<T> g = grad_out;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        g = (*it)->backward(g, input_grad || std::next(it) != ops_.rend(), param_grad);
    }
    return g;
}

template <typename T>
void Network<T>::zero_grad() {
    for (auto& op : ops_) op->zero_grad();
}

template <typename T>
void Network<T>::init(InitScheme scheme, std::mt19937_64& rng) {
    for (auto& op : ops_) op->init(scheme, rng);
}

template <typename T>
std::size_t Network<T>::num_params() const {
    return parameter_count(specs_, in_channels_);
}

template <typename T>
std::pair<int, int> Network<T>::output_size(int h, int w) const {
    for (const LayerSpec& s : specs_) {
        h = layer_output_extent(s, h);
        w = layer_output_extent(s, w);
    }
    return {h, w};
}

template <typename T>
int Network<T>::out_channels() const {
    int c = in_channels_;
    for (const LayerSpec& s : specs_)
        if (s.kind == LayerKind::conv) c = s.out_channels;
    return c;
}

template <typename T>
std::vector<ParamRef<T>> Network<T>::parameters() {
    std::vector<ParamRef<T>> out;
    int index = 0;
    for (auto& op : ops_) {
        const std::size_t before = out.size();
        op->collect(out, index);
        if (out.size() != before) ++index;
    }
    return out;
}

template <typename T>
std::vector<T> Network<T>::flat_params() const {
    std::vector<T> out;
    for (const auto& p : const_cast<Network*>(this)->parameters())
        out.insert(out.end(), p.value.begin(), p.value.end());
    return out;
}

template <typename T>
void Network<T>::set_flat_params(std::span<const T> values) {
    if (values.size() != num_params()) {
        throw std::invalid_argument("set_flat_params: expected " + std::to_string(num_params()) +
                                    " values, got " + std::to_string(values.size()));
    }
    std::size_t off = 0;
    for (auto& p : parameters()) {
        std::copy(values.begin() + off, values.begin() + off + p.value.size(), p.value.begin());
        off += p.value.size();
    }
}

template <typename T>
std::vector<T> Network<T>::flat_grads() const {
    std::vector<T> out;
    for (const auto& p : const_cast<Network*>(this)->parameters())
        out.insert(out.end(), p.grad.begin(), p.grad.end());
    return out;
}

template <typename T>
std::uint64_t Network<T>::param_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& p : const_cast<Network*>(this)->parameters()) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(p.value.data());
        for (std::size_t i = 0; i < p.value.size_bytes(); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ULL;
        }
    }
    return h;
}

template <typename T>
std::uint64_t Network<T>::activation_pattern() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& op : ops_) op->pattern(h);
    return h;
}

template class Network<float>;
template class Network<double>;

}  // namespace asnet
