#pragma once

#include <vector>

#include "asnet/nn.hpp"

namespace asnet {

/// Plain SGD with optional heavy-ball momentum.
template <typename T>
class Sgd {
public:
    Sgd(double lr, double momentum = 0.0) : lr_(lr), momentum_(momentum) {}
    void step(Network<T>& net);
    [[nodiscard]] double lr() const { return lr_; }

private:
    double lr_;
    double momentum_;
    std::vector<std::vector<T>> velocity_;
};

template <typename T>
class Adam {
public:
    Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(Network<T>& net);
    [[nodiscard]] double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

/// Scales gradients so their global L2 norm is at most max_norm. Returns the
/// norm before scaling.
template <typename T>
double clip_grad_norm(Network<T>& net, double max_norm);

}  // namespace asnet
