#include "asnet/optim.hpp"

#include <cmath>

namespace asnet {

template <typename T>
void Sgd<T>::step(Network<T>& net) {
    auto params = net.parameters();
    if (momentum_ > 0.0 && velocity_.empty()) {
        for (const auto& p : params) velocity_.emplace_back(p.value.size(), T(0));
    }
    const T lr = static_cast<T>(lr_);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        if (momentum_ > 0.0) {
            auto& vel = velocity_[k];
            const T mu = static_cast<T>(momentum_);
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                vel[i] = mu * vel[i] + p.grad[i];
                p.value[i] -= lr * vel[i];
            }
        } else {
            for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] -= lr * p.grad[i];
        }
    }
}

template <typename T>
void Adam<T>::step(Network<T>& net) {
    auto params = net.parameters();
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.value.size(), T(0));
            v_.emplace_back(p.value.size(), T(0));
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const T step = static_cast<T>(lr_ * std::sqrt(c2) / c1);
    const T b1 = static_cast<T>(beta1_);
    const T b2 = static_cast<T>(beta2_);
    const T eps = static_cast<T>(eps_ * std::sqrt(c2));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k];
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const T g = p.grad[i];
            m[i] = b1 * m[i] + (T(1) - b1) * g;
            v[i] = b2 * v[i] + (T(1) - b2) * g * g;
            p.value[i] -= step * m[i] / (std::sqrt(v[i]) + eps);
        }
    }
}

template <typename T>
double clip_grad_norm(Network<T>& net, double max_norm) {
    double sq = 0.0;
    auto params = net.parameters();
    for (const auto& p : params)
        for (T g : p.grad) sq += static_cast<double>(g) * g;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const T scale = static_cast<T>(max_norm / norm);
        for (auto& p : params)
            for (T& g : p.grad) g *= scale;
    }
    return norm;
}

template class Sgd<float>;
template class Sgd<double>;
template class Adam<float>;
template class Adam<double>;
template double clip_grad_norm(Network<float>&, double);
template double clip_grad_norm(Network<double>&, double);

}  // namespace asnet
