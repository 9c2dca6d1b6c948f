#include "tarslab/params.hpp"

#include <cmath>
#include <cstring>

#include "tarslab/kernels.hpp"

namespace tarslab {

std::map<std::string, ag::Var> bind_params(ag::Graph& g, const ParamSet& params) {
    std::map<std::string, ag::Var> bound;
    for (const auto& [name, tensor] : params) bound.emplace(name, g.param(tensor));
    return bound;
}

std::map<std::string, ag::Var> bind_frozen(ag::Graph& g, const ParamSet& params) {
    std::map<std::string, ag::Var> bound;
    for (const auto& [name, tensor] : params) bound.emplace(name, g.input(tensor));
    return bound;
}

GradMap backward(ag::Graph& g, ag::Var loss, const std::map<std::string, ag::Var>& bound) {
    g.backward(loss);
    GradMap grads;
    for (const auto& [name, var] : bound) grads.emplace(name, g.grad_of(var));
    return grads;
}

GradMap fd_gradient(const std::function<double(const ParamSet&)>& f, const ParamSet& params,
                    double h) {
    if (!(h > 0.0)) fail_contract("fd_gradient: step h must be positive");
    ParamSet work = params;
    GradMap grads;
    for (auto& [name, tensor] : work) {
        Tensor grad = Tensor::zeros(tensor.shape());
        for (std::size_t i = 0; i < tensor.numel(); ++i) {
            const double orig = tensor[i];
            tensor[i] = orig + h;
            const double fp = f(work);
            tensor[i] = orig - h;
            const double fm = f(work);
            tensor[i] = orig;
            grad[i] = (fp - fm) / (2.0 * h);
        }
        grads.emplace(name, std::move(grad));
    }
    return grads;
}

void sgd_step(ParamSet& params, const GradMap& grads, double lr) {
    for (auto& [name, tensor] : params) {
        const auto it = grads.find(name);
        if (it == grads.end()) continue;
        if (!it->second.same_shape(tensor)) fail_dim("sgd_step(" + name + ")", tensor, it->second);
        kern::active().axpy(tensor.data(), -lr, it->second.data(), tensor.numel());
    }
}

double clip_global_norm(GradMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += kern::active().sumsq(g.data(), g.numel());
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double s = max_norm / norm;
        for (auto& [name, g] : grads) kern::active().scale(g.data(), s, g.numel());
    }
    return norm;
}

double grad_max_rel_err(const GradMap& a, const GradMap& b) {
    double scale = 0.0;
    for (const auto& [name, g] : a) {
        for (std::size_t i = 0; i < g.numel(); ++i) scale = std::max(scale, std::fabs(g[i]));
    }
    for (const auto& [name, g] : b) {
        for (std::size_t i = 0; i < g.numel(); ++i) scale = std::max(scale, std::fabs(g[i]));
    }
    const double denom = std::max(scale, 1e-8);
    double worst = 0.0;
    for (const auto& [name, ga] : a) {
        const auto it = b.find(name);
        if (it == b.end()) fail_contract("grad_max_rel_err: maps disagree on key " + name);
        const Tensor& gb = it->second;
        if (!ga.same_shape(gb)) fail_dim("grad_max_rel_err(" + name + ")", ga, gb);
        for (std::size_t i = 0; i < ga.numel(); ++i) {
            worst = std::max(worst, std::fabs(ga[i] - gb[i]) / denom);
        }
    }
    return worst;
}

std::uint64_t param_hash(const ParamSet& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto mix_bytes = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [name, tensor] : params) {
        mix_bytes(name.data(), name.size());
        for (const std::size_t d : tensor.shape()) mix_bytes(&d, sizeof(d));
        mix_bytes(tensor.data(), tensor.numel() * sizeof(double));
    }
    return h;
}

}  // namespace tarslab
