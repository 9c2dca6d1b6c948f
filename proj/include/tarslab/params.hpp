#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "tarslab/autodiff.hpp"
#include "tarslab/tensor.hpp"

namespace tarslab {

// Named tensors with deterministic (sorted-by-name) iteration order.
using ParamSet = std::map<std::string, Tensor>;
using GradMap = std::map<std::string, Tensor>;

// Binds every parameter into the graph as a tracked leaf.
std::map<std::string, ag::Var> bind_params(ag::Graph& g, const ParamSet& params);
// Binds as frozen constants (reference model).
std::map<std::string, ag::Var> bind_frozen(ag::Graph& g, const ParamSet& params);

// Runs the reverse sweep and collects d loss / d p for every parameter.
// Parameters the loss does not depend on get exact zero gradients.
GradMap backward(ag::Graph& g, ag::Var loss, const std::map<std::string, ag::Var>& bound);

// Central finite differences, (f(p+h) - f(p-h)) / 2h per coordinate.
GradMap fd_gradient(const std::function<double(const ParamSet&)>& f, const ParamSet& params,
                    double h = 1e-5);

// p <- p - lr * g. Parameters without a gradient entry stay unchanged.
void sgd_step(ParamSet& params, const GradMap& grads, double lr);

// Global l2 norm across all gradients; scales them down in place when the
// norm exceeds max_norm. Returns the pre-clip norm.
double clip_global_norm(GradMap& grads, double max_norm);

// Max relative disagreement between two gradient maps, normalized by the
// largest entry magnitude across both (floored to avoid 0/0).
double grad_max_rel_err(const GradMap& a, const GradMap& b);

// FNV-1a over shapes and raw little-endian bytes in name order.
std::uint64_t param_hash(const ParamSet& params);

}  // namespace tarslab
