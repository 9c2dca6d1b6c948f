#include "tarslab/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tarslab {

namespace {
std::size_t product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (const std::size_t d : s) n *= d;
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {
    for (const std::size_t d : shape_) {
        if (d == 0) fail_contract("tensor dimensions must be positive");
    }
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (product(shape_) != data_.size()) {
        fail_contract("tensor data length does not match shape");
    }
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> v) {
    return Tensor({r, c}, std::move(v));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = lo + (hi - lo) * rng.uniform();
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) fail_contract("rows(): tensor is not rank-2, shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) fail_contract("cols(): tensor is not rank-2, shape " + shape_str());
    return shape_[1];
}

std::string Tensor::shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

double Tensor::item() const {
    if (numel() != 1) fail_contract("item(): tensor " + shape_str() + " is not scalar");
    return data_[0];
}

bool Tensor::all_finite() const {
    for (const double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void fail_dim(const std::string& op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + a.shape_str() + " and " +
                                b.shape_str());
}

void fail_contract(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace tarslab
