#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "tarslab/rng.hpp"

namespace tarslab {

// Dense row-major tensor of doubles. Value-semantic; all numerics in the
// project flow through this type.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);                      // 1 x n
    static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> v);
    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<std::size_t> shape, double v);
    static Tensor uniform(std::vector<std::size_t> shape, double lo, double hi, Rng& rng);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    std::size_t rows() const;  // rank-2 only
    std::size_t cols() const;

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    double item() const;  // numel()==1 only
    bool all_finite() const;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::size_t cols_ = 0;  // cached for rank-2 at()
};

[[noreturn]] void fail_dim(const std::string& op, const Tensor& a, const Tensor& b);
[[noreturn]] void fail_contract(const std::string& msg);

}  // namespace tarslab
