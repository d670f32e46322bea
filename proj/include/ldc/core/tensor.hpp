// Copyright 2026 The LDC Codec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <vector>

#include "ldc/common.hpp"

namespace ldc {

// Dense row-major double tensor. Copies share storage; ops never mutate
// their inputs, so aliasing is safe. Use clone() before in-place edits of a
// tensor that may be shared.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    int64_t n = 1;
    for (int d : shape_) {
      require(d >= 0, ErrorKind::kInternal, "negative tensor dim");
      n *= d;
    }
    data_ = std::make_shared<std::vector<double>>(n, 0.0);
  }

  static Tensor scalar(double v) {
    Tensor t(std::vector<int>{});
    (*t.data_)[0] = v;
    return t;
  }

  static Tensor full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_->begin(), t.data_->end(), v);
    return t;
  }

  static Tensor from(std::vector<int> shape, std::vector<double> values) {
    Tensor t;
    t.shape_ = std::move(shape);
    int64_t n = 1;
    for (int d : t.shape_) n *= d;
    require(n == static_cast<int64_t>(values.size()), ErrorKind::kInternal,
            "tensor shape/value count mismatch");
    t.data_ = std::make_shared<std::vector<double>>(std::move(values));
    return t;
  }

  bool defined() const { return data_ != nullptr; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  const std::vector<int>& shape() const { return shape_; }

  int64_t numel() const {
    if (!data_) return 0;
    return static_cast<int64_t>(data_->size());
  }

  double* data() { return data_->data(); }
  const double* data() const { return data_->data(); }

  double& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
  double operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

  // Scalar convenience: value of a 0-d or 1-element tensor.
  double item() const {
    require(numel() == 1, ErrorKind::kInternal, "item() on non-scalar tensor");
    return (*data_)[0];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = std::make_shared<std::vector<double>>(*data_);
    return t;
  }

  Tensor reshaped(std::vector<int> shape) const {
    Tensor t;
    t.shape_ = std::move(shape);
    int64_t n = 1;
    for (int d : t.shape_) n *= d;
    require(n == numel(), ErrorKind::kInternal, "reshape numel mismatch");
    t.data_ = data_;
    return t;
  }

  void fill(double v) { std::fill(data_->begin(), data_->end(), v); }

  std::string shape_str() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  bool all_finite() const {
    for (double v : *data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::vector<int> shape_;
  std::shared_ptr<std::vector<double>> data_;
};

inline double sum(const Tensor& t) {
  double s = 0;
  for (int64_t i = 0; i < t.numel(); ++i) s += t[i];
  return s;
}

inline double mean(const Tensor& t) {
  return t.numel() ? sum(t) / static_cast<double>(t.numel()) : 0.0;
}

inline double l2_norm(const Tensor& t) {
  double s = 0;
  for (int64_t i = 0; i < t.numel(); ++i) s += t[i] * t[i];
  return std::sqrt(s);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  require(a.same_shape(b), ErrorKind::kInternal, "shape mismatch in max_abs_diff");
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ldc
