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
#include <memory>
#include <string>
#include <vector>

#include "ldc/common.hpp"
#include "ldc/core/bytes.hpp"
#include "ldc/core/rng.hpp"
#include "ldc/core/tensor.hpp"
#include "ldc/nn/graph.hpp"

namespace ldc::nn {

// Base for anything with named parameters. Checkpoints are a flat
// named-tensor container (.ldcw): every entry carries its shape, and load
// validates the manifest against the registered variables.
class Module {
 public:
  virtual ~Module() = default;

  Variable* add_variable(const std::string& name, Tensor init, bool trainable = true) {
    auto v = std::make_unique<Variable>();
    v->name = name;
    v->value = std::move(init);
    v->trainable = trainable;
    vars_.push_back(std::move(v));
    return vars_.back().get();
  }

  std::vector<Variable*> variables() {
    std::vector<Variable*> out;
    out.reserve(vars_.size());
    for (auto& v : vars_) out.push_back(v.get());
    return out;
  }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& v : vars_) n += v->value.numel();
    return n;
  }

  void set_trainable(bool trainable) {
    for (auto& v : vars_) v->trainable = trainable;
  }

  void zero_grads() {
    for (auto& v : vars_) {
      if (!v->grad.defined()) v->grad = Tensor(v->value.shape());
      v->grad.fill(0.0);
    }
  }

  void save(const std::string& path) const {
    ByteWriter w;
    w.str("LDCW");
    w.u8(1);
    w.u32(static_cast<uint32_t>(vars_.size()));
    for (const auto& v : vars_) {
      w.u16(static_cast<uint16_t>(v->name.size()));
      w.str(v->name);
      w.u8(static_cast<uint8_t>(v->value.ndim()));
      for (int d = 0; d < v->value.ndim(); ++d) w.u32(static_cast<uint32_t>(v->value.dim(d)));
      for (int64_t i = 0; i < v->value.numel(); ++i) w.f64(v->value[i]);
    }
    write_file_bytes(path, w.buffer());
  }

  void load(const std::string& path) {
    std::vector<uint8_t> data = read_file_bytes(path);
    ByteReader r(data);
    require(r.str(4) == "LDCW", ErrorKind::kFormat, path, ": bad checkpoint magic");
    uint8_t version = r.u8();
    require(version == 1, ErrorKind::kFormat, path, ": unsupported checkpoint version ",
            static_cast<int>(version));
    uint32_t count = r.u32();
    require(count == vars_.size(), ErrorKind::kFormat, path, ": checkpoint has ", count,
            " tensors, module expects ", vars_.size());
    for (auto& v : vars_) {
      uint16_t name_len = r.u16();
      std::string name = r.str(name_len);
      require(name == v->name, ErrorKind::kFormat, path, ": tensor order mismatch, found '", name,
              "' expected '", v->name, "'");
      uint8_t ndim = r.u8();
      require(ndim == v->value.ndim(), ErrorKind::kFormat, path, ": rank mismatch for ", name);
      std::vector<int> shape(ndim);
      for (auto& d : shape) d = static_cast<int>(r.u32());
      require(shape == v->value.shape(), ErrorKind::kFormat, path, ": shape mismatch for ", name);
      for (int64_t i = 0; i < v->value.numel(); ++i) v->value[i] = r.f64();
    }
    require(r.remaining() == 0, ErrorKind::kFormat, path, ": trailing bytes in checkpoint");
  }

 protected:
  // He-style init for conv/linear weights feeding SiLU.
  Variable* conv_weight(const std::string& name, int cout, int cin, int k, Rng& rng,
                        double gain = 1.0) {
    Tensor w({cout, cin, k, k});
    double std = gain * std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = std * rng.normal();
    return add_variable(name, std::move(w));
  }

  Variable* conv_bias(const std::string& name, int cout) {
    return add_variable(name, Tensor({cout}));
  }

  Variable* linear_weight(const std::string& name, int out, int in, Rng& rng, double gain = 1.0) {
    Tensor w({out, in});
    double std = gain * std::sqrt(2.0 / static_cast<double>(in));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = std * rng.normal();
    return add_variable(name, std::move(w));
  }

 private:
  std::vector<std::unique_ptr<Variable>> vars_;
};

}  // namespace ldc::nn
