// Copyright 2026 The GDR Lab Authors. All Rights Reserved.
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

#include <torch/torch.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gdr/errors.hpp"

namespace gdr::io {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

/// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  const std::vector<char>& bytes() const noexcept { return bytes_; }
  std::vector<char>& bytes() noexcept { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class ByteReader {
 public:
  ByteReader(const char* data, std::size_t size) : data_(data), size_(size) {}
  explicit ByteReader(const std::vector<char>& v) : ByteReader(v.data(), v.size()) {}

  template <typename T>
  T get() {
    T v;
    get_bytes(&v, sizeof(T));
    return v;
  }
  void get_bytes(void* out, std::size_t n) {
    if (pos_ + n > size_) throw IoError("truncated binary data");
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    std::string s(n, '\0');
    get_bytes(s.data(), n);
    return s;
  }
  std::size_t position() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == size_; }

 private:
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

/// Named float32 tensors: [u32 count] then per tensor
/// [string name][u8 ndim][i64 dims...][f32 data...].
inline void write_tensors(ByteWriter& w, const std::vector<std::pair<std::string, torch::Tensor>>& ts) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (const auto& [name, t] : ts) {
    const auto c = t.detach().to(torch::kFloat32).contiguous();
    w.put_string(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(c.dim()));
    for (auto d : c.sizes()) w.put<std::int64_t>(d);
    w.put_bytes(c.data_ptr<float>(), static_cast<std::size_t>(c.numel()) * sizeof(float));
  }
}

inline std::map<std::string, torch::Tensor> read_tensors(ByteReader& r) {
  std::map<std::string, torch::Tensor> out;
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.get_string();
    const auto ndim = r.get<std::uint8_t>();
    std::vector<std::int64_t> dims(ndim);
    for (auto& d : dims) d = r.get<std::int64_t>();
    auto t = torch::empty(dims, torch::kFloat32);
    r.get_bytes(t.data_ptr<float>(), static_cast<std::size_t>(t.numel()) * sizeof(float));
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

/// Parameters and buffers of a module, in registration order.
inline std::vector<std::pair<std::string, torch::Tensor>> module_state(const torch::nn::Module& m) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : m.named_parameters()) out.emplace_back(p.key(), p.value());
  for (const auto& b : m.named_buffers()) out.emplace_back(b.key(), b.value());
  return out;
}

/// Copies `state` into the module's parameters/buffers; every module entry
/// must be present with a matching shape.
inline void load_module_state(torch::nn::Module& m, const std::map<std::string, torch::Tensor>& state,
                              const std::string& prefix = "") {
  torch::NoGradGuard no_grad;
  auto assign = [&](const std::string& key, torch::Tensor& dst) {
    auto it = state.find(prefix + key);
    if (it == state.end()) throw IoError("checkpoint: missing tensor '" + prefix + key + "'");
    if (it->second.sizes() != dst.sizes()) throw ShapeError("checkpoint: shape mismatch for '" + key + "'");
    dst.copy_(it->second.to(dst.scalar_type()));
  };
  for (auto& p : m.named_parameters()) assign(p.key(), p.value());
  for (auto& b : m.named_buffers()) assign(b.key(), b.value());
}

inline void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace gdr::io
