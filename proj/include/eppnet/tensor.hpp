#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "eppnet/error.hpp"
#include "eppnet/rng.hpp"

namespace eppnet {

// Row-major dense f32 tensor.
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), 0.0f);
  }
  Tensor(std::vector<int> s, std::vector<float> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(numel_of(shape)))
      throw Error(ErrorCode::ShapeMismatch, "data length != product of extents");
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor random_uniform(std::vector<int> s, Rng& rng, float lo = -1.0f,
                               float hi = 1.0f) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = lo + (hi - lo) * rng.next_float();
    return t;
  }

  static Tensor random_normal(std::vector<int> s, Rng& rng, float stddev = 1.0f) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = stddev * rng.next_normal();
    return t;
  }

  static long numel_of(const std::vector<int>& s) {
    long n = 1;
    for (int e : s) n *= e;
    return n;
  }

  long numel() const { return static_cast<long>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  float& operator[](long i) { return data[static_cast<size_t>(i)]; }
  float operator[](long i) const { return data[static_cast<size_t>(i)]; }

  float& at(int i, int j) { return data[static_cast<size_t>(i) * dim(1) + j]; }
  float at(int i, int j) const {
    return data[static_cast<size_t>(i) * dim(1) + j];
  }
  float& at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  float at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  float& at(int i, int j, int k, int l) {
    return data[((static_cast<size_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l];
  }
  float at(int i, int j, int k, int l) const {
    return data[((static_cast<size_t>(i) * dim(1) + j) * dim(2) + k) * dim(3) + l];
  }

  void fill(float v) {
    for (auto& x : data) x = v;
  }

  Tensor& operator+=(const Tensor& other) {
    if (!same_shape(other))
      throw Error(ErrorCode::ShapeMismatch, "tensor += shape mismatch");
    for (size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
    return *this;
  }

  Tensor& operator*=(float c) {
    for (auto& x : data) x *= c;
    return *this;
  }
};

inline bool tensors_equal(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape && a.data == b.data;
}

double max_abs_diff(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

}  // namespace eppnet
