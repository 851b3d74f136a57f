#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "clutter/prng.hpp"

namespace clutter {

// Dense row-major matrix of doubles. Vectors are 1xN or Nx1; scalars 1x1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}

  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }
  double scalar() const {
    if (size() != 1) throw std::logic_error("tensor is not a scalar");
    return v[0];
  }

  static Tensor of_scalar(double x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
};

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows) throw std::logic_error("matmul shape mismatch");
  Tensor out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < b.cols; ++j) out.at(i, j) += aik * b.at(k, j);
    }
  return out;
}

inline bool all_finite(const Tensor& t) {
  for (double x : t.v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Xavier-uniform fill, deterministic in (seed, shape).
inline Tensor xavier_init(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double s = std::sqrt(6.0 / (rows + cols));
  for (double& x : t.v) x = uniform_real(rng, -s, s);
  return t;
}

// Hexfloat round trip: bit-exact text form for checkpoints.
inline std::string tensor_to_text(const Tensor& t) {
  std::string out;
  char buf[48];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%a", t.v[i]);
    if (i) out += ' ';
    out += buf;
  }
  return out;
}

inline void tensor_from_text(Tensor& t, const std::string& line) {
  const char* p = line.c_str();
  for (std::size_t i = 0; i < t.size(); ++i) {
    char* end = nullptr;
    t.v[i] = std::strtod(p, &end);
    if (end == p) throw std::runtime_error("short tensor line");
    p = end;
  }
}

}  // namespace clutter
