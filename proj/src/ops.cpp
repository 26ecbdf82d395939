#include "eppnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace eppnet {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  return m;
}

bool all_finite(const Tensor& t) {
  for (float v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw Error(ErrorCode::ShapeMismatch, "matmul inner extents");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += static_cast<double>(a.at(i, p)) * b.at(p, j);
      out.at(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

void matmul_backward(const Tensor& d_out, const Tensor& a, const Tensor& b,
                     Tensor& d_a, Tensor& d_b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  // dA = dC * B^T
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += static_cast<double>(d_out.at(i, j)) * b.at(p, j);
      d_a.at(i, p) += static_cast<float>(acc);
    }
  // dB = A^T * dC
  for (int p = 0; p < k; ++p)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i)
        acc += static_cast<double>(a.at(i, p)) * d_out.at(i, j);
      d_b.at(p, j) += static_cast<float>(acc);
    }
}

Tensor conv2d(const Tensor& x, const Tensor& k, int stride, int pad) {
  if (x.rank() != 3 || k.rank() != 4 || x.dim(0) != k.dim(1))
    throw Error(ErrorCode::ShapeMismatch, "conv2d operand shapes");
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  if (kh > h + 2 * pad || kw > w + 2 * pad)
    throw Error(ErrorCode::ShapeMismatch, "conv2d kernel larger than padded input");
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  Tensor out({cout, oh, ow});
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w) continue;
              acc += static_cast<double>(x.at(ci, iy, ix)) * k.at(co, ci, ky, kx);
            }
          }
        out.at(co, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

void conv2d_backward(const Tensor& d_out, const Tensor& x, const Tensor& k,
                     int stride, int pad, Tensor& d_x, Tensor& d_k) {
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int oh = d_out.dim(1), ow = d_out.dim(2);
  for (int co = 0; co < cout; ++co)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const float g = d_out.at(co, oy, ox);
        if (g == 0.0f) continue;
        for (int ci = 0; ci < cin; ++ci)
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= w) continue;
              d_x.at(ci, iy, ix) += g * k.at(co, ci, ky, kx);
              d_k.at(co, ci, ky, kx) += g * x.at(ci, iy, ix);
            }
          }
      }
}

Tensor relu(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.data) v = std::max(0.0f, v);
  return out;
}

void relu_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x) {
  for (size_t i = 0; i < x.data.size(); ++i)
    if (x.data[i] > 0.0f) d_x.data[i] += d_out.data[i];
}

Tensor max_pool2(const Tensor& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float m = x.at(ci, oy * 2, ox * 2);
        m = std::max(m, x.at(ci, oy * 2, ox * 2 + 1));
        m = std::max(m, x.at(ci, oy * 2 + 1, ox * 2));
        m = std::max(m, x.at(ci, oy * 2 + 1, ox * 2 + 1));
        out.at(ci, oy, ox) = m;
      }
  return out;
}

void max_pool2_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h / 2, ow = w / 2;
  for (int ci = 0; ci < c; ++ci)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        // route to the first max in scan order
        int by = oy * 2, bx = ox * 2;
        float m = x.at(ci, by, bx);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            if (x.at(ci, oy * 2 + dy, ox * 2 + dx) > m) {
              m = x.at(ci, oy * 2 + dy, ox * 2 + dx);
              by = oy * 2 + dy;
              bx = ox * 2 + dx;
            }
        d_x.at(ci, by, bx) += d_out.at(ci, oy, ox);
      }
}

Tensor global_avg_pool(const Tensor& x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c});
  const double inv = 1.0 / (static_cast<double>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) acc += x.at(ci, y, xx);
    out[ci] = static_cast<float>(acc * inv);
  }
  return out;
}

void global_avg_pool_backward(const Tensor& d_out, const Tensor& x, Tensor& d_x) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const float inv = 1.0f / (static_cast<float>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    const float g = d_out[ci] * inv;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) d_x.at(ci, y, xx) += g;
  }
}

Tensor add_channel_bias(const Tensor& x, const Tensor& b) {
  if (b.rank() != 1 || b.dim(0) != x.dim(0))
    throw Error(ErrorCode::ShapeMismatch, "bias length != channel count");
  Tensor out = x;
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) out.at(ci, y, xx) += b[ci];
  return out;
}

void add_channel_bias_backward(const Tensor& d_out, Tensor& d_x, Tensor& d_b) {
  const int c = d_out.dim(0), h = d_out.dim(1), w = d_out.dim(2);
  for (int ci = 0; ci < c; ++ci) {
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        d_x.at(ci, y, xx) += d_out.at(ci, y, xx);
        acc += d_out.at(ci, y, xx);
      }
    d_b[ci] += static_cast<float>(acc);
  }
}

CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                         const std::vector<int>& labels) {
  const int batch = logits.dim(0), k = logits.dim(1);
  if (static_cast<int>(labels.size()) != batch)
    throw Error(ErrorCode::LengthMismatch, "labels length != batch");
  CrossEntropyResult res;
  res.grad = Tensor({batch, k});
  double total = 0.0;
  const double inv_batch = 1.0 / batch;
  for (int i = 0; i < batch; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw Error(ErrorCode::LabelOutOfRange, "label >= class count");
    double mx = logits.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(logits.at(i, j)));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(logits.at(i, j) - mx);
    const double log_denom = std::log(denom);
    total += -(logits.at(i, labels[i]) - mx - log_denom);
    for (int j = 0; j < k; ++j) {
      double p = std::exp(logits.at(i, j) - mx) / denom;
      double g = (p - (j == labels[i] ? 1.0 : 0.0)) * inv_batch;
      res.grad.at(i, j) = static_cast<float>(g);
    }
  }
  res.loss = static_cast<float>(total * inv_batch);
  return res;
}

Tensor softmax_rows(const Tensor& logits) {
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor out({n, k});
  for (int i = 0; i < n; ++i) {
    double mx = logits.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, static_cast<double>(logits.at(i, j)));
    double denom = 0.0;
    for (int j = 0; j < k; ++j) denom += std::exp(logits.at(i, j) - mx);
    for (int j = 0; j < k; ++j)
      out.at(i, j) = static_cast<float>(std::exp(logits.at(i, j) - mx) / denom);
  }
  return out;
}

}  // namespace eppnet
