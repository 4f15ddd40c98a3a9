#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "tpgaze/autodiff.hpp"

namespace tpgaze::ops {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using CMap = Eigen::Map<const RowMat<T>>;
template <class T>
using MMap = Eigen::Map<RowMat<T>>;

template <class T>
constexpr bool kBlas = std::is_same_v<T, float> || std::is_same_v<T, double>;

// c[MxN] (+)= a[MxK] * b[KxN]
template <class T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c, bool accumulate) {
  if constexpr (kBlas<T>) {
    MMap<T> cm(c, m, n);
    if (accumulate) {
      cm.noalias() += CMap<T>(a, m, k) * CMap<T>(b, k, n);
    } else {
      cm.noalias() = CMap<T>(a, m, k) * CMap<T>(b, k, n);
    }
  } else {
    if (!accumulate) std::fill(c, c + static_cast<std::ptrdiff_t>(m) * n, T(0));
    for (int i = 0; i < m; ++i) {
      for (int p = 0; p < k; ++p) {
        const T av = a[i * k + p];
        const T* brow = b + static_cast<std::ptrdiff_t>(p) * n;
        T* crow = c + static_cast<std::ptrdiff_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

// c[MxN] += a[MxK] * b[NxK]^T
template <class T>
void gemm_nt_acc(int m, int n, int k, const T* a, const T* b, T* c) {
  if constexpr (kBlas<T>) {
    MMap<T>(c, m, n).noalias() += CMap<T>(a, m, k) * CMap<T>(b, n, k).transpose();
  } else {
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        T acc(0);
        for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
        c[i * n + j] += acc;
      }
    }
  }
}

// c[MxN] = a[KxM]^T * b[KxN]
template <class T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  if constexpr (kBlas<T>) {
    MMap<T>(c, m, n).noalias() = CMap<T>(a, k, m).transpose() * CMap<T>(b, k, n);
  } else {
    std::fill(c, c + static_cast<std::ptrdiff_t>(m) * n, T(0));
    for (int p = 0; p < k; ++p) {
      for (int i = 0; i < m; ++i) {
        const T av = a[p * m + i];
        const T* brow = b + static_cast<std::ptrdiff_t>(p) * n;
        T* crow = c + static_cast<std::ptrdiff_t>(i) * n;
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
}

struct ConvGeom {
  int n, c, h, w, co, k, stride, ho, wo;
  int patch() const { return c * k * k; }
  int pixels() const { return ho * wo; }
};

template <class T>
void im2col(const ConvGeom& g, const T* in, T* cols) {
  const int pix = g.pixels();
  for (int ch = 0; ch < g.c; ++ch) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = cols + static_cast<std::ptrdiff_t>((ch * g.k + ky) * g.k + kx) * pix;
        for (int oy = 0; oy < g.ho; ++oy) {
          const T* src = in + (static_cast<std::ptrdiff_t>(ch) * g.h + oy * g.stride + ky) * g.w + kx;
          T* dst = row + oy * g.wo;
          if (g.stride == 1) {
            std::copy(src, src + g.wo, dst);
          } else {
            for (int ox = 0; ox < g.wo; ++ox) dst[ox] = src[ox * g.stride];
          }
        }
      }
    }
  }
}

template <class T>
void col2im_add(const ConvGeom& g, const T* cols, T* in) {
  const int pix = g.pixels();
  for (int ch = 0; ch < g.c; ++ch) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = cols + static_cast<std::ptrdiff_t>((ch * g.k + ky) * g.k + kx) * pix;
        for (int oy = 0; oy < g.ho; ++oy) {
          T* dst = in + (static_cast<std::ptrdiff_t>(ch) * g.h + oy * g.stride + ky) * g.w + kx;
          const T* src = row + oy * g.wo;
          for (int ox = 0; ox < g.wo; ++ox) dst[ox * g.stride] += src[ox];
        }
      }
    }
  }
}

void require_rank(const Shape& s, int rank, const char* op, const char* what) {
  if (static_cast<int>(s.size()) != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + shape_str(s));
  }
}

// Padded-frame position of every border element, in canonical order.
std::vector<std::size_t> border_positions(int h, int w, int pad) {
  const int hp = h + 2 * pad;
  const int wp = w + 2 * pad;
  std::vector<std::size_t> pos;
  pos.reserve(static_cast<std::size_t>(hp * wp - h * w));
  for (int y = 0; y < hp; ++y) {
    for (int x = 0; x < wp; ++x) {
      const bool interior = y >= pad && y < pad + h && x >= pad && x < pad + w;
      if (!interior) pos.push_back(static_cast<std::size_t>(y * wp + x));
    }
  }
  return pos;
}

template <class T>
Tensor<T> pad_interior(const Tensor<T>& x, int pad) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int hp = h + 2 * pad, wp = w + 2 * pad;
  Tensor<T> out({n, c, hp, wp});
  for (int i = 0; i < n * c; ++i) {
    const T* src = x.data().data() + static_cast<std::ptrdiff_t>(i) * h * w;
    T* dst = out.data().data() + static_cast<std::ptrdiff_t>(i) * hp * wp;
    for (int y = 0; y < h; ++y) std::copy(src + y * w, src + (y + 1) * w, dst + (y + pad) * wp + pad);
  }
  return out;
}

template <class T>
Tensor<T> crop_interior(const Tensor<T>& g, const Shape& in_shape, int pad) {
  const int n = in_shape[0], c = in_shape[1], h = in_shape[2], w = in_shape[3];
  const int hp = h + 2 * pad, wp = w + 2 * pad;
  Tensor<T> out(in_shape);
  for (int i = 0; i < n * c; ++i) {
    const T* src = g.data().data() + static_cast<std::ptrdiff_t>(i) * hp * wp;
    T* dst = out.data().data() + static_cast<std::ptrdiff_t>(i) * h * w;
    for (int y = 0; y < h; ++y) {
      const T* row = src + (y + pad) * wp + pad;
      std::copy(row, row + w, dst + y * w);
    }
  }
  return out;
}

void require_pad(int width, const char* op) {
  if (width < 1) throw ConfigError(std::string(op) + ": pad width must be >= 1");
}

}  // namespace

std::size_t border_count(int channels, int height, int width, int pad) {
  const auto hp = static_cast<std::size_t>(height + 2 * pad);
  const auto wp = static_cast<std::size_t>(width + 2 * pad);
  return static_cast<std::size_t>(channels) *
         (hp * wp - static_cast<std::size_t>(height) * static_cast<std::size_t>(width));
}

template <class T>
Var conv2d(Tape<T>& tape, Var input, Var weight, Var bias, int stride) {
  const Tensor<T>& x = tape.value(input);
  const Tensor<T>& wt = tape.value(weight);
  const Tensor<T>& b = tape.value(bias);
  require_rank(x.shape(), 4, "conv2d", "input");
  require_rank(wt.shape(), 4, "conv2d", "weight");
  if (stride < 1) throw ConfigError("conv2d: stride must be positive");
  if (wt.dim(1) != x.dim(1)) {
    throw DimensionError("conv2d: channel axis mismatch, input has " + std::to_string(x.dim(1)) +
                         " channels, weight expects " + std::to_string(wt.dim(1)));
  }
  if (wt.dim(2) != wt.dim(3)) throw DimensionError("conv2d: kernel axes must be square");
  if (b.shape() != Shape{wt.dim(0)}) {
    throw DimensionError("conv2d: bias axis 0 must equal output channels " +
                         std::to_string(wt.dim(0)) + ", got " + shape_str(b.shape()));
  }
  const int k = wt.dim(2);
  if (x.dim(2) < k) throw DimensionError("conv2d: height axis smaller than kernel");
  if (x.dim(3) < k) throw DimensionError("conv2d: width axis smaller than kernel");

  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), wt.dim(0), k, stride,
             (x.dim(2) - k) / stride + 1, (x.dim(3) - k) / stride + 1};
  Tensor<T> out({g.n, g.co, g.ho, g.wo});
  std::vector<T> cols(static_cast<std::size_t>(g.patch()) * g.pixels());
  const std::ptrdiff_t in_stride = static_cast<std::ptrdiff_t>(g.c) * g.h * g.w;
  const std::ptrdiff_t out_stride = static_cast<std::ptrdiff_t>(g.co) * g.pixels();
  for (int s = 0; s < g.n; ++s) {
    im2col(g, x.data().data() + s * in_stride, cols.data());
    T* o = out.data().data() + s * out_stride;
    gemm_nn(g.co, g.pixels(), g.patch(), wt.data().data(), cols.data(), o, false);
    for (int co = 0; co < g.co; ++co) {
      T* plane = o + static_cast<std::ptrdiff_t>(co) * g.pixels();
      for (int p = 0; p < g.pixels(); ++p) plane[p] += b[static_cast<std::size_t>(co)];
    }
  }

  return tape.record(std::move(out), {input, weight, bias},
                     [input, weight, bias, g, in_stride, out_stride](Tape<T>& t, const Tensor<T>& gout) {
                       const Tensor<T>& xv = t.value(input);
                       const Tensor<T>& wv = t.value(weight);
                       const bool need_x = t.requires_grad(input);
                       const bool need_w = t.requires_grad(weight);
                       Tensor<T> gx = need_x ? Tensor<T>(xv.shape()) : Tensor<T>();
                       Tensor<T> gw = need_w ? Tensor<T>(wv.shape()) : Tensor<T>();
                       Tensor<T> gb({g.co});
                       std::vector<T> cols(static_cast<std::size_t>(g.patch()) * g.pixels());
                       for (int s = 0; s < g.n; ++s) {
                         const T* go = gout.data().data() + s * out_stride;
                         for (int co = 0; co < g.co; ++co) {
                           T acc(0);
                           const T* plane = go + static_cast<std::ptrdiff_t>(co) * g.pixels();
                           for (int p = 0; p < g.pixels(); ++p) acc += plane[p];
                           gb[static_cast<std::size_t>(co)] += acc;
                         }
                         if (need_w) {
                           im2col(g, xv.data().data() + s * in_stride, cols.data());
                           gemm_nt_acc(g.co, g.patch(), g.pixels(), go, cols.data(), gw.data().data());
                         }
                         if (need_x) {
                           gemm_tn(g.patch(), g.pixels(), g.co, wv.data().data(), go, cols.data());
                           col2im_add(g, cols.data(), gx.data().data() + s * in_stride);
                         }
                       }
                       if (need_x) t.accumulate(input, std::move(gx));
                       if (need_w) t.accumulate(weight, std::move(gw));
                       t.accumulate(bias, std::move(gb));
                     });
}

template <class T>
Var pad_with_prompt(Tape<T>& tape, Var input, Var border, int width) {
  require_pad(width, "pad_with_prompt");
  const Tensor<T>& x = tape.value(input);
  require_rank(x.shape(), 4, "pad_with_prompt", "input");
  const int c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t expected = border_count(c, h, w, width);
  const Tensor<T>& bv = tape.value(border);
  if (bv.size() != expected) {
    throw ConfigError("pad_with_prompt: border has " + std::to_string(bv.size()) +
                      " values, geometry " + shape_str({c, h, w}) + " with width " +
                      std::to_string(width) + " needs " + std::to_string(expected));
  }
  Tensor<T> out = pad_interior(x, width);
  const auto pos = border_positions(h, w, width);
  const std::size_t frame = pos.size();
  const std::size_t plane = static_cast<std::size_t>(h + 2 * width) * (w + 2 * width);
  const int n = x.dim(0);
  for (int s = 0; s < n; ++s) {
    for (int ch = 0; ch < c; ++ch) {
      T* dst = out.data().data() + (static_cast<std::size_t>(s) * c + ch) * plane;
      const T* src = bv.data().data() + static_cast<std::size_t>(ch) * frame;
      for (std::size_t i = 0; i < frame; ++i) dst[pos[i]] = src[i];
    }
  }
  const Shape in_shape = x.shape();
  return tape.record(std::move(out), {input, border},
                     [input, border, in_shape, width, pos, plane](Tape<T>& t, const Tensor<T>& g) {
                       if (t.requires_grad(input)) t.accumulate(input, crop_interior(g, in_shape, width));
                       if (!t.requires_grad(border)) return;
                       const int n = in_shape[0], c = in_shape[1];
                       const std::size_t frame = pos.size();
                       Tensor<T> gb({static_cast<int>(frame * static_cast<std::size_t>(c))});
                       for (int s = 0; s < n; ++s) {
                         for (int ch = 0; ch < c; ++ch) {
                           const T* src = g.data().data() + (static_cast<std::size_t>(s) * c + ch) * plane;
                           T* dst = gb.data().data() + static_cast<std::size_t>(ch) * frame;
                           for (std::size_t i = 0; i < frame; ++i) dst[i] += src[pos[i]];
                         }
                       }
                       t.accumulate(border, std::move(gb));
                     });
}

template <class T>
Var pad_zero(Tape<T>& tape, Var input, int width) {
  require_pad(width, "pad_zero");
  const Tensor<T>& x = tape.value(input);
  require_rank(x.shape(), 4, "pad_zero", "input");
  const Shape in_shape = x.shape();
  return tape.record(pad_interior(x, width), {input},
                     [input, in_shape, width](Tape<T>& t, const Tensor<T>& g) {
                       t.accumulate(input, crop_interior(g, in_shape, width));
                     });
}

template <class T>
Var flip_horizontal(Tape<T>& tape, Var input) {
  auto flip = [](const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const int w = x.shape().back();
    const std::size_t rows = x.size() / static_cast<std::size_t>(w);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* src = x.data().data() + r * w;
      T* dst = out.data().data() + r * w;
      for (int j = 0; j < w; ++j) dst[j] = src[w - 1 - j];
    }
    return out;
  };
  const Tensor<T>& x = tape.value(input);
  if (x.rank() < 1) throw DimensionError("flip_horizontal: input needs a width axis");
  return tape.record(flip(x), {input}, [input, flip](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(input, flip(g));
  });
}

template <class T>
Var relu(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > T(0) ? x[i] : T(0);
  return tape.record(std::move(out), {input}, [input](Tape<T>& t, const Tensor<T>& g) {
    const Tensor<T>& xv = t.value(input);
    Tensor<T> gi(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) gi[i] = xv[i] > T(0) ? g[i] : T(0);
    t.accumulate(input, std::move(gi));
  });
}

template <class T>
Var global_avg_pool(Tape<T>& tape, Var input) {
  const Tensor<T>& x = tape.value(input);
  require_rank(x.shape(), 4, "global_avg_pool", "input");
  const int n = x.dim(0), c = x.dim(1);
  const int hw = x.dim(2) * x.dim(3);
  const T inv = T(1.0 / hw);
  Tensor<T> out({n, c});
  for (int i = 0; i < n * c; ++i) {
    T acc(0);
    const T* src = x.data().data() + static_cast<std::ptrdiff_t>(i) * hw;
    for (int p = 0; p < hw; ++p) acc += src[p];
    out[static_cast<std::size_t>(i)] = acc * inv;
  }
  const Shape in_shape = x.shape();
  return tape.record(std::move(out), {input}, [input, in_shape, hw, inv](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> gi(in_shape);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T v = g[i] * inv;
      T* dst = gi.data().data() + i * static_cast<std::size_t>(hw);
      for (int p = 0; p < hw; ++p) dst[p] = v;
    }
    t.accumulate(input, std::move(gi));
  });
}

template <class T>
Var linear(Tape<T>& tape, Var input, Var weight, Var bias) {
  const Tensor<T>& x = tape.value(input);
  const Tensor<T>& w = tape.value(weight);
  const Tensor<T>& b = tape.value(bias);
  require_rank(x.shape(), 2, "linear", "input");
  require_rank(w.shape(), 2, "linear", "weight");
  const int n = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  if (w.dim(1) != in) {
    throw DimensionError("linear: feature axis mismatch, input has " + std::to_string(in) +
                         ", weight expects " + std::to_string(w.dim(1)));
  }
  if (b.shape() != Shape{out_dim}) throw DimensionError("linear: bias axis 0 must equal output width");
  Tensor<T> out({n, out_dim});
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < out_dim; ++o) {
      T acc = b[static_cast<std::size_t>(o)];
      for (int i = 0; i < in; ++i) acc += w[static_cast<std::size_t>(o * in + i)] * x[static_cast<std::size_t>(s * in + i)];
      out[static_cast<std::size_t>(s * out_dim + o)] = acc;
    }
  }
  return tape.record(std::move(out), {input, weight, bias},
                     [input, weight, bias, n, in, out_dim](Tape<T>& t, const Tensor<T>& g) {
                       const Tensor<T>& xv = t.value(input);
                       const Tensor<T>& wv = t.value(weight);
                       Tensor<T> gx({n, in});
                       Tensor<T> gw({out_dim, in});
                       Tensor<T> gb({out_dim});
                       for (int s = 0; s < n; ++s) {
                         for (int o = 0; o < out_dim; ++o) {
                           const T go = g[static_cast<std::size_t>(s * out_dim + o)];
                           gb[static_cast<std::size_t>(o)] += go;
                           for (int i = 0; i < in; ++i) {
                             gx[static_cast<std::size_t>(s * in + i)] += go * wv[static_cast<std::size_t>(o * in + i)];
                             gw[static_cast<std::size_t>(o * in + i)] += go * xv[static_cast<std::size_t>(s * in + i)];
                           }
                         }
                       }
                       t.accumulate(input, std::move(gx));
                       t.accumulate(weight, std::move(gw));
                       t.accumulate(bias, std::move(gb));
                     });
}

template <class T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& x = tape.value(a);
  const Tensor<T>& y = tape.value(b);
  require_same_shape(x, y, "add");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <class T>
Var sub(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& x = tape.value(a);
  const Tensor<T>& y = tape.value(b);
  require_same_shape(x, y, "sub");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, g);
    if (!t.requires_grad(b)) return;
    Tensor<T> neg(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
    t.accumulate(b, std::move(neg));
  });
}

template <class T>
Var mul(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& x = tape.value(a);
  const Tensor<T>& y = tape.value(b);
  require_same_shape(x, y, "mul");
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>& g) {
    const Tensor<T>& xv = t.value(a);
    const Tensor<T>& yv = t.value(b);
    if (t.requires_grad(a)) {
      Tensor<T> ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * yv[i];
      t.accumulate(a, std::move(ga));
    }
    if (t.requires_grad(b)) {
      Tensor<T> gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * xv[i];
      t.accumulate(b, std::move(gb));
    }
  });
}

template <class T>
Var scalar_mul(Tape<T>& tape, Var a, double s) {
  const Tensor<T>& x = tape.value(a);
  const T sv(s);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * sv;
  return tape.record(std::move(out), {a}, [a, sv](Tape<T>& t, const Tensor<T>& g) {
    Tensor<T> ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * sv;
    t.accumulate(a, std::move(ga));
  });
}

template <class T>
Var abs(Tape<T>& tape, Var a) {
  const Tensor<T>& x = tape.value(a);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] < T(0) ? -x[i] : x[i];
  return tape.record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>& g) {
    const Tensor<T>& xv = t.value(a);
    Tensor<T> ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xv[i] > T(0)) {
        ga[i] = g[i];
      } else if (xv[i] < T(0)) {
        ga[i] = -g[i];
      }
    }
    t.accumulate(a, std::move(ga));
  });
}

template <class T>
Var sum(Tape<T>& tape, Var a) {
  const Tensor<T>& x = tape.value(a);
  T acc(0);
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
  const Shape in_shape = x.shape();
  return tape.record(Tensor<T>({1}, std::vector<T>{acc}), {a}, [a, in_shape](Tape<T>& t, const Tensor<T>& g) {
    t.accumulate(a, Tensor<T>(in_shape, g[0]));
  });
}

template <class T>
Var mean(Tape<T>& tape, Var a) {
  const std::size_t n = tape.value(a).size();
  return scalar_mul(tape, sum(tape, a), 1.0 / static_cast<double>(n));
}

#define TPGAZE_INSTANTIATE_OPS(T)                                    \
  template Var conv2d<T>(Tape<T>&, Var, Var, Var, int);              \
  template Var pad_with_prompt<T>(Tape<T>&, Var, Var, int);          \
  template Var pad_zero<T>(Tape<T>&, Var, int);                      \
  template Var flip_horizontal<T>(Tape<T>&, Var);                    \
  template Var relu<T>(Tape<T>&, Var);                               \
  template Var global_avg_pool<T>(Tape<T>&, Var);                    \
  template Var linear<T>(Tape<T>&, Var, Var, Var);                   \
  template Var add<T>(Tape<T>&, Var, Var);                           \
  template Var sub<T>(Tape<T>&, Var, Var);                           \
  template Var mul<T>(Tape<T>&, Var, Var);                           \
  template Var scalar_mul<T>(Tape<T>&, Var, double);                 \
  template Var abs<T>(Tape<T>&, Var);                                \
  template Var sum<T>(Tape<T>&, Var);                                \
  template Var mean<T>(Tape<T>&, Var);

TPGAZE_INSTANTIATE_OPS(float)
TPGAZE_INSTANTIATE_OPS(double)
TPGAZE_INSTANTIATE_OPS(Dual<float>)
TPGAZE_INSTANTIATE_OPS(Dual<double>)

#undef TPGAZE_INSTANTIATE_OPS

}  // namespace tpgaze::ops
