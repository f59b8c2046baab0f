#include "rvn/nn.hpp"

#include <cblas.h>

#include <cmath>
#include <stdexcept>

namespace rvn::nn {
namespace {

void gemm(bool ta, bool tb, std::int64_t m, std::int64_t n, std::int64_t k,
          float alpha, const float* a, std::int64_t lda, const float* b,
          std::int64_t ldb, float beta, float* c, std::int64_t ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

void gemm(bool ta, bool tb, std::int64_t m, std::int64_t n, std::int64_t k,
          double alpha, const double* a, std::int64_t lda, const double* b,
          std::int64_t ldb, double beta, double* c, std::int64_t ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

struct ConvDims {
  std::int64_t cin, h, w, cout, kh, kw, ho, wo;
  int pad, dil;
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, int pad, int dil) {
  if (xs.size() != 3 || ws.size() != 4)
    throw std::invalid_argument("conv2d: expected x [C,H,W], w [O,C,kh,kw]");
  ConvDims d;
  d.cin = xs[0];
  d.h = xs[1];
  d.w = xs[2];
  d.cout = ws[0];
  d.kh = ws[2];
  d.kw = ws[3];
  d.pad = pad;
  d.dil = dil;
  if (ws[1] != d.cin)
    throw std::invalid_argument("conv2d: channel mismatch: x has " +
                                std::to_string(d.cin) + ", w expects " +
                                std::to_string(ws[1]));
  d.ho = d.h + 2 * pad - dil * (d.kh - 1);
  d.wo = d.w + 2 * pad - dil * (d.kw - 1);
  if (d.ho < 1 || d.wo < 1)
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  return d;
}

template <typename T>
void im2col(const T* x, const ConvDims& d, T* col) {
  // col: [cin*kh*kw, ho*wo]
  const std::int64_t n = d.ho * d.wo;
  for (std::int64_t c = 0; c < d.cin; ++c)
    for (std::int64_t ki = 0; ki < d.kh; ++ki)
      for (std::int64_t kj = 0; kj < d.kw; ++kj) {
        T* dst = col + ((c * d.kh + ki) * d.kw + kj) * n;
        const std::int64_t iy0 = ki * d.dil - d.pad;
        const std::int64_t ix0 = kj * d.dil - d.pad;
        for (std::int64_t oy = 0; oy < d.ho; ++oy) {
          const std::int64_t iy = oy + iy0;
          if (iy < 0 || iy >= d.h) {
            for (std::int64_t ox = 0; ox < d.wo; ++ox) dst[oy * d.wo + ox] = 0;
            continue;
          }
          const T* src = x + (c * d.h + iy) * d.w;
          for (std::int64_t ox = 0; ox < d.wo; ++ox) {
            const std::int64_t ix = ox + ix0;
            dst[oy * d.wo + ox] = (ix >= 0 && ix < d.w) ? src[ix] : T(0);
          }
        }
      }
}

template <typename T>
void col2im_accumulate(const T* col, const ConvDims& d, T* x) {
  const std::int64_t n = d.ho * d.wo;
  for (std::int64_t c = 0; c < d.cin; ++c)
    for (std::int64_t ki = 0; ki < d.kh; ++ki)
      for (std::int64_t kj = 0; kj < d.kw; ++kj) {
        const T* src = col + ((c * d.kh + ki) * d.kw + kj) * n;
        const std::int64_t iy0 = ki * d.dil - d.pad;
        const std::int64_t ix0 = kj * d.dil - d.pad;
        for (std::int64_t oy = 0; oy < d.ho; ++oy) {
          const std::int64_t iy = oy + iy0;
          if (iy < 0 || iy >= d.h) continue;
          T* dst = x + (c * d.h + iy) * d.w;
          for (std::int64_t ox = 0; ox < d.wo; ++ox) {
            const std::int64_t ix = ox + ix0;
            if (ix >= 0 && ix < d.w) dst[ix] += src[oy * d.wo + ox];
          }
        }
      }
}

}  // namespace

template <typename T>
Tensor<T> uniform_fan_in(Shape shape, std::int64_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::int64_t>(fan_in, 1)));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template Tensor<float> uniform_fan_in(Shape, std::int64_t, Rng&);
template Tensor<double> uniform_fan_in(Shape, std::int64_t, Rng&);

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int pad,
              int dilation) {
  const ConvDims d = conv_dims(x.value().shape(), w.value().shape(), pad,
                               dilation);
  const bool has_bias = b.defined();
  if (has_bias &&
      (b.value().rank() != 1 || b.value().dim(0) != d.cout))
    throw std::invalid_argument("conv2d: bias must have shape [Cout]");

  const std::int64_t kdim = d.cin * d.kh * d.kw;
  const std::int64_t n = d.ho * d.wo;
  std::vector<T> col(static_cast<std::size_t>(kdim * n));
  im2col(x.value().data(), d, col.data());

  Tensor<T> out({d.cout, d.ho, d.wo});
  gemm(false, false, d.cout, n, kdim, T(1), w.value().data(), kdim, col.data(),
       n, T(0), out.data(), n);
  if (has_bias)
    for (std::int64_t o = 0; o < d.cout; ++o) {
      const T bv = b.value()[o];
      T* row = out.data() + o * n;
      for (std::int64_t i = 0; i < n; ++i) row[i] += bv;
    }

  std::vector<Var<T>> parents = has_bias ? std::vector<Var<T>>{x, w, b}
                                         : std::vector<Var<T>>{x, w};
  return Var<T>::result(std::move(out), std::move(parents), [d](ag::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    const std::int64_t kdim = d.cin * d.kh * d.kw;
    const std::int64_t n = d.ho * d.wo;
    const T* gout = self.grad.data();

    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      Tensor<T>& gb = self.parents[2]->ensure_grad();
      for (std::int64_t o = 0; o < d.cout; ++o) {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i)
          s += static_cast<double>(gout[o * n + i]);
        gb[o] += static_cast<T>(s);
      }
    }
    if (pw.requires_grad) {
      // recompute the column matrix rather than keeping it alive
      std::vector<T> col(static_cast<std::size_t>(kdim * n));
      im2col(px.value.data(), d, col.data());
      Tensor<T>& gw = pw.ensure_grad();
      gemm(false, true, d.cout, kdim, n, T(1), gout, n, col.data(), n, T(1),
           gw.data(), kdim);
    }
    if (px.requires_grad) {
      std::vector<T> colgrad(static_cast<std::size_t>(kdim * n));
      gemm(true, false, kdim, n, d.cout, T(1), pw.value.data(), kdim, gout, n,
           T(0), colgrad.data(), n);
      col2im_accumulate(colgrad.data(), d, px.ensure_grad().data());
    }
  });
}

template <typename T>
Var<T> max_pool2(const Var<T>& x) {
  const Shape& s = x.value().shape();
  if (s.size() != 3 || s[1] % 2 || s[2] % 2)
    throw std::invalid_argument("max_pool2: need [C, even H, even W]");
  const std::int64_t c = s[0], h = s[1], w = s[2], ho = h / 2, wo = w / 2;
  Tensor<T> out({c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(
      static_cast<std::size_t>(out.numel()));
  const T* in = x.value().data();
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t oy = 0; oy < ho; ++oy)
      for (std::int64_t ox = 0; ox < wo; ++ox) {
        std::int64_t best = (ci * h + 2 * oy) * w + 2 * ox;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::int64_t idx = (ci * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (in[idx] > in[best]) best = idx;
          }
        const std::int64_t o = (ci * ho + oy) * wo + ox;
        out[o] = in[best];
        (*argmax)[static_cast<std::size_t>(o)] = best;
      }
  return Var<T>::result(std::move(out), {x}, [argmax](ag::Node<T>& self) {
    Tensor<T>& gx = self.parents[0]->ensure_grad();
    for (std::int64_t o = 0; o < self.grad.numel(); ++o)
      gx[(*argmax)[static_cast<std::size_t>(o)]] += self.grad[o];
  });
}

template <typename T>
Var<T> upsample_nearest2(const Var<T>& x) {
  const Shape& s = x.value().shape();
  if (s.size() != 3) throw std::invalid_argument("upsample_nearest2: [C,H,W]");
  const std::int64_t c = s[0], h = s[1], w = s[2];
  Tensor<T> out({c, 2 * h, 2 * w});
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t i = 0; i < 2 * h; ++i)
      for (std::int64_t j = 0; j < 2 * w; ++j)
        out[(ci * 2 * h + i) * 2 * w + j] =
            x.value()[(ci * h + i / 2) * w + j / 2];
  return Var<T>::result(std::move(out), {x}, [c, h, w](ag::Node<T>& self) {
    Tensor<T>& gx = self.parents[0]->ensure_grad();
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t i = 0; i < 2 * h; ++i)
        for (std::int64_t j = 0; j < 2 * w; ++j)
          gx[(ci * h + i / 2) * w + j / 2] +=
              self.grad[(ci * 2 * h + i) * 2 * w + j];
  });
}

template <typename T>
Var<T> pad_replicate(const Var<T>& x, int pad) {
  const Shape& s = x.value().shape();
  if (s.size() != 3) throw std::invalid_argument("pad_replicate: [C,H,W]");
  if (pad < 0) throw std::invalid_argument("pad_replicate: negative pad");
  const std::int64_t c = s[0], h = s[1], w = s[2], p = pad;
  const std::int64_t ho = h + 2 * p, wo = w + 2 * p;
  Tensor<T> out({c, ho, wo});
  auto clampi = [](std::int64_t v, std::int64_t hi) {
    return v < 0 ? 0 : (v >= hi ? hi - 1 : v);
  };
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t i = 0; i < ho; ++i)
      for (std::int64_t j = 0; j < wo; ++j)
        out[(ci * ho + i) * wo + j] =
            x.value()[(ci * h + clampi(i - p, h)) * w + clampi(j - p, w)];
  return Var<T>::result(std::move(out), {x}, [c, h, w, p](ag::Node<T>& self) {
    Tensor<T>& gx = self.parents[0]->ensure_grad();
    const std::int64_t ho = h + 2 * p, wo = w + 2 * p;
    auto clampi = [](std::int64_t v, std::int64_t hi) {
      return v < 0 ? 0 : (v >= hi ? hi - 1 : v);
    };
    for (std::int64_t ci = 0; ci < c; ++ci)
      for (std::int64_t i = 0; i < ho; ++i)
        for (std::int64_t j = 0; j < wo; ++j)
          gx[(ci * h + clampi(i - p, h)) * w + clampi(j - p, w)] +=
              self.grad[(ci * ho + i) * wo + j];
  });
}

template <typename T>
Var<T> crop2d(const Var<T>& x, std::int64_t y0, std::int64_t x0,
              std::int64_t h, std::int64_t w) {
  const Shape& s = x.value().shape();
  if (s.size() != 3) throw std::invalid_argument("crop2d: [C,H,W]");
  if (y0 < 0 || x0 < 0 || y0 + h > s[1] || x0 + w > s[2])
    throw std::invalid_argument("crop2d: window out of range");
  const std::int64_t c = s[0], hh = s[1], ww = s[2];
  Tensor<T> out({c, h, w});
  for (std::int64_t ci = 0; ci < c; ++ci)
    for (std::int64_t i = 0; i < h; ++i)
      for (std::int64_t j = 0; j < w; ++j)
        out[(ci * h + i) * w + j] =
            x.value()[(ci * hh + y0 + i) * ww + x0 + j];
  return Var<T>::result(
      std::move(out), {x}, [c, hh, ww, y0, x0, h, w](ag::Node<T>& self) {
        Tensor<T>& gx = self.parents[0]->ensure_grad();
        for (std::int64_t ci = 0; ci < c; ++ci)
          for (std::int64_t i = 0; i < h; ++i)
            for (std::int64_t j = 0; j < w; ++j)
              gx[(ci * hh + y0 + i) * ww + x0 + j] +=
                  self.grad[(ci * h + i) * w + j];
      });
}

template <typename T>
Var<T> concat_ch(const Var<T>& a, const Var<T>& b) {
  const Shape& sa = a.value().shape();
  const Shape& sb = b.value().shape();
  if (sa.size() != 3 || sb.size() != 3 || sa[1] != sb[1] || sa[2] != sb[2])
    throw std::invalid_argument("concat_ch: incompatible shapes");
  Tensor<T> out({sa[0] + sb[0], sa[1], sa[2]});
  const std::int64_t na = a.value().numel();
  for (std::int64_t i = 0; i < na; ++i) out[i] = a.value()[i];
  for (std::int64_t i = 0; i < b.value().numel(); ++i)
    out[na + i] = b.value()[i];
  return Var<T>::result(std::move(out), {a, b}, [na](ag::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      Tensor<T>& ga = pa.ensure_grad();
      for (std::int64_t i = 0; i < ga.numel(); ++i) ga[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      Tensor<T>& gb = pb.ensure_grad();
      for (std::int64_t i = 0; i < gb.numel(); ++i) gb[i] += self.grad[na + i];
    }
  });
}

template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                     double eps) {
  const Shape& s = x.value().shape();
  if (s.size() != 3) throw std::invalid_argument("instance_norm: [C,H,W]");
  const std::int64_t c = s[0], n = s[1] * s[2];
  if (gamma.value().numel() != c || beta.value().numel() != c)
    throw std::invalid_argument("instance_norm: gamma/beta must be [C]");

  // saved per-channel inverse stddev and normalized values
  auto inv_std = std::make_shared<std::vector<double>>(c);
  auto xhat = std::make_shared<Tensor<T>>(s);
  Tensor<T> out(s);
  for (std::int64_t ci = 0; ci < c; ++ci) {
    const T* px = x.value().data() + ci * n;
    double mu = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mu += static_cast<double>(px[i]);
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = static_cast<double>(px[i]) - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[static_cast<std::size_t>(ci)] = inv;
    const T g = gamma.value()[ci], bb = beta.value()[ci];
    for (std::int64_t i = 0; i < n; ++i) {
      const T xh = static_cast<T>((static_cast<double>(px[i]) - mu) * inv);
      (*xhat)[ci * n + i] = xh;
      out[ci * n + i] = g * xh + bb;
    }
  }

  return Var<T>::result(
      std::move(out), {x, gamma, beta},
      [inv_std, xhat, c, n](ag::Node<T>& self) {
        auto& px = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        for (std::int64_t ci = 0; ci < c; ++ci) {
          const T* go = self.grad.data() + ci * n;
          const T* xh = xhat->data() + ci * n;
          double sum_go = 0.0, sum_goxh = 0.0;
          for (std::int64_t i = 0; i < n; ++i) {
            sum_go += static_cast<double>(go[i]);
            sum_goxh += static_cast<double>(go[i]) * xh[i];
          }
          if (pb.requires_grad)
            pb.ensure_grad()[ci] += static_cast<T>(sum_go);
          if (pg.requires_grad)
            pg.ensure_grad()[ci] += static_cast<T>(sum_goxh);
          if (px.requires_grad) {
            const double g = static_cast<double>(pg.value[ci]);
            const double inv = (*inv_std)[static_cast<std::size_t>(ci)];
            const double mean_go = sum_go / static_cast<double>(n);
            const double mean_goxh = sum_goxh / static_cast<double>(n);
            T* gx = px.ensure_grad().data() + ci * n;
            for (std::int64_t i = 0; i < n; ++i)
              gx[i] += static_cast<T>(
                  g * inv *
                  (static_cast<double>(go[i]) - mean_go -
                   static_cast<double>(xh[i]) * mean_goxh));
          }
        }
      });
}

template <typename T>
Conv2d<T> make_conv2d(ParamRegistry<T>& reg, const std::string& name,
                      std::int64_t cin, std::int64_t cout, int kernel, int pad,
                      int dilation, Rng& rng, bool bias) {
  Conv2d<T> layer;
  const std::int64_t fan_in = cin * kernel * kernel;
  layer.weight = reg.add(
      name + ".weight",
      uniform_fan_in<T>({cout, cin, kernel, kernel}, fan_in, rng));
  if (bias) layer.bias = reg.add(name + ".bias",
                                 uniform_fan_in<T>({cout}, fan_in, rng));
  layer.pad = pad;
  layer.dilation = dilation;
  return layer;
}

#define RVN_INSTANTIATE_NN(T)                                                \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int,  \
                         int);                                               \
  template Var<T> max_pool2(const Var<T>&);                                  \
  template Var<T> upsample_nearest2(const Var<T>&);                          \
  template Var<T> pad_replicate(const Var<T>&, int);                         \
  template Var<T> crop2d(const Var<T>&, std::int64_t, std::int64_t,          \
                         std::int64_t, std::int64_t);                        \
  template Var<T> concat_ch(const Var<T>&, const Var<T>&);                   \
  template Var<T> instance_norm(const Var<T>&, const Var<T>&, const Var<T>&, \
                                double);                                     \
  template Conv2d<T> make_conv2d(ParamRegistry<T>&, const std::string&,      \
                                 std::int64_t, std::int64_t, int, int, int,  \
                                 Rng&, bool);

RVN_INSTANTIATE_NN(float)
RVN_INSTANTIATE_NN(double)

#undef RVN_INSTANTIATE_NN

}  // namespace rvn::nn
