#include "rvn/kspace_ops.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "rvn/fft.hpp"

namespace rvn::ag {
namespace {

template <typename T>
void check_2ch(const Var<T>& x, int min_rank, const char* who) {
  const Shape& s = x.value().shape();
  if (static_cast<int>(s.size()) < min_rank || s[0] != 2)
    throw std::invalid_argument(std::string(who) +
                                ": expected [2, ..., H, W], got " +
                                shape_to_string(s));
}

/// Centered transform of the 2-plane encoding, out-of-place.
template <typename T>
Tensor<T> fft_planes(const Tensor<T>& x, bool inverse) {
  const std::int64_t plane = x.numel() / 2;
  const std::int64_t ny = x.dim(-2), nx = x.dim(-1);
  std::vector<std::complex<T>> buf(static_cast<std::size_t>(plane));
  const T* re = x.data();
  const T* im = x.data() + plane;
  for (std::int64_t i = 0; i < plane; ++i) buf[i] = {re[i], im[i]};
  detail::fft2_centered(buf.data(), plane / (ny * nx), ny, nx, inverse);
  Tensor<T> out(x.shape());
  T* ore = out.data();
  T* oim = out.data() + plane;
  for (std::int64_t i = 0; i < plane; ++i) {
    ore[i] = buf[i].real();
    oim[i] = buf[i].imag();
  }
  return out;
}

template <typename T>
Var<T> fft_ch_impl(const Var<T>& x, bool inverse, const char* who) {
  check_2ch(x, 3, who);
  if (!all_finite(x.value()))
    throw std::invalid_argument(std::string(who) + ": non-finite input");
  return Var<T>::result(fft_planes(x.value(), inverse), {x},
                        [inverse](Node<T>& self) {
                          // unitary: adjoint = opposite direction
                          self.parents[0]->accumulate(
                              fft_planes(self.grad, !inverse));
                        });
}

}  // namespace

template <typename T>
Var<T> fft2c_ch(const Var<T>& x) {
  return fft_ch_impl(x, false, "fft2c_ch");
}

template <typename T>
Var<T> ifft2c_ch(const Var<T>& x) {
  return fft_ch_impl(x, true, "ifft2c_ch");
}

template <typename T>
Var<T> expand_ch(const Var<T>& img, const Var<T>& maps) {
  check_2ch(img, 3, "expand_ch");
  check_2ch(maps, 4, "expand_ch");
  const std::int64_t nc = maps.value().dim(1);
  const std::int64_t n = maps.value().dim(2) * maps.value().dim(3);
  if (img.value().numel() != 2 * n)
    throw std::invalid_argument("expand_ch: image/maps shape mismatch");

  Tensor<T> out(maps.value().shape());
  const T* ir = img.value().data();
  const T* ii = ir + n;
  for (std::int64_t k = 0; k < nc; ++k) {
    const T* mr = maps.value().data() + k * n;
    const T* mi = maps.value().data() + (nc + k) * n;
    T* zr = out.data() + k * n;
    T* zi = out.data() + (nc + k) * n;
    for (std::int64_t i = 0; i < n; ++i) {
      zr[i] = mr[i] * ir[i] - mi[i] * ii[i];
      zi[i] = mr[i] * ii[i] + mi[i] * ir[i];
    }
  }
  return Var<T>::result(std::move(out), {img, maps}, [nc, n](Node<T>& self) {
    auto& pimg = *self.parents[0];
    auto& pmaps = *self.parents[1];
    const T* ir = pimg.value.data();
    const T* ii = ir + n;
    for (std::int64_t k = 0; k < nc; ++k) {
      const T* gr = self.grad.data() + k * n;
      const T* gi = self.grad.data() + (nc + k) * n;
      const T* mr = pmaps.value.data() + k * n;
      const T* mi = pmaps.value.data() + (nc + k) * n;
      if (pimg.requires_grad) {
        // conj(maps_k) * grad_k
        T* dr = pimg.ensure_grad().data();
        T* di = dr + n;
        for (std::int64_t i = 0; i < n; ++i) {
          dr[i] += mr[i] * gr[i] + mi[i] * gi[i];
          di[i] += mr[i] * gi[i] - mi[i] * gr[i];
        }
      }
      if (pmaps.requires_grad) {
        // conj(img) * grad_k
        T* dr = pmaps.ensure_grad().data() + k * n;
        T* di = pmaps.ensure_grad().data() + (nc + k) * n;
        for (std::int64_t i = 0; i < n; ++i) {
          dr[i] += ir[i] * gr[i] + ii[i] * gi[i];
          di[i] += ir[i] * gi[i] - ii[i] * gr[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> reduce_ch(const Var<T>& coils, const Var<T>& maps) {
  check_2ch(coils, 4, "reduce_ch");
  if (!coils.value().same_shape(maps.value()))
    throw std::invalid_argument("reduce_ch: coils/maps shape mismatch");
  const std::int64_t nc = coils.value().dim(1);
  const std::int64_t ny = coils.value().dim(2), nx = coils.value().dim(3);
  const std::int64_t n = ny * nx;

  Tensor<T> out({2, ny, nx});
  T* zr = out.data();
  T* zi = out.data() + n;
  for (std::int64_t k = 0; k < nc; ++k) {
    const T* yr = coils.value().data() + k * n;
    const T* yi = coils.value().data() + (nc + k) * n;
    const T* mr = maps.value().data() + k * n;
    const T* mi = maps.value().data() + (nc + k) * n;
    for (std::int64_t i = 0; i < n; ++i) {
      // conj(m) * y
      zr[i] += mr[i] * yr[i] + mi[i] * yi[i];
      zi[i] += mr[i] * yi[i] - mi[i] * yr[i];
    }
  }
  return Var<T>::result(std::move(out), {coils, maps}, [nc, n](Node<T>& self) {
    auto& pc = *self.parents[0];
    auto& pm = *self.parents[1];
    const T* gr = self.grad.data();
    const T* gi = self.grad.data() + n;
    for (std::int64_t k = 0; k < nc; ++k) {
      const T* mr = pm.value.data() + k * n;
      const T* mi = pm.value.data() + (nc + k) * n;
      const T* yr = pc.value.data() + k * n;
      const T* yi = pc.value.data() + (nc + k) * n;
      if (pc.requires_grad) {
        // maps_k * grad
        T* dr = pc.ensure_grad().data() + k * n;
        T* di = pc.ensure_grad().data() + (nc + k) * n;
        for (std::int64_t i = 0; i < n; ++i) {
          dr[i] += mr[i] * gr[i] - mi[i] * gi[i];
          di[i] += mr[i] * gi[i] + mi[i] * gr[i];
        }
      }
      if (pm.requires_grad) {
        // conj(grad) * y_k
        T* dr = pm.ensure_grad().data() + k * n;
        T* di = pm.ensure_grad().data() + (nc + k) * n;
        for (std::int64_t i = 0; i < n; ++i) {
          dr[i] += gr[i] * yr[i] + gi[i] * yi[i];
          di[i] += gr[i] * yi[i] - gi[i] * yr[i];
        }
      }
    }
  });
}

template <typename T>
Var<T> rss_ch(const Var<T>& x) {
  check_2ch(x, 4, "rss_ch");
  const std::int64_t nc = x.value().dim(1);
  const std::int64_t ny = x.value().dim(2), nx = x.value().dim(3);
  const std::int64_t n = ny * nx;
  Tensor<T> out({ny, nx});
  for (std::int64_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::int64_t ck = 0; ck < 2 * nc; ++ck) {
      const double v = static_cast<double>(x.value()[ck * n + i]);
      s += v * v;
    }
    out[i] = static_cast<T>(std::sqrt(s));
  }
  return Var<T>::result(std::move(out), {x}, [nc, n](Node<T>& self) {
    auto& p = *self.parents[0];
    Tensor<T>& gx = p.ensure_grad();
    for (std::int64_t i = 0; i < n; ++i) {
      const T r = self.value[i];
      const T g = self.grad[i] / std::max(r, static_cast<T>(1e-12));
      for (std::int64_t ck = 0; ck < 2 * nc; ++ck)
        gx[ck * n + i] += g * p.value[ck * n + i];
    }
  });
}

template <typename T>
Var<T> apply_mask_ch(const Var<T>& x, const MaskArray& mask) {
  check_2ch(x, 3, "apply_mask_ch");
  const std::int64_t ny = x.value().dim(-2), nx = x.value().dim(-1);
  if (mask.rank() != 2 || mask.dim(0) != ny || mask.dim(1) != nx)
    throw std::invalid_argument("apply_mask_ch: mask shape mismatch");
  const std::int64_t n = ny * nx;
  const std::int64_t planes = x.value().numel() / n;
  Tensor<T> out(x.value().shape());
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t i = 0; i < n; ++i)
      out[p * n + i] = mask[i] ? x.value()[p * n + i] : T(0);
  // mask is captured by value; it is small
  return Var<T>::result(std::move(out), {x}, [mask, planes, n](Node<T>& self) {
    Tensor<T>& gx = self.parents[0]->ensure_grad();
    for (std::int64_t p = 0; p < planes; ++p)
      for (std::int64_t i = 0; i < n; ++i)
        if (mask[i]) gx[p * n + i] += self.grad[p * n + i];
  });
}

template <typename T>
Var<T> div_bcast_hw(const Var<T>& x, const Var<T>& r) {
  check_2ch(x, 4, "div_bcast_hw");
  const std::int64_t n = x.value().dim(2) * x.value().dim(3);
  if (r.value().numel() != n)
    throw std::invalid_argument("div_bcast_hw: denominator must be [H, W]");
  const std::int64_t planes = x.value().numel() / n;
  Tensor<T> out(x.value().shape());
  for (std::int64_t p = 0; p < planes; ++p)
    for (std::int64_t i = 0; i < n; ++i)
      out[p * n + i] = x.value()[p * n + i] / r.value()[i];
  return Var<T>::result(std::move(out), {x, r}, [planes, n](Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pr = *self.parents[1];
    if (px.requires_grad) {
      Tensor<T>& gx = px.ensure_grad();
      for (std::int64_t p = 0; p < planes; ++p)
        for (std::int64_t i = 0; i < n; ++i)
          gx[p * n + i] += self.grad[p * n + i] / pr.value[i];
    }
    if (pr.requires_grad) {
      Tensor<T>& gr = pr.ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::int64_t p = 0; p < planes; ++p)
          s += static_cast<double>(self.grad[p * n + i]) *
               self.value[p * n + i];
        gr[i] -= static_cast<T>(s / static_cast<double>(pr.value[i]));
      }
    }
  });
}

template <typename T>
Var<T> stack_coils(const std::vector<Var<T>>& coils) {
  if (coils.empty()) throw std::invalid_argument("stack_coils: empty input");
  const Shape& s0 = coils[0].value().shape();
  if (s0.size() != 3 || s0[0] != 2)
    throw std::invalid_argument("stack_coils: elements must be [2, H, W]");
  const std::int64_t nc = static_cast<std::int64_t>(coils.size());
  const std::int64_t n = s0[1] * s0[2];
  Tensor<T> out({2, nc, s0[1], s0[2]});
  for (std::int64_t k = 0; k < nc; ++k) {
    if (!coils[static_cast<std::size_t>(k)].value().same_shape(
            coils[0].value()))
      throw std::invalid_argument("stack_coils: mismatched coil shapes");
    const T* src = coils[static_cast<std::size_t>(k)].value().data();
    for (std::int64_t i = 0; i < n; ++i) {
      out[k * n + i] = src[i];
      out[(nc + k) * n + i] = src[n + i];
    }
  }
  return Var<T>::result(std::move(out), coils, [nc, n](Node<T>& self) {
    for (std::int64_t k = 0; k < nc; ++k) {
      auto& p = *self.parents[static_cast<std::size_t>(k)];
      if (!p.requires_grad) continue;
      Tensor<T>& g = p.ensure_grad();
      for (std::int64_t i = 0; i < n; ++i) {
        g[i] += self.grad[k * n + i];
        g[n + i] += self.grad[(nc + k) * n + i];
      }
    }
  });
}

template <typename T>
Var<T> take_coil(const Var<T>& x, std::int64_t k) {
  check_2ch(x, 4, "take_coil");
  const std::int64_t nc = x.value().dim(1);
  if (k < 0 || k >= nc) throw std::out_of_range("take_coil: bad coil index");
  const std::int64_t n = x.value().dim(2) * x.value().dim(3);
  Tensor<T> out({2, x.value().dim(2), x.value().dim(3)});
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = x.value()[k * n + i];
    out[n + i] = x.value()[(nc + k) * n + i];
  }
  return Var<T>::result(std::move(out), {x}, [nc, n, k](Node<T>& self) {
    Tensor<T>& g = self.parents[0]->ensure_grad();
    for (std::int64_t i = 0; i < n; ++i) {
      g[k * n + i] += self.grad[i];
      g[(nc + k) * n + i] += self.grad[n + i];
    }
  });
}

#define RVN_INSTANTIATE_KSPACE(T)                                  \
  template Var<T> fft2c_ch(const Var<T>&);                         \
  template Var<T> ifft2c_ch(const Var<T>&);                        \
  template Var<T> expand_ch(const Var<T>&, const Var<T>&);         \
  template Var<T> reduce_ch(const Var<T>&, const Var<T>&);         \
  template Var<T> rss_ch(const Var<T>&);                           \
  template Var<T> apply_mask_ch(const Var<T>&, const MaskArray&);  \
  template Var<T> div_bcast_hw(const Var<T>&, const Var<T>&);      \
  template Var<T> stack_coils(const std::vector<Var<T>>&);         \
  template Var<T> take_coil(const Var<T>&, std::int64_t);

RVN_INSTANTIATE_KSPACE(float)
RVN_INSTANTIATE_KSPACE(double)

#undef RVN_INSTANTIATE_KSPACE

}  // namespace rvn::ag
