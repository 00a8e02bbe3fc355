#include "asym/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace asym::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;
}  // namespace

namespace serial {

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, DenseDims d) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t o = 0; o < d.out; ++o) {
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += x[n * d.in + i] * w[o * d.in + i];
      y[n * d.out + o] = acc;
    }
  }
}

void dense_backward_weight(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, DenseDims d) {
  for (std::size_t o = 0; o < d.out; ++o) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) acc += dy[n * d.out + o] * x[n * d.in + i];
      dw[o * d.in + i] = acc;
    }
    if (!db.empty()) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) acc += dy[n * d.out + o];
      db[o] = acc;
    }
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, DenseDims d) {
  for (std::size_t n = 0; n < d.batch; ++n) {
    for (std::size_t i = 0; i < d.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < d.out; ++o) acc += dy[n * d.out + o] * w[o * d.in + i];
      dx[n * d.in + i] = acc;
    }
  }
}

void conv2d_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto H = static_cast<std::int64_t>(d.height), W = static_cast<std::int64_t>(d.width);
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t o = 0; o < d.out_ch; ++o)
      for (std::size_t oh = 0; oh < oh_n; ++oh)
        for (std::size_t ow = 0; ow < ow_n; ++ow) {
          double acc = b.empty() ? 0.0 : b[o];
          for (std::size_t c = 0; c < d.in_ch; ++c)
            for (std::size_t kh = 0; kh < d.kernel; ++kh)
              for (std::size_t kw = 0; kw < d.kernel; ++kw) {
                const auto ih = static_cast<std::int64_t>(oh * d.stride + kh) -
                                static_cast<std::int64_t>(d.pad);
                const auto iw = static_cast<std::int64_t>(ow * d.stride + kw) -
                                static_cast<std::int64_t>(d.pad);
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += x[((n * d.in_ch + c) * d.height + ih) * d.width + iw] *
                       w[((o * d.in_ch + c) * d.kernel + kh) * d.kernel + kw];
              }
          y[((n * d.out_ch + o) * oh_n + oh) * ow_n + ow] = acc;
        }
}

void conv2d_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto H = static_cast<std::int64_t>(d.height), W = static_cast<std::int64_t>(d.width);
  for (std::size_t o = 0; o < d.out_ch; ++o) {
    for (std::size_t c = 0; c < d.in_ch; ++c)
      for (std::size_t kh = 0; kh < d.kernel; ++kh)
        for (std::size_t kw = 0; kw < d.kernel; ++kw) {
          double acc = 0.0;
          for (std::size_t n = 0; n < d.batch; ++n)
            for (std::size_t oh = 0; oh < oh_n; ++oh)
              for (std::size_t ow = 0; ow < ow_n; ++ow) {
                const auto ih = static_cast<std::int64_t>(oh * d.stride + kh) -
                                static_cast<std::int64_t>(d.pad);
                const auto iw = static_cast<std::int64_t>(ow * d.stride + kw) -
                                static_cast<std::int64_t>(d.pad);
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += dy[((n * d.out_ch + o) * oh_n + oh) * ow_n + ow] *
                       x[((n * d.in_ch + c) * d.height + ih) * d.width + iw];
              }
          dw[((o * d.in_ch + c) * d.kernel + kh) * d.kernel + kw] = acc;
        }
    if (!db.empty()) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t p = 0; p < oh_n * ow_n; ++p) acc += dy[(n * d.out_ch + o) * oh_n * ow_n + p];
      db[o] = acc;
    }
  }
}

void conv2d_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto H = static_cast<std::int64_t>(d.height), W = static_cast<std::int64_t>(d.width);
  std::fill(dx.begin(), dx.end(), 0.0);
  for (std::size_t n = 0; n < d.batch; ++n)
    for (std::size_t c = 0; c < d.in_ch; ++c)
      for (std::size_t o = 0; o < d.out_ch; ++o)
        for (std::size_t kh = 0; kh < d.kernel; ++kh)
          for (std::size_t kw = 0; kw < d.kernel; ++kw)
            for (std::size_t oh = 0; oh < oh_n; ++oh)
              for (std::size_t ow = 0; ow < ow_n; ++ow) {
                const auto ih = static_cast<std::int64_t>(oh * d.stride + kh) -
                                static_cast<std::int64_t>(d.pad);
                const auto iw = static_cast<std::int64_t>(ow * d.stride + kw) -
                                static_cast<std::int64_t>(d.pad);
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                dx[((n * d.in_ch + c) * d.height + ih) * d.width + iw] +=
                    dy[((n * d.out_ch + o) * oh_n + oh) * ow_n + ow] *
                    w[((o * d.in_ch + c) * d.kernel + kh) * d.kernel + kw];
              }
}

}  // namespace serial

namespace parallel {

void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, DenseDims d) {
  const auto batch = static_cast<std::int64_t>(d.batch);
  const double* xp = x.data();
  const double* wp = w.data();
  double* yp = y.data();
#pragma omp parallel for schedule(static) if (d.batch * d.in * d.out > kParallelWork)
  for (std::int64_t n = 0; n < batch; ++n) {
    const double* xrow = xp + n * d.in;
    for (std::size_t o = 0; o < d.out; ++o) {
      const double* wrow = wp + o * d.in;
      double acc = b.empty() ? 0.0 : b[o];
      for (std::size_t i = 0; i < d.in; ++i) acc += xrow[i] * wrow[i];
      yp[n * d.out + o] = acc;
    }
  }
}

void dense_backward_weight(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, DenseDims d) {
  const auto out = static_cast<std::int64_t>(d.out);
  const double* xp = x.data();
  const double* dyp = dy.data();
  double* dwp = dw.data();
#pragma omp parallel for schedule(static) if (d.batch * d.in * d.out > kParallelWork)
  for (std::int64_t o = 0; o < out; ++o) {
    double* dwrow = dwp + o * d.in;
    std::fill(dwrow, dwrow + d.in, 0.0);
    // Row-wise accumulation: for each i the sum still runs over n ascending.
    for (std::size_t n = 0; n < d.batch; ++n) {
      const double g = dyp[n * d.out + o];
      const double* xrow = xp + n * d.in;
      for (std::size_t i = 0; i < d.in; ++i) dwrow[i] += g * xrow[i];
    }
    if (!db.empty()) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n) acc += dyp[n * d.out + o];
      db[o] = acc;
    }
  }
}

void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, DenseDims d) {
  const auto batch = static_cast<std::int64_t>(d.batch);
  const double* dyp = dy.data();
  const double* wp = w.data();
  double* dxp = dx.data();
#pragma omp parallel for schedule(static) if (d.batch * d.in * d.out > kParallelWork)
  for (std::int64_t n = 0; n < batch; ++n) {
    double* dxrow = dxp + n * d.in;
    std::fill(dxrow, dxrow + d.in, 0.0);
    for (std::size_t o = 0; o < d.out; ++o) {
      const double g = dyp[n * d.out + o];
      const double* wrow = wp + o * d.in;
      for (std::size_t i = 0; i < d.in; ++i) dxrow[i] += g * wrow[i];
    }
  }
}

namespace {

// Valid output range [lo, hi) for which oh*stride + k - pad lands in [0, extent).
inline void valid_range(std::size_t k, const ConvDims& d, std::size_t extent, std::size_t out_n,
                        std::size_t& lo, std::size_t& hi) {
  const auto s = static_cast<std::int64_t>(d.stride);
  const auto off = static_cast<std::int64_t>(k) - static_cast<std::int64_t>(d.pad);
  std::int64_t l = off >= 0 ? 0 : (-off + s - 1) / s;
  std::int64_t h = (static_cast<std::int64_t>(extent) - 1 - off);
  h = h < 0 ? 0 : h / s + 1;
  h = std::min<std::int64_t>(h, static_cast<std::int64_t>(out_n));
  if (l > h) l = h;
  lo = static_cast<std::size_t>(l);
  hi = static_cast<std::size_t>(h);
}

}  // namespace

void conv2d_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto planes = static_cast<std::int64_t>(d.batch * d.out_ch);
  const std::size_t work = d.batch * d.out_ch * oh_n * ow_n * d.in_ch * d.kernel * d.kernel;
  const auto H = static_cast<std::int64_t>(d.height), W = static_cast<std::int64_t>(d.width);
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = plane / d.out_ch, o = plane % d.out_ch;
    double* yp = y.data() + plane * oh_n * ow_n;
    for (std::size_t oh = 0; oh < oh_n; ++oh)
      for (std::size_t ow = 0; ow < ow_n; ++ow) {
        double acc = b.empty() ? 0.0 : b[o];
        for (std::size_t c = 0; c < d.in_ch; ++c) {
          const double* xp = x.data() + (n * d.in_ch + c) * d.height * d.width;
          const double* wp = w.data() + (o * d.in_ch + c) * d.kernel * d.kernel;
          for (std::size_t kh = 0; kh < d.kernel; ++kh) {
            const auto ih = static_cast<std::int64_t>(oh * d.stride + kh) -
                            static_cast<std::int64_t>(d.pad);
            if (ih < 0 || ih >= H) continue;
            for (std::size_t kw = 0; kw < d.kernel; ++kw) {
              const auto iw = static_cast<std::int64_t>(ow * d.stride + kw) -
                              static_cast<std::int64_t>(d.pad);
              if (iw < 0 || iw >= W) continue;
              acc += xp[ih * d.width + iw] * wp[kh * d.kernel + kw];
            }
          }
        }
        yp[oh * ow_n + ow] = acc;
      }
  }
}

void conv2d_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto out_ch = static_cast<std::int64_t>(d.out_ch);
  const std::size_t work = d.batch * d.out_ch * oh_n * ow_n * d.in_ch * d.kernel * d.kernel;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t o = 0; o < out_ch; ++o) {
    for (std::size_t c = 0; c < d.in_ch; ++c)
      for (std::size_t kh = 0; kh < d.kernel; ++kh) {
        std::size_t oh_lo, oh_hi;
        valid_range(kh, d, d.height, oh_n, oh_lo, oh_hi);
        for (std::size_t kw = 0; kw < d.kernel; ++kw) {
          std::size_t ow_lo, ow_hi;
          valid_range(kw, d, d.width, ow_n, ow_lo, ow_hi);
          double acc = 0.0;
          for (std::size_t n = 0; n < d.batch; ++n) {
            const double* dyp = dy.data() + (n * d.out_ch + o) * oh_n * ow_n;
            const double* xp = x.data() + (n * d.in_ch + c) * d.height * d.width;
            for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
              const std::size_t ih = oh * d.stride + kh - d.pad;
              for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                const std::size_t iw = ow * d.stride + kw - d.pad;
                acc += dyp[oh * ow_n + ow] * xp[ih * d.width + iw];
              }
            }
          }
          dw[((o * d.in_ch + c) * d.kernel + kh) * d.kernel + kw] = acc;
        }
      }
    if (!db.empty()) {
      double acc = 0.0;
      for (std::size_t n = 0; n < d.batch; ++n)
        for (std::size_t p = 0; p < oh_n * ow_n; ++p) acc += dy[(n * d.out_ch + o) * oh_n * ow_n + p];
      db[o] = acc;
    }
  }
}

void conv2d_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, const ConvDims& d) {
  const std::size_t oh_n = d.out_height(), ow_n = d.out_width();
  const auto planes = static_cast<std::int64_t>(d.batch * d.in_ch);
  const std::size_t work = d.batch * d.out_ch * oh_n * ow_n * d.in_ch * d.kernel * d.kernel;
#pragma omp parallel for schedule(static) if (work > kParallelWork)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = plane / d.in_ch, c = plane % d.in_ch;
    double* dxp = dx.data() + plane * d.height * d.width;
    std::fill(dxp, dxp + d.height * d.width, 0.0);
    for (std::size_t o = 0; o < d.out_ch; ++o) {
      const double* dyp = dy.data() + (n * d.out_ch + o) * oh_n * ow_n;
      const double* wp = w.data() + (o * d.in_ch + c) * d.kernel * d.kernel;
      for (std::size_t kh = 0; kh < d.kernel; ++kh) {
        std::size_t oh_lo, oh_hi;
        valid_range(kh, d, d.height, oh_n, oh_lo, oh_hi);
        for (std::size_t kw = 0; kw < d.kernel; ++kw) {
          std::size_t ow_lo, ow_hi;
          valid_range(kw, d, d.width, ow_n, ow_lo, ow_hi);
          const double wv = wp[kh * d.kernel + kw];
          for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
            const std::size_t ih = oh * d.stride + kh - d.pad;
            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
              const std::size_t iw = ow * d.stride + kw - d.pad;
              dxp[ih * d.width + iw] += dyp[oh * ow_n + ow] * wv;
            }
          }
        }
      }
    }
  }
}

}  // namespace parallel

}  // namespace asym::kernels
