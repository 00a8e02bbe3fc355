#pragma once

// Dense and convolution kernels. Each kernel exists twice: a plain serial
// reference and an OpenMP version. Both accumulate every output element in
// the same order, so their results are bitwise identical for any thread count.

#include <cstddef>
#include <span>

namespace asym::kernels {

struct DenseDims {
  std::size_t batch = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct ConvDims {
  std::size_t batch = 0;
  std::size_t in_ch = 0;
  std::size_t out_ch = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t pad = 0;

  std::size_t out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
  std::size_t out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
};

// x: (batch, in), w: (out, in), b: (out) or empty, y: (batch, out)
// dy: (batch, out), dw: (out, in), db: (out) or empty, dx: (batch, in)
// Conv tensors are NCHW; w is (out_ch, in_ch, k, k).

namespace serial {
void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, DenseDims d);
void dense_backward_weight(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, DenseDims d);
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, DenseDims d);
void conv2d_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y, const ConvDims& d);
void conv2d_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db, const ConvDims& d);
void conv2d_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, const ConvDims& d);
}  // namespace serial

namespace parallel {
void dense_forward(std::span<const double> x, std::span<const double> w,
                   std::span<const double> b, std::span<double> y, DenseDims d);
void dense_backward_weight(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dw, std::span<double> db, DenseDims d);
void dense_backward_input(std::span<const double> dy, std::span<const double> w,
                          std::span<double> dx, DenseDims d);
void conv2d_forward(std::span<const double> x, std::span<const double> w,
                    std::span<const double> b, std::span<double> y, const ConvDims& d);
void conv2d_backward_weight(std::span<const double> x, std::span<const double> dy,
                            std::span<double> dw, std::span<double> db, const ConvDims& d);
void conv2d_backward_input(std::span<const double> dy, std::span<const double> w,
                           std::span<double> dx, const ConvDims& d);
}  // namespace parallel

// The layers call these; they forward to the parallel versions.
using parallel::conv2d_backward_input;
using parallel::conv2d_backward_weight;
using parallel::conv2d_forward;
using parallel::dense_backward_input;
using parallel::dense_backward_weight;
using parallel::dense_forward;

}  // namespace asym::kernels
