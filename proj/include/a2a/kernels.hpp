#pragma once

#include <cstddef>

namespace a2a::kernels {

// 3x3 convolution family, zero padding, stride 1.
// Weight layout: w[co][ci][ky][kx] flattened row-major.
// Image layout: [channel][y][x] contiguous rows.
//
// Each kernel has a production implementation (im2col + BLAS dgemm, loops
// OpenMP-annotated) and a naive serial reference used as a test oracle and
// in the kernel benchmark.

/// out[co] = sum_ci w[co][ci] * in[ci]   (no bias)
void conv3x3(const double* in, int ci, int h, int w, const double* wts, int co, double* out);
void conv3x3_ref(const double* in, int ci, int h, int w, const double* wts, int co, double* out);

/// gin[ci] = sum_co w[co][ci] (correlated transpose) * gout[co]
void conv3x3_input_grad(const double* gout, int co, int h, int w, const double* wts, int ci,
                        double* gin);
void conv3x3_input_grad_ref(const double* gout, int co, int h, int w, const double* wts, int ci,
                            double* gin);

/// gw[co][ci][ky][kx] = sum_{y,x} gout[co][y][x] * in[ci][y+ky-1][x+kx-1]
void conv3x3_weight_grad(const double* gout, int co, const double* in, int ci, int h, int w,
                         double* gw);
void conv3x3_weight_grad_ref(const double* gout, int co, const double* in, int ci, int h, int w,
                             double* gw);

/// w'[ci][co][ky][kx] = w[co][ci][2-ky][2-kx]; lets input_grad reuse the
/// forward kernel.
void transpose_flip_weights(const double* wts, int co, int ci, double* out);

}  // namespace a2a::kernels
