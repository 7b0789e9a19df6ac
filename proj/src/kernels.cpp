#include "a2a/kernels.hpp"

#include <cblas.h>

#include <algorithm>
#include <cstring>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace a2a::kernels {
namespace {

// The batch loop in training is the OpenMP axis; BLAS must stay single
// threaded underneath it.
const bool blas_init = [] {
  openblas_set_num_threads(1);
  return true;
}();

// im2col: rows indexed by (ci, ky, kx), columns by pixel (y, x).
// buf[(ci*9 + ky*3 + kx) * h*w + y*w + x] = in[ci][y+ky-1][x+kx-1], zero padded.
void im2col(const double* in, int ci, int h, int w, double* buf) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ci; ++c) {
    const double* src = in + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = buf + ((static_cast<std::size_t>(c) * 9) + ky * 3 + kx) * hw;
        const int dy = ky - 1, dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          double* dst = row + static_cast<std::size_t>(y) * w;
          const int yy = y + dy;
          if (yy < 0 || yy >= h) {
            std::memset(dst, 0, sizeof(double) * w);
            continue;
          }
          const double* s = src + static_cast<std::size_t>(yy) * w;
          if (dx == 0) {
            std::memcpy(dst, s, sizeof(double) * w);
          } else if (dx < 0) {
            dst[0] = 0.0;
            std::memcpy(dst + 1, s, sizeof(double) * (w - 1));
          } else {
            std::memcpy(dst, s + 1, sizeof(double) * (w - 1));
            dst[w - 1] = 0.0;
          }
        }
      }
    }
  }
}

std::vector<double>& scratch() {
  static thread_local std::vector<double> buf;
  return buf;
}

}  // namespace

void conv3x3(const double* in, int ci, int h, int w, const double* wts, int co, double* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  auto& buf = scratch();
  buf.resize(static_cast<std::size_t>(ci) * 9 * hw);
  im2col(in, ci, h, w, buf.data());
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, co, static_cast<int>(hw), ci * 9, 1.0,
              wts, ci * 9, buf.data(), static_cast<int>(hw), 0.0, out, static_cast<int>(hw));
}

void conv3x3_ref(const double* in, int ci, int h, int w, const double* wts, int co, double* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < co; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = 0; i < ci; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int yy = y + ky - 1, xx = x + kx - 1;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              acc += wts[((static_cast<std::size_t>(c) * ci + i) * 3 + ky) * 3 + kx] *
                     in[static_cast<std::size_t>(i) * hw + static_cast<std::size_t>(yy) * w + xx];
            }
          }
        }
        out[static_cast<std::size_t>(c) * hw + static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
  }
}

void transpose_flip_weights(const double* wts, int co, int ci, double* out) {
  for (int c = 0; c < co; ++c)
    for (int i = 0; i < ci; ++i)
      for (int k = 0; k < 9; ++k)
        out[(static_cast<std::size_t>(i) * co + c) * 9 + (8 - k)] =
            wts[(static_cast<std::size_t>(c) * ci + i) * 9 + k];
}

void conv3x3_input_grad(const double* gout, int co, int h, int w, const double* wts, int ci,
                        double* gin) {
  // separate scratch so conv3x3's im2col buffer is not clobbered mid-call
  std::vector<double> wt(static_cast<std::size_t>(co) * ci * 9);
  transpose_flip_weights(wts, co, ci, wt.data());
  conv3x3(gout, co, h, w, wt.data(), ci, gin);
}

void conv3x3_input_grad_ref(const double* gout, int co, int h, int w, const double* wts, int ci,
                            double* gin) {
  std::vector<double> wt(static_cast<std::size_t>(co) * ci * 9);
  transpose_flip_weights(wts, co, ci, wt.data());
  conv3x3_ref(gout, co, h, w, wt.data(), ci, gin);
}

void conv3x3_weight_grad(const double* gout, int co, const double* in, int ci, int h, int w,
                         double* gw) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  auto& buf = scratch();
  buf.resize(static_cast<std::size_t>(ci) * 9 * hw);
  im2col(in, ci, h, w, buf.data());
  // gw[co, ci*9] = gout[co, hw] * buf[ci*9, hw]^T
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, co, ci * 9, static_cast<int>(hw), 1.0,
              gout, static_cast<int>(hw), buf.data(), static_cast<int>(hw), 0.0, gw, ci * 9);
}

void conv3x3_weight_grad_ref(const double* gout, int co, const double* in, int ci, int h, int w,
                             double* gw) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  for (int c = 0; c < co; ++c) {
    for (int i = 0; i < ci; ++i) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (int y = 0; y < h; ++y) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= h) continue;
            for (int x = 0; x < w; ++x) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= w) continue;
              acc += gout[static_cast<std::size_t>(c) * hw + static_cast<std::size_t>(y) * w + x] *
                     in[static_cast<std::size_t>(i) * hw + static_cast<std::size_t>(yy) * w + xx];
            }
          }
          gw[((static_cast<std::size_t>(c) * ci + i) * 3 + ky) * 3 + kx] = acc;
        }
      }
    }
  }
}

}  // namespace a2a::kernels
