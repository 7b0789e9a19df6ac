#include "a2a/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace a2a {
namespace {

// fftw_execute_dft is thread-safe, planning is not; plans are cached per
// (h, w, sign) under a lock. FFTW_UNALIGNED allows execution on arbitrary
// caller buffers.
class PlanCache {
 public:
  fftw_plan get(int h, int w, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::tuple{h, w, sign};
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> dummy(static_cast<std::size_t>(h) * w);
    fftw_plan p = fftw_plan_dft_2d(h, w, dummy.data(), dummy.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("fftw plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

// dst[(i + shift) % n] = src[i] along both axes
void shifted_copy(const ComplexPlane& src, ComplexPlane& dst, int sy, int sx) {
  const int h = src.h, w = src.w;
  dst.h = h;
  dst.w = w;
  dst.data.resize(src.data.size());
  for (int y = 0; y < h; ++y) {
    const int yy = (y + sy) % h;
    for (int x = 0; x < w; ++x) dst.data[static_cast<std::size_t>(yy) * w + (x + sx) % w] =
        src.data[static_cast<std::size_t>(y) * w + x];
  }
}

void run(const ComplexPlane& in, ComplexPlane& out, int sign) {
  const int h = in.h, w = in.w;
  if (h <= 0 || w <= 0 || in.data.size() != static_cast<std::size_t>(h) * w)
    throw std::invalid_argument("fft2: bad plane shape");
  // ifftshift moves index i -> (i + ceil(n/2)) % n; fftshift uses floor(n/2)
  ComplexPlane tmp;
  shifted_copy(in, tmp, (h + 1) / 2, (w + 1) / 2);
  fftw_plan p = cache().get(h, w, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(tmp.data.data()),
                   reinterpret_cast<fftw_complex*>(tmp.data.data()));
  shifted_copy(tmp, out, h / 2, w / 2);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  for (auto& v : out.data) v *= scale;
}

}  // namespace

void fft2_centered(const ComplexPlane& in, ComplexPlane& out) { run(in, out, FFTW_FORWARD); }

void ifft2_centered(const ComplexPlane& in, ComplexPlane& out) { run(in, out, FFTW_BACKWARD); }

}  // namespace a2a
