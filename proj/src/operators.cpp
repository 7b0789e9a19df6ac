#include "a2a/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

#include "a2a/fft.hpp"

namespace a2a {

SamplingMask make_equispaced_mask(int w, int accel, int acs) {
  if (w < 1) throw std::invalid_argument("make_equispaced_mask: W must be positive");
  if (accel < 1) throw std::invalid_argument("make_equispaced_mask: accel must be >= 1");
  if (acs < 0 || acs > w) throw std::invalid_argument("make_equispaced_mask: acs out of range");
  std::set<int> cols;
  for (int c = 0; c < w; c += accel) cols.insert(c);
  const int start = (w - acs) / 2;
  for (int c = start; c < start + acs; ++c) cols.insert(c);
  SamplingMask m;
  m.kept_columns.assign(cols.begin(), cols.end());
  m.w = w;
  m.accel = accel;
  return m;
}

CoilMaps synth_csms(int h, int w, int n_coils, double r) {
  if (n_coils < 1) throw std::invalid_argument("synth_csms: n_coils must be >= 1");
  if (!(r > 0.0)) throw std::invalid_argument("synth_csms: r must be positive");
  CoilMaps maps;
  maps.n_coils = n_coils;
  maps.h = h;
  maps.w = w;
  maps.data.resize(static_cast<std::size_t>(n_coils) * h * w);
  const double cy = (h - 1) / 2.0;
  const double cx = (w - 1) / 2.0;
  const double radius = r * (std::max(h, w) / 2.0);
  // scale so sum_c |S_c(center)|^2 == 1
  const double scale = radius / std::sqrt(static_cast<double>(n_coils));
  for (int c = 0; c < n_coils; ++c) {
    const double ang = 2.0 * std::numbers::pi * c / n_coils;
    const double sy = cy + radius * std::sin(ang);
    const double sx = cx + radius * std::cos(ang);
    Complex* plane = maps.data.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dy = sy - y, dx = sx - x;
        const double dist = std::max(std::sqrt(dy * dy + dx * dx), 1e-9);
        const double phase = std::atan2(dy, dx);
        plane[static_cast<std::size_t>(y) * w + x] =
            std::polar(scale / dist, phase);
      }
    }
  }
  return maps;
}

namespace {

void check_mri_dims(const MriCartesianOp& mri, int h, int w) {
  if (mri.csms.h != h || mri.csms.w != w || mri.mask.w != w)
    throw std::invalid_argument("operator: mask/csm dims do not match the stack");
}

// y_c = M . F(S_c .* x) for one coil, written into dst
void mri_forward_coil(const MriCartesianOp& mri, int c, int h, int w, const double* plane,
                      Complex* dst) {
  ComplexPlane tmp(h, w);
  auto s = mri.csms.coil(c);
  for (std::size_t i = 0; i < tmp.data.size(); ++i) tmp.data[i] = s[i] * plane[i];
  ComplexPlane k;
  fft2_centered(tmp, k);
  // zero the columns the mask drops
  for (int y = 0; y < h; ++y) {
    Complex* row = dst + static_cast<std::size_t>(y) * w;
    const Complex* src = k.data.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) row[x] = Complex(0.0, 0.0);
    for (int col : mri.mask.kept_columns) row[col] = src[col];
  }
}

// acc += real(conj(S_c) .* F^H(k_c)) for one coil
void mri_adjoint_coil(const MriCartesianOp& mri, int c, int h, int w, const Complex* k,
                      double* acc) {
  ComplexPlane kin(h, w);
  std::copy(k, k + kin.data.size(), kin.data.begin());
  ComplexPlane img;
  ifft2_centered(kin, img);
  auto s = mri.csms.coil(c);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    acc[i] += (std::conj(s[i]) * img.data[i]).real();
}

}  // namespace

Payload apply_block(const OperatorSpec& spec, int h, int w, const double* plane) {
  if (std::holds_alternative<IdentityOp>(spec)) {
    ImagePayload p;
    p.h = h;
    p.w = w;
    p.data.assign(plane, plane + static_cast<std::size_t>(h) * w);
    return p;
  }
  if (std::holds_alternative<ZeroOp>(spec)) return EmptyPayload{};
  const auto& mri = std::get<MriCartesianOp>(spec);
  check_mri_dims(mri, h, w);
  KSpacePayload p;
  p.n_coils = mri.csms.n_coils;
  p.h = h;
  p.w = w;
  p.mask = mri.mask;
  p.data.resize(static_cast<std::size_t>(p.n_coils) * h * w);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < p.n_coils; ++c)
    mri_forward_coil(mri, c, h, w, plane, p.data.data() + static_cast<std::size_t>(c) * h * w);
  return p;
}

void adjoint_block(const OperatorSpec& spec, int h, int w, const Payload& y, double* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  std::fill(out, out + hw, 0.0);
  if (std::holds_alternative<IdentityOp>(spec)) {
    const auto* img = std::get_if<ImagePayload>(&y);
    if (!img || img->data.size() != hw)
      throw std::invalid_argument("adjoint: payload kind mismatch for Identity block");
    std::copy(img->data.begin(), img->data.end(), out);
    return;
  }
  if (std::holds_alternative<ZeroOp>(spec)) {
    if (!std::holds_alternative<EmptyPayload>(y))
      throw std::invalid_argument("adjoint: payload kind mismatch for Zero block");
    return;
  }
  const auto& mri = std::get<MriCartesianOp>(spec);
  check_mri_dims(mri, h, w);
  const auto* ks = std::get_if<KSpacePayload>(&y);
  if (!ks || ks->n_coils != mri.csms.n_coils || ks->h != h || ks->w != w)
    throw std::invalid_argument("adjoint: payload kind mismatch for MriCartesian block");
  // per-coil images computed in parallel, summed in fixed coil order
  std::vector<double> per_coil(static_cast<std::size_t>(ks->n_coils) * hw, 0.0);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < ks->n_coils; ++c)
    mri_adjoint_coil(mri, c, h, w, ks->coil(c).data(), per_coil.data() + c * hw);
  for (int c = 0; c < ks->n_coils; ++c) {
    const double* pc = per_coil.data() + c * hw;
    for (std::size_t i = 0; i < hw; ++i) out[i] += pc[i];
  }
}

void gram_apply_block(const OperatorSpec& spec, int h, int w, const double* plane, double* out) {
  Payload y = apply_block(spec, h, w, plane);
  adjoint_block(spec, h, w, y, out);
}

MeasurementVector apply(const BlockDiagonalOperator& op, const ModalityStack& x) {
  if (op.n() != x.n()) throw std::invalid_argument("apply: spec count != modality count");
  MeasurementVector y;
  y.payloads.reserve(op.specs.size());
  for (int i = 0; i < op.n(); ++i)
    y.payloads.push_back(apply_block(op.specs[i], x.h, x.w, x.plane(i).data()));
  return y;
}

ModalityStack adjoint(const BlockDiagonalOperator& op, const MeasurementVector& y) {
  if (op.n() != y.n()) throw std::invalid_argument("adjoint: spec count != payload count");
  int h = 0, w = 0;
  for (const auto& spec : op.specs)
    if (const auto* mri = std::get_if<MriCartesianOp>(&spec)) {
      h = mri->csms.h;
      w = mri->csms.w;
    }
  for (const auto& p : y.payloads) {
    if (const auto* img = std::get_if<ImagePayload>(&p)) h = img->h, w = img->w;
    if (const auto* ks = std::get_if<KSpacePayload>(&p)) h = ks->h, w = ks->w;
  }
  if (h == 0 || w == 0)
    throw std::invalid_argument("adjoint: cannot infer plane dims from all-Empty measurements");
  std::vector<std::string> ids(op.specs.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = "m" + std::to_string(i);
  ModalityStack x(std::move(ids), h, w);
  for (int i = 0; i < op.n(); ++i)
    adjoint_block(op.specs[i], h, w, y.payloads[i], x.plane(i).data());
  return x;
}

ModalityStack gram_apply(const BlockDiagonalOperator& op, const ModalityStack& x) {
  if (op.n() != x.n()) throw std::invalid_argument("gram_apply: spec count != modality count");
  ModalityStack out = zeros_like(x);
  for (int i = 0; i < op.n(); ++i)
    gram_apply_block(op.specs[i], x.h, x.w, x.plane(i).data(), out.plane(i).data());
  return out;
}

MeasurementVector simulate_measurements(const ModalityStack& x, const BlockDiagonalOperator& op,
                                        double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("simulate_measurements: sigma must be >= 0");
  MeasurementVector y = apply(op, x);
  if (sigma == 0.0) return y;
  for (auto& p : y.payloads) {
    auto* ks = std::get_if<KSpacePayload>(&p);
    if (!ks) continue;
    for (int c = 0; c < ks->n_coils; ++c) {
      auto coil = ks->coil(c);
      for (int y_ = 0; y_ < ks->h; ++y_)
        for (int col : ks->mask.kept_columns) {
          Complex& v = coil[static_cast<std::size_t>(y_) * ks->w + col];
          v += Complex(sigma * rng.normal(), sigma * rng.normal());
        }
    }
  }
  return y;
}

}  // namespace a2a
