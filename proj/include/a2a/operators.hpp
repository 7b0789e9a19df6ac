#pragma once

#include <variant>
#include <vector>

#include "a2a/core.hpp"
#include "a2a/rng.hpp"

namespace a2a {

/// Complex coil sensitivity maps, [coil][y][x].
struct CoilMaps {
  int n_coils = 0;
  int h = 0;
  int w = 0;
  std::vector<Complex> data;

  std::span<const Complex> coil(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * h * w, static_cast<std::size_t>(h) * w};
  }
};

struct IdentityOp {};
struct ZeroOp {};
struct MriCartesianOp {
  SamplingMask mask;
  CoilMaps csms;
};

using OperatorSpec = std::variant<IdentityOp, ZeroOp, MriCartesianOp>;

/// A = diag(A_1, ..., A_n); one spec per modality, order aligned with the
/// stack's modality ids.
struct BlockDiagonalOperator {
  std::vector<OperatorSpec> specs;

  int n() const { return static_cast<int>(specs.size()); }
};

/// Equispaced k-space column mask: {0, accel, 2*accel, ...} plus `acs`
/// centered columns merged in. `accel` is nominal; the effective rate is
/// |kept| / W.
SamplingMask make_equispaced_mask(int w, int accel, int acs = 0);

/// Deterministic synthetic coil maps: point sources on a circle of radius
/// r * (max(h,w)/2) around the image center. Magnitude is 1/distance with a
/// per-pixel phase equal to the angle of the direction toward the source.
/// A single global scale makes the sum-of-squares magnitude at the center
/// pixel exactly 1.
CoilMaps synth_csms(int h, int w, int n_coils, double r);

MeasurementVector apply(const BlockDiagonalOperator& op, const ModalityStack& x);
ModalityStack adjoint(const BlockDiagonalOperator& op, const MeasurementVector& y);
/// adjoint(apply(x)), evaluated per modality without materializing the
/// intermediate MeasurementVector.
ModalityStack gram_apply(const BlockDiagonalOperator& op, const ModalityStack& x);

/// Per-modality gram product, for per-block CG systems. `plane` and `out`
/// hold one h*w plane.
void gram_apply_block(const OperatorSpec& spec, int h, int w, const double* plane, double* out);
/// Per-modality adjoint into a single plane.
void adjoint_block(const OperatorSpec& spec, int h, int w, const Payload& y, double* out);
/// Per-modality forward from a single plane.
Payload apply_block(const OperatorSpec& spec, int h, int w, const double* plane);

/// apply(op, x) plus i.i.d. Gaussian noise of std sigma on each retained
/// k-space entry (independent real and imaginary components). Identity and
/// Zero payloads are returned untouched.
MeasurementVector simulate_measurements(const ModalityStack& x, const BlockDiagonalOperator& op,
                                        double sigma, Rng& rng);

}  // namespace a2a
