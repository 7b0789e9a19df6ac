#pragma once

#include "a2a/core.hpp"

namespace a2a {

/// Centered unitary 2D DFT: ifftshift, forward DFT scaled by 1/sqrt(h*w),
/// fftshift. DC lands at (h/2, w/2). The inverse undoes the chain exactly,
/// so forward/inverse form a unitary pair and the adjoint is the inverse.
void fft2_centered(const ComplexPlane& in, ComplexPlane& out);
void ifft2_centered(const ComplexPlane& in, ComplexPlane& out);

}  // namespace a2a
