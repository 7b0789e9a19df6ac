#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace a2a {

using Complex = std::complex<double>;

/// Ordered stack of n co-registered 2D modality images.
/// Layout is modality-major: data[i*h*w + y*w + x] is pixel (y, x) of modality i.
struct ModalityStack {
  std::vector<std::string> ids;
  int h = 0;
  int w = 0;
  std::vector<double> data;

  ModalityStack() = default;
  ModalityStack(std::vector<std::string> modality_ids, int height, int width);

  int n() const { return static_cast<int>(ids.size()); }
  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }
  std::size_t size() const { return data.size(); }

  std::span<double> plane(int i);
  std::span<const double> plane(int i) const;

  /// Index of the named modality, -1 if absent.
  int index_of(const std::string& id) const;

  bool same_shape(const ModalityStack& other) const {
    return h == other.h && w == other.w && ids.size() == other.ids.size();
  }
};

/// H x W complex image (k-space plane or coil-weighted image).
struct ComplexPlane {
  int h = 0;
  int w = 0;
  std::vector<Complex> data;

  ComplexPlane() = default;
  ComplexPlane(int height, int width) : h(height), w(width), data(static_cast<std::size_t>(height) * width) {}

  Complex& at(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  Complex at(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
};

struct SamplingMask {
  std::vector<int> kept_columns;  // sorted, unique, within [0, w)
  int w = 0;
  int accel = 1;  // nominal factor

  bool keeps(int column) const;
  double effective_rate() const {
    return w > 0 ? static_cast<double>(kept_columns.size()) / w : 0.0;
  }
};

/// Per-modality measurement payloads.
struct EmptyPayload {};

struct ImagePayload {
  int h = 0;
  int w = 0;
  std::vector<double> data;
};

struct KSpacePayload {
  int n_coils = 0;
  int h = 0;
  int w = 0;
  std::vector<Complex> data;  // [coil][h][w], zero outside kept mask columns
  SamplingMask mask;

  std::span<Complex> coil(int c) {
    return {data.data() + static_cast<std::size_t>(c) * h * w, static_cast<std::size_t>(h) * w};
  }
  std::span<const Complex> coil(int c) const {
    return {data.data() + static_cast<std::size_t>(c) * h * w, static_cast<std::size_t>(h) * w};
  }
};

using Payload = std::variant<EmptyPayload, ImagePayload, KSpacePayload>;

/// Collection of acquired data, one payload per modality.
struct MeasurementVector {
  std::vector<Payload> payloads;

  int n() const { return static_cast<int>(payloads.size()); }
};

// -- stack arithmetic -------------------------------------------------------

ModalityStack zeros_like(const ModalityStack& s);

/// Returns a copy of `stack` with the named plane replaced.
ModalityStack replace_slice(const ModalityStack& stack, const std::string& id,
                            std::span<const double> plane);

/// Euclidean norm over all n*h*w entries.
double stack_l2_norm(const ModalityStack& stack);

double dot(const ModalityStack& a, const ModalityStack& b);

void add_inplace(ModalityStack& a, const ModalityStack& b);
void sub_inplace(ModalityStack& a, const ModalityStack& b);
void scale_inplace(ModalityStack& a, double s);
/// a += s * b
void axpy_inplace(ModalityStack& a, double s, const ModalityStack& b);

ModalityStack add(const ModalityStack& a, const ModalityStack& b);
ModalityStack sub(const ModalityStack& a, const ModalityStack& b);
ModalityStack scale(const ModalityStack& a, double s);

/// Inner product over a measurement vector; complex entries contribute
/// re*re + im*im so the space behaves as a real vector space.
double measurement_dot(const MeasurementVector& a, const MeasurementVector& b);
double measurement_norm(const MeasurementVector& v);
/// a - b, elementwise per payload. Payload kinds must match.
MeasurementVector measurement_sub(const MeasurementVector& a, const MeasurementVector& b);

}  // namespace a2a
