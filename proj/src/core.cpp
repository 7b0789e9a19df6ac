#include "a2a/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace a2a {

ModalityStack::ModalityStack(std::vector<std::string> modality_ids, int height, int width)
    : ids(std::move(modality_ids)), h(height), w(width) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("ModalityStack: dims must be positive");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw std::invalid_argument("ModalityStack: empty modality id");
    if (!seen.insert(id).second)
      throw std::invalid_argument("ModalityStack: duplicate modality id '" + id + "'");
  }
  data.assign(static_cast<std::size_t>(ids.size()) * h * w, 0.0);
}

std::span<double> ModalityStack::plane(int i) {
  return {data.data() + static_cast<std::size_t>(i) * plane_size(), plane_size()};
}

std::span<const double> ModalityStack::plane(int i) const {
  return {data.data() + static_cast<std::size_t>(i) * plane_size(), plane_size()};
}

int ModalityStack::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return static_cast<int>(i);
  return -1;
}

bool SamplingMask::keeps(int column) const {
  return std::binary_search(kept_columns.begin(), kept_columns.end(), column);
}

ModalityStack zeros_like(const ModalityStack& s) {
  ModalityStack z = s;
  std::fill(z.data.begin(), z.data.end(), 0.0);
  return z;
}

ModalityStack replace_slice(const ModalityStack& stack, const std::string& id,
                            std::span<const double> plane) {
  const int i = stack.index_of(id);
  if (i < 0) throw std::invalid_argument("replace_slice: unknown modality '" + id + "'");
  if (plane.size() != stack.plane_size())
    throw std::invalid_argument("replace_slice: plane dimension mismatch");
  ModalityStack out = stack;
  std::copy(plane.begin(), plane.end(), out.plane(i).begin());
  return out;
}

double stack_l2_norm(const ModalityStack& stack) {
  double acc = 0.0;
  for (double v : stack.data) acc += v * v;
  return std::sqrt(acc);
}

double dot(const ModalityStack& a, const ModalityStack& b) {
  if (a.data.size() != b.data.size()) throw std::invalid_argument("dot: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

static void check_same(const ModalityStack& a, const ModalityStack& b, const char* op) {
  if (a.data.size() != b.data.size() || a.h != b.h || a.w != b.w)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

void add_inplace(ModalityStack& a, const ModalityStack& b) {
  check_same(a, b, "add");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void sub_inplace(ModalityStack& a, const ModalityStack& b) {
  check_same(a, b, "sub");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
}

void scale_inplace(ModalityStack& a, double s) {
  for (double& v : a.data) v *= s;
}

void axpy_inplace(ModalityStack& a, double s, const ModalityStack& b) {
  check_same(a, b, "axpy");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

ModalityStack add(const ModalityStack& a, const ModalityStack& b) {
  ModalityStack out = a;
  add_inplace(out, b);
  return out;
}

ModalityStack sub(const ModalityStack& a, const ModalityStack& b) {
  ModalityStack out = a;
  sub_inplace(out, b);
  return out;
}

ModalityStack scale(const ModalityStack& a, double s) {
  ModalityStack out = a;
  scale_inplace(out, s);
  return out;
}

double measurement_dot(const MeasurementVector& a, const MeasurementVector& b) {
  if (a.payloads.size() != b.payloads.size())
    throw std::invalid_argument("measurement_dot: modality count mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.payloads.size(); ++i) {
    const Payload& pa = a.payloads[i];
    const Payload& pb = b.payloads[i];
    if (std::holds_alternative<EmptyPayload>(pa)) {
      if (!std::holds_alternative<EmptyPayload>(pb))
        throw std::invalid_argument("measurement_dot: payload kind mismatch");
      continue;
    }
    if (const auto* ia = std::get_if<ImagePayload>(&pa)) {
      const auto* ib = std::get_if<ImagePayload>(&pb);
      if (!ib || ia->data.size() != ib->data.size())
        throw std::invalid_argument("measurement_dot: payload mismatch");
      for (std::size_t k = 0; k < ia->data.size(); ++k) acc += ia->data[k] * ib->data[k];
      continue;
    }
    const auto& ka = std::get<KSpacePayload>(pa);
    const auto* kb = std::get_if<KSpacePayload>(&pb);
    if (!kb || ka.data.size() != kb->data.size())
      throw std::invalid_argument("measurement_dot: payload mismatch");
    for (std::size_t k = 0; k < ka.data.size(); ++k)
      acc += ka.data[k].real() * kb->data[k].real() + ka.data[k].imag() * kb->data[k].imag();
  }
  return acc;
}

double measurement_norm(const MeasurementVector& v) { return std::sqrt(measurement_dot(v, v)); }

MeasurementVector measurement_sub(const MeasurementVector& a, const MeasurementVector& b) {
  if (a.payloads.size() != b.payloads.size())
    throw std::invalid_argument("measurement_sub: modality count mismatch");
  MeasurementVector out = a;
  for (std::size_t i = 0; i < out.payloads.size(); ++i) {
    Payload& po = out.payloads[i];
    const Payload& pb = b.payloads[i];
    if (std::holds_alternative<EmptyPayload>(po)) {
      if (!std::holds_alternative<EmptyPayload>(pb))
        throw std::invalid_argument("measurement_sub: payload kind mismatch");
      continue;
    }
    if (auto* io = std::get_if<ImagePayload>(&po)) {
      const auto* ib = std::get_if<ImagePayload>(&pb);
      if (!ib || io->data.size() != ib->data.size())
        throw std::invalid_argument("measurement_sub: payload mismatch");
      for (std::size_t k = 0; k < io->data.size(); ++k) io->data[k] -= ib->data[k];
      continue;
    }
    auto& ko = std::get<KSpacePayload>(po);
    const auto* kb = std::get_if<KSpacePayload>(&pb);
    if (!kb || ko.data.size() != kb->data.size())
      throw std::invalid_argument("measurement_sub: payload mismatch");
    for (std::size_t k = 0; k < ko.data.size(); ++k) ko.data[k] -= kb->data[k];
  }
  return out;
}

}  // namespace a2a
