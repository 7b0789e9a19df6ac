#include <doctest.h>

#include <cmath>

#include "a2a/core.hpp"
#include "a2a/rng.hpp"

using namespace a2a;

namespace {
ModalityStack make_stack(std::vector<std::string> ids, int h, int w, double fill = 0.0) {
  ModalityStack s(std::move(ids), h, w);
  std::fill(s.data.begin(), s.data.end(), fill);
  return s;
}
}  // namespace

TEST_CASE("replace_slice write-read identity") {
  ModalityStack s = make_stack({"T1", "T2FLAIR"}, 4, 4, 0.5);
  std::vector<double> plane(16);
  for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = 0.01 * static_cast<double>(i);
  ModalityStack out = replace_slice(s, "T2FLAIR", plane);
  auto got = out.plane(1);
  for (std::size_t i = 0; i < plane.size(); ++i) CHECK(got[i] == plane[i]);
}

TEST_CASE("replace_slice with itself is the identity") {
  Rng rng(7);
  ModalityStack s = make_stack({"a", "b", "c"}, 3, 5);
  rng.fill_normal(s);
  std::vector<double> self(s.plane(1).begin(), s.plane(1).end());
  ModalityStack out = replace_slice(s, "b", self);
  CHECK(out.data == s.data);
}

TEST_CASE("replace_slice leaves other modalities untouched") {
  ModalityStack s = make_stack({"m0", "m1"}, 2, 2);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = static_cast<double>(i + 1);
  std::vector<double> zeros(4, 0.0);
  ModalityStack out = replace_slice(s, "m0", zeros);
  auto other = out.plane(1);
  CHECK(other[0] == 5.0);
  CHECK(other[1] == 6.0);
  CHECK(other[2] == 7.0);
  CHECK(other[3] == 8.0);
  for (double v : out.plane(0)) CHECK(v == 0.0);
}

TEST_CASE("replace_slice errors") {
  ModalityStack s = make_stack({"a"}, 2, 2);
  std::vector<double> plane(4, 0.0);
  CHECK_THROWS_AS(replace_slice(s, "nope", plane), std::invalid_argument);
  std::vector<double> bad(5, 0.0);
  CHECK_THROWS_AS(replace_slice(s, "a", bad), std::invalid_argument);
}

TEST_CASE("stack_l2_norm basics") {
  ModalityStack z = make_stack({"a"}, 3, 3);
  CHECK(stack_l2_norm(z) == 0.0);
  z.data[4] = 3.0;
  CHECK(stack_l2_norm(z) == 3.0);
  ModalityStack ones = make_stack({"a"}, 2, 2, 1.0);
  CHECK(stack_l2_norm(ones) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("norm of difference is zero iff stacks equal") {
  Rng rng(11);
  ModalityStack a = make_stack({"a", "b"}, 4, 4);
  rng.fill_normal(a);
  ModalityStack b = a;
  CHECK(stack_l2_norm(sub(a, b)) == 0.0);
  b.data[7] += 1e-9;
  CHECK(stack_l2_norm(sub(a, b)) > 0.0);
}

TEST_CASE("stack arithmetic is exact for representable values and splits per modality") {
  Rng rng(3);
  ModalityStack a = make_stack({"x", "y", "z"}, 4, 4);
  ModalityStack b = a;
  // dyadic rationals stay exact under +, -, *2
  for (auto& v : a.data)
    v = static_cast<double>(static_cast<int>(rng.uniform_index(64)) - 32) / 8.0;
  for (auto& v : b.data)
    v = static_cast<double>(static_cast<int>(rng.uniform_index(64)) - 32) / 8.0;
  ModalityStack s = add(a, b);
  ModalityStack d = scale(a, 2.0);
  for (int m = 0; m < 3; ++m) {
    auto pa = a.plane(m), pb = b.plane(m), ps = s.plane(m), pd = d.plane(m);
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(ps[i] == pa[i] + pb[i]);
      CHECK(pd[i] == 2.0 * pa[i]);
    }
  }
}

TEST_CASE("stack construction rejects bad ids") {
  CHECK_THROWS_AS(ModalityStack({"a", "a"}, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(ModalityStack({""}, 2, 2), std::invalid_argument);
}

TEST_CASE("measurement dot and norm treat complex entries as real pairs") {
  MeasurementVector v;
  ImagePayload img;
  img.h = 1;
  img.w = 2;
  img.data = {3.0, 4.0};
  v.payloads.push_back(img);
  v.payloads.push_back(EmptyPayload{});
  CHECK(measurement_norm(v) == doctest::Approx(5.0));
  KSpacePayload k;
  k.n_coils = 1;
  k.h = 1;
  k.w = 1;
  k.data = {Complex(3.0, 4.0)};
  k.mask.kept_columns = {0};
  k.mask.w = 1;
  MeasurementVector v2;
  v2.payloads.push_back(k);
  CHECK(measurement_dot(v2, v2) == doctest::Approx(25.0));
}
