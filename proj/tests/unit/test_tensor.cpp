/* Copyright 2026 The HoiPrime Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include "hoiprime/errors.hpp"
#include "hoiprime/rng.hpp"
#include "hoiprime/tensor.hpp"

namespace hoiprime {
namespace {

TEST(Tensor, ElementCountMatchesShape) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.rank(), 3);
  EXPECT_EQ(t.dim(-1), 4);
}

TEST(Tensor, RejectsNonPositiveExtents) {
  EXPECT_THROW(Tensor({2, 0}), ShapeError);
  EXPECT_THROW(Tensor(Shape{}), ShapeError);
}

TEST(Tensor, RejectsValueCountMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST(Tensor, FourDimensionalAccessorIsRowMajor) {
  Tensor t({2, 3, 4, 5});
  t.at(1, 2, 3, 4) = 7.0f;
  EXPECT_EQ(t[t.size() - 1], 7.0f);
  t.at(0, 1, 0, 0) = 3.0f;
  EXPECT_EQ(t[20], 3.0f);
}

TEST(Tensor, ReshapeKeepsData) {
  Tensor t({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  EXPECT_EQ(r.values(), t.values());
  EXPECT_THROW(t.reshaped({4, 2}), ShapeError);
}

TEST(Tensor, AccumulateRequiresSameShape) {
  Tensor a({2, 2}, 1.0f), b({2, 2}, 2.0f), c({4});
  a += b;
  EXPECT_EQ(a[3], 3.0f);
  EXPECT_THROW(a += c, ShapeError);
}

TEST(Tensor, CastPreservesValues) {
  Tensor t({3}, std::vector<float>{0.5f, -1.25f, 3.0f});
  const TensorD d = t.cast<double>();
  EXPECT_EQ(d[1], -1.25);
}

TEST(Tensor, AllFiniteDetectsNan) {
  Tensor t({2});
  EXPECT_TRUE(t.all_finite());
  t[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
}

TEST(Seeds, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, "init"), derive_seed(7, "init"));
  EXPECT_NE(derive_seed(7, "init"), derive_seed(7, "shuffle"));
  EXPECT_NE(derive_seed(7, "init"), derive_seed(8, "init"));
  EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
}

TEST(Seeds, FnvMatchesReferenceVectors) {
  // Published FNV-1a 64-bit test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Seeds, RngReproducesStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

}  // namespace
}  // namespace hoiprime
