#include <gtest/gtest.h>

#include "checks.hpp"

namespace {

TEST(DotProduct, EveryAdjointMatchesItsTangent) {
  const auto results = softbody::testing::dot_product_checks(100, 20260915);
  ASSERT_FALSE(results.empty());
  for (const auto& r : results) {
    EXPECT_EQ(r.pairs, 100) << r.name;
    EXPECT_LT(r.max_rel_err, 1e-10) << r.name;
  }
}

TEST(DotProduct, SeedIndependent) {
  for (const auto& r : softbody::testing::dot_product_checks(10, 7)) {
    EXPECT_LT(r.max_rel_err, 1e-10) << r.name;
  }
}

}  // namespace
