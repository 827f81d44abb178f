#include "properties.hpp"

#include <gtest/gtest.h>

namespace {

void expect_clean(const properties::Report& r) {
  EXPECT_GT(r.checks, 0) << r.name;
  EXPECT_EQ(r.violations, 0) << r.name << ": worst margin " << r.worst;
}

TEST(Properties, DualityInequality) { expect_clean(properties::duality_inequality(300, 1)); }
TEST(Properties, ProxOptimality) { expect_clean(properties::prox_optimality(300, 2)); }
TEST(Properties, AdjointIdentity) { expect_clean(properties::adjoint_identity(300, 3)); }
TEST(Properties, ConeDescent) { expect_clean(properties::cone_descent(300, 4)); }
TEST(Properties, DebiasDecomposition) { expect_clean(properties::debias_decomposition(200, 5)); }
TEST(Properties, HolderStep) { expect_clean(properties::holder_step(200, 6)); }

}  // namespace
