#include <gtest/gtest.h>

#include "property_checks.hpp"

using namespace qcoral::checks;

namespace {

void expect_clean(const CheckResult& r) {
  EXPECT_EQ(r.trials, kDefaultTrials);
  EXPECT_EQ(r.failures, 0) << r.name << ": " << r.first_failure << " (worst ratio " << r.worst_ratio << ")";
}

}  // namespace

TEST(Property, NormPreservation) { expect_clean(norm_preservation()); }
TEST(Property, ConjugationSpectrum) { expect_clean(conjugation_spectrum()); }
TEST(Property, PartialTraceCovariance) { expect_clean(partial_trace_covariance()); }
TEST(Property, RatioCostRange) { expect_clean(ratio_cost_range()); }
TEST(Property, DeflationOrthogonality) { expect_clean(deflation_orthogonality()); }
TEST(Property, KnnOracle) { expect_clean(knn_oracle()); }
TEST(Property, SpectralLowerBound) { expect_clean(spectral_lower_bound()); }
TEST(Property, CovariancePsd) { expect_clean(covariance_psd()); }
TEST(Property, CoralAlignment) { expect_clean(coral_alignment()); }
TEST(Property, ConfigRoundTrip) { expect_clean(config_round_trip()); }
TEST(Property, GeneratorDeterminism) { expect_clean(generator_determinism()); }
