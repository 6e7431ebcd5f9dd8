#pragma once

#include <vector>

#include "tfmean/error.hpp"
#include "tfmean/spaces.hpp"
#include "tfmean/transforms.hpp"

namespace tfm::testing {

class UnsupportedOracleError : public Error {
 public:
  using Error::Error;
};

/// Brute-force minimizer of sum tau(d(Y_i, q)) for small instances
/// (n <= 16): ternary search on Euclidean(1), per-edge ternary search on
/// trees, shrinking grid seeded at points and midpoints on Euclidean(2).
Point oracle_minimize(const Space& s, const Transform& t, const std::vector<Point>& sample);

}  // namespace tfm::testing
