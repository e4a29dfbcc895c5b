#pragma once

#include <span>

namespace zenosim {

// y = a x^b fitted by least squares on (ln x, ln y).
struct PowerLaw {
  double a = 0.0;
  double b = 0.0;
  double residual = 0.0;  // RMS in log space
};

// Throws DomainError on non-positive data, mismatched lengths or < 3 points.
PowerLaw powerlaw_fit(std::span<const double> x, std::span<const double> y);

}  // namespace zenosim
