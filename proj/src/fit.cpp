#include "zenosim/fit.hpp"

#include "zenosim/error.hpp"

#include <cmath>
#include <vector>

namespace zenosim {

PowerLaw powerlaw_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("powerlaw_fit: length mismatch");
  if (x.size() < 3) throw DomainError("powerlaw_fit: need at least 3 points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw DomainError("powerlaw_fit: data must be positive and finite");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("powerlaw_fit: all x values equal");
  PowerLaw out;
  out.b = sxy / sxx;
  const double intercept = my - out.b * mx;
  out.a = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ly[i] - (intercept + out.b * lx[i]);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / static_cast<double>(n));
  return out;
}

}  // namespace zenosim
