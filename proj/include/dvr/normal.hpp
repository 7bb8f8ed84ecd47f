#pragma once

namespace dvr {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse of the standard normal CDF for p in (0, 1); +/-infinity at the ends.
double normal_quantile(double p);

} // namespace dvr
