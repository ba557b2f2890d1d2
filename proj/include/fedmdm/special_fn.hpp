#pragma once

namespace fedmdm::special_fn {

/// Natural log of the gamma function for x > 0.
///
/// Relative error stays below 1e-12 on [1e-6, 1e8]; near the roots at
/// x = 1 and x = 2 a Taylor expansion about 2 keeps the result accurate
/// in the relative sense. Throws DomainError for non-finite or x <= 0.
double log_gamma(double x);

/// Digamma (psi), the derivative of log_gamma. Absolute error stays
/// below 1e-10 on [1e-6, 1e8]. Throws DomainError for non-finite or x <= 0.
double digamma(double x);

}  // namespace fedmdm::special_fn
