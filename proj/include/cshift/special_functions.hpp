#pragma once

namespace cshift {

/// Regularized incomplete beta I_x(a, b). `one_minus_x` must equal 1 - x; it
/// is passed separately so callers with an accurate complement (e.g. cos^2
/// next to sin^2) do not lose digits near x = 1.
double regularized_incomplete_beta(double a, double b, double x, double one_minus_x);
double regularized_incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

double chi_square_cdf(double x, double dof);

/// Inverse of chi_square_cdf in x by bracketed bisection; |error| <= 1e-10
/// relative to the quantile.
double chi_square_quantile(double dof, double probability);

}  // namespace cshift
