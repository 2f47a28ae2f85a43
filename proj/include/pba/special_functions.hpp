#pragma once

namespace pba {

// Regularized incomplete beta I_x(a, b) by continued fraction (modified
// Lentz), using the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) for convergence.
double regularized_incomplete_beta(double a, double b, double x);

// Student t cumulative distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);

// Two-sided tail probability P(|T| >= |t|).
double student_t_two_sided_p(double t, double df);

}  // namespace pba
