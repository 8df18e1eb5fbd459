#pragma once

#include <cstddef>

namespace anchorkb {

// ln B(a, b)
double log_beta(double a, double b);

// I_x(a, b), the regularized incomplete beta function, computed with the
// modified Lentz continued fraction. Accurate to ~1e-12 for the small
// degrees of freedom used here.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with nu degrees of freedom:
// p = I_{nu/(nu+t^2)}(nu/2, 1/2).
double student_t_two_sided_p(double t, double nu);

// Upper-tail probability of an F statistic with (d1, d2) degrees of
// freedom: p = I_{d2/(d2 + d1 f)}(d2/2, d1/2).
double f_upper_tail_p(double f, double d1, double d2);

}  // namespace anchorkb
