#ifndef SMOOTHDIV_SPECIAL_HPP
#define SMOOTHDIV_SPECIAL_HPP

#include <utility>

#include "smoothdiv/common.hpp"

namespace smoothdiv {

// Complementary standard normal CDF Q(x) = P(Z > x).
double q_function(double x);

// log Q(x), finite far into the right tail (asymptotic expansion past x = 8).
double log_q(double x);

// Inverse of Q on (0, 1); monotone decreasing, q_function(q_inverse(t)) = t
// to 1e-10 or better.
double q_inverse(double tau);

// c_{d,s} = E ||Z||^s for Z standard normal in R^d, by radial Gauss-Legendre.
double c_ds(int d, double s);

// Same moment through the Gamma function, used as a test oracle.
double c_ds_closed_form(int d, double s);

// Surface area of the unit sphere in R^d.
double sphere_area(int d);

// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
const std::pair<Vec, Vec>& gauss_legendre(int n);

// Nodes/weights rescaled to [a, b].
std::pair<Vec, Vec> gauss_legendre_on(double a, double b, int n);

double log_sum_exp(const double* vals, long n);

}  // namespace smoothdiv

#endif
