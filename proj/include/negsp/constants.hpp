#pragma once

namespace negsp::constants {

// Exponent of h in the classic recursive solver: (2*sqrt(3) - 3) / 3.
double classic_h_exponent();
// Improved parameterization: (sqrt(2) - 1) / (sqrt(2) + 1).
double improved_h_exponent();
// Dense bootstrapping solver: h ~ k^((sqrt(17) - 3) / 4).
double dense_h_exponent();
// Dense bootstrapping solver: h0 ~ k^(sqrt(17) - 4).
double dense_h0_exponent();
// Density threshold m0 = n^((33 - 7*sqrt(17)) / 4).
double sparse_threshold_exponent();
// Sparse regime test m < k^((33 - 7*sqrt(17)) / 5).
double sparse_regime_exponent();

// Unique real root of x^3 + 2x^2 + x - 2, by bisection to 1e-12.
double alpha();
// gamma = 1 + alpha^2 (1 - alpha) / (2 (2 + alpha)).
double gamma_exponent();
// Twice-recursive layer parameter: h ~ k^(alpha^2 / (2 + alpha)).
double twice_h_exponent();
// Twice-recursive width parameter: b ~ k^(1 - alpha).
double twice_b_exponent();

}  // namespace negsp::constants
