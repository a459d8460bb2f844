#pragma once

namespace dirapprox {

/// Regularized incomplete beta I_x(a, b) by continued fraction, with the
/// symmetry I_x(a,b) = 1 - I_{1-x}(b,a) applied where the fraction converges
/// slowly. Throws kDomain outside x in [0,1], a > 0, b > 0.
double reg_inc_beta(double x, double a, double b);

double log_beta(double a, double b);

}  // namespace dirapprox
