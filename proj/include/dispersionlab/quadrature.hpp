#pragma once

#include <complex>
#include <functional>

namespace dlab {

/// Adaptive Gauss-Kronrod (G7,K15) quadrature for complex integrands on a
/// finite interval. Bisects the segment with the largest error estimate
/// until the summed estimate drops below abs_tol. Throws std::runtime_error
/// when the budget of subdivisions is exhausted without convergence.
std::complex<double> integrate_gk(const std::function<std::complex<double>(double)>& f,
                                  double a, double b, double abs_tol,
                                  int max_segments = 4000);

}  // namespace dlab
