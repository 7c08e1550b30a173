#pragma once

// Adaptive composite Gauss-Legendre quadrature for complex integrands
// on [0, 1]. Panels are halved until the 32-point rule on a panel agrees
// with the sum over its two halves.

#include <complex>
#include <functional>

namespace ringmap {

struct QuadResult {
    std::complex<double> value;
    double error;   ///< sum of panel disagreement estimates
    int panels;
};

struct QuadOptions {
    double rel_tol = 1e-12;
    double abs_tol = 1e-15;
    int max_depth = 60;
    int max_panels = 200000;
};

/// Throws AccuracyError when the panel budget or depth is exhausted
/// before the estimate meets the tolerance.
QuadResult integrate_unit(const std::function<std::complex<double>(double)>& f,
                          const QuadOptions& opt = {});

}  // namespace ringmap
