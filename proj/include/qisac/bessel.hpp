// bessel.hpp
// Bessel functions of the first kind for the tapered-aperture beam pattern.
// Self-contained (no special-function library): power series for small
// arguments, Miller's normalized downward recurrence elsewhere.
#pragma once

namespace qisac {

/// J_n(x) for small non-negative integer order.  Absolute error is below
/// 1e-10 for |x| <= 50 (verified against an independent oracle in tests).
double bessel_j(int order, double x);

}  // namespace qisac
