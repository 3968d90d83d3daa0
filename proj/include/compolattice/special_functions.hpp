#pragma once

namespace compolattice {

/// Digamma psi(x) for x > 0, via upward recurrence into the asymptotic regime.
/// Accurate to ~1e-12 relative over x in [1e-8, 1e6].
double digamma(double x);

/// Trigamma psi'(x) for x > 0, same recurrence + asymptotic series approach.
double trigamma(double x);

}  // namespace compolattice
