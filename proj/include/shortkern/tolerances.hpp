#pragma once

namespace shortkern {

// Numerical thresholds shared by every module. Defaults leave double
// precision headroom for D up to a few hundred.
struct Tolerances {
  double sym = 1e-12;         // symmetry, relative to 1 + max|entry|
  double psd = 1e-10;         // negative-eigenvalue slack, relative to 1 + lambda_max
  double recon = 1e-10;       // reconstruction / idempotence
  double orth = 1e-10;        // orthonormality and Gram-Schmidt rank cut
  double cutoff_rel = 1e-12;  // pseudo-inverse spectral cut, relative to lambda_max
  double sign = 1e-12;        // eigenvector sign normalization
  double range = 1e-8;        // relative residual outside ran(R) meaning "infinite norm"
  double solve = 1e-10;       // relative residual of ridge solves
  double path = 1e-8;         // coefficient path identity
  double align = 1e-8;        // final nuisance alignment
};

}  // namespace shortkern
