#pragma once

#include <cstdint>
#include <string>

namespace properties {

struct Report {
  std::string name;
  int cases = 0;
  /// Individual inequality checks (several per case).
  int checks = 0;
  int violations = 0;
  /// Largest relative violation margin observed (<= 0 when everything holds).
  double worst = -1.0;

  bool passed() const { return violations == 0; }
};

/// <x, y> <= ||x||_A^* ||y||_A and <x, a> = ||x||_A^* at the dual maximizer.
Report duality_inequality(int cases, std::uint64_t seed);
/// z = prox(x, t) satisfies ||x - z||^* <= t and <x - z, z> = t ||z||_A.
Report prox_optimality(int cases, std::uint64_t seed);
/// <X v, w> = <v, X^T w>.
Report adjoint_identity(int cases, std::uint64_t seed);
/// Sampled tangent-cone directions pass ||M + t h||_A <= ||M||_A.
Report cone_descent(int cases, std::uint64_t seed);
/// M_tilde - M = (Omega G - I)(M - M_hat) + Omega X^T Z.
Report debias_decomposition(int cases, std::uint64_t seed);
/// |Delta_i| <= ||G omega_i - e_i||_A^* ||M - M_hat||_A.
Report holder_step(int cases, std::uint64_t seed);

}  // namespace properties
