#pragma once
/*
 * Entanglement certification for distributed two-qutrit states:
 *   - best-MES fidelity search over the phase family MES(theta, phi)
 *   - Schmidt-rank-d fidelity bounds and dimension certification
 *   - CGLMP I3 evaluation and maximization over measurement settings
 *
 * CGLMP conventions (fixed by requiring the ideal-MES value 2.8729 at the
 * standard settings (0, 1/2, 1/4, -1/4)):
 *   Alice outcome-j ket: (1/sqrt3) sum_m exp(i 2pi m (j + alpha)/3) |m>
 *   Bob   outcome-k ket: (1/sqrt3) sum_m exp(i 2pi m (k - beta )/3) |m>
 *   P(X = Y + k) pairs outcome_X = outcome_Y + k (mod 3).
 */

#include "oam3/qstate.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace oam3 {

struct MesFit {
  double fidelity = 0.0;
  double theta = 0.0;  // in [0, 2pi)
  double phi = 0.0;
};

/// Global search (grid + simplex refinement) for the closest MES(theta, phi).
MesFit best_mes_fidelity(const DensityMatrix& rho, int grid = 256);

/// Max overlap sum_{i<=d} lambda_i^2 a Schmidt-rank-d state can reach with
/// the target.  Throws unless 1 <= d <= 3.
double schmidt_rank_bound(const BipartiteKet& target, int d);

/// Certified entanglement dimension: smallest d with
/// fidelity_pure(rho, target) <= schmidt_rank_bound(target, d); 1 if no
/// bound is beaten.
int certify_dimension(const DensityMatrix& rho, const BipartiteKet& target);

/// Four phase parameters of the standard CGLMP measurement family.
struct CglmpSettings {
  double alpha1 = 0.0;
  double alpha2 = 0.5;
  double beta1 = 0.25;
  double beta2 = -0.25;

  static CglmpSettings standard() { return {}; }
};

/// Four measurement bases; row r of each matrix is the outcome-r ket.
struct CglmpBases {
  Mat3c a1, a2, b1, b2;

  static CglmpBases from_settings(const CglmpSettings& s);
  /// Verifies each basis is orthonormal to 1e-10.
  bool orthonormal() const;
};

/// Joint probability P(A_a = j, B_b = k); a, b in {1, 2}; j, k in {0, 1, 2}.
double cglmp_probability(const DensityMatrix& rho, const CglmpSettings& s,
                         int a, int b, int j, int k);

double cglmp_value(const DensityMatrix& rho, const CglmpSettings& s);
double cglmp_value(const DensityMatrix& rho, const CglmpBases& bases);

/// Settings family for the I3 maximization.  kPhaseOnly is the four-phase
/// family above; kGeneralUnitary rotates each of the four readout bases by
/// an arbitrary SU(3) element, which is required to reach the violation a
/// crosstalk-degraded state supports.
enum class CglmpFamily { kPhaseOnly, kGeneralUnitary };

struct CglmpOptimizeOptions {
  CglmpFamily family = CglmpFamily::kGeneralUnitary;
  int starts = 32;
  std::uint64_t seed = 2;
  int max_evaluations = 8000;  // per simplex start
};

struct CglmpOptimum {
  double value = 0.0;
  CglmpBases bases;
  std::optional<CglmpSettings> settings;  // set when family == kPhaseOnly
  CglmpFamily family = CglmpFamily::kGeneralUnitary;
};

CglmpOptimum cglmp_optimize(const DensityMatrix& rho,
                            const CglmpOptimizeOptions& opts = {});

struct WitnessOptions {
  int mes_grid = 256;
  CglmpOptimizeOptions cglmp;
  bool compute_cglmp = true;
};

/// Everything the certification pipeline reports for one state.
struct WitnessReport {
  double fidelity = 0.0;
  double theta = 0.0;
  double phi = 0.0;
  double purity = 0.0;
  int certified_dimension = 1;
  double f1_bound = 0.0;
  double f2_bound = 0.0;
  double i3 = 0.0;
  CglmpOptimum i3_settings;
};

WitnessReport witness_report(const DensityMatrix& rho,
                             const WitnessOptions& opts = {});

}  // namespace oam3
