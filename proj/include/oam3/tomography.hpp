#pragma once
/*
 * Two-qutrit state tomography from 81-setting coincidence counts, Poisson
 * bootstrap error bars, and transfer-process reconstruction (chi matrix over
 * the 9-operator qutrit basis).
 *
 * The state estimate is the maximum of the Poisson log-likelihood
 *   L = sum_ij [ n_ij ln(N p_ij) - N p_ij ]
 * over physical states rho = T^dag T / Tr(T^dag T) (lower-triangular T,
 * 81 real parameters) with the flux scale N fitted jointly.  N profiles out
 * analytically, leaving L(T) = sum_k n_k ln v_k - N_tot ln sum_k v_k with
 * v_k = |T |Phi_k>|^2, which is what the optimizer sees.
 */

#include "oam3/optim.hpp"
#include "oam3/qstate.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace oam3 {

/// Which published listing of the 9 analysis states to use.  The two differ
/// in the sign/conjugation of two imaginary-superposition settings.
enum class ProjectorConvention { kMainText, kTableHeaders };

/// How a party's setting labels map to physical OAM modes.  kOamFlipped
/// relabels l -> -l, the frame produced by an odd number of reflections in
/// one analysis arm.
enum class LabelFrame { kLiteral, kOamFlipped };

/// The 9 single-qutrit analysis states, in canonical order 0..8.
struct ProjectorSet {
  std::array<QutritKet, 9> states;

  const QutritKet& operator[](int k) const {
    return states[static_cast<size_t>(k)];
  }
  /// Overlap Gram matrix G(k,l) = |<phi_k|phi_l>|^2 of the projectors.
  Eigen::Matrix<double, 9, 9> operator_gram() const;
};

ProjectorSet build_projector_set(
    ProjectorConvention convention = ProjectorConvention::kMainText);

/// 9x9 nonnegative coincidence counts; row = Alice setting, column = Bob.
struct CoincidenceTable {
  Eigen::Matrix<long, 9, 9> counts = Eigen::Matrix<long, 9, 9>::Zero();
  std::optional<double> acquisition_seconds;

  long total() const { return counts.sum(); }

  /// CSV: 9 data rows x 9 integer columns; '#' comments, optional header
  /// row/label column.  Throws std::runtime_error naming the bad line.
  static CoincidenceTable load_csv(const std::filesystem::path& file);
  void save_csv(const std::filesystem::path& file) const;
};

/// Born-rule probability Tr[rho (P_i x P_j)] for the literal projector set.
double predicted_probability(const DensityMatrix& rho, const ProjectorSet& set,
                             int i, int j);

/// Measurement model used for reconstruction: projector set, per-party label
/// frame, optional per-OAM-mode detection efficiencies (default all 1).
class MeasurementModel {
 public:
  MeasurementModel(ProjectorConvention convention, LabelFrame alice_frame,
                   LabelFrame bob_frame,
                   const std::array<double, 3>& efficiency_a = {1, 1, 1},
                   const std::array<double, 3>& efficiency_b = {1, 1, 1});

  static MeasurementModel literal(
      ProjectorConvention c = ProjectorConvention::kMainText) {
    return MeasurementModel(c, LabelFrame::kLiteral, LabelFrame::kLiteral);
  }
  /// Frame of the bundled distributed-state dataset: Bob's labels flipped.
  static MeasurementModel bob_flipped(
      ProjectorConvention c = ProjectorConvention::kMainText) {
    return MeasurementModel(c, LabelFrame::kLiteral, LabelFrame::kOamFlipped);
  }

  /// Effective joint measurement ket for setting pair (i, j); includes
  /// frame relabeling and efficiency weights (so it may be sub-normalized).
  const Vec9c& joint_ket(int i, int j) const {
    return kets_[static_cast<size_t>(9 * i + j)];
  }
  double probability(const DensityMatrix& rho, int i, int j) const;

 private:
  std::array<Vec9c, 81> kets_;
};

struct MleOptions {
  int restarts = 8;          // random restarts beyond the identity start
  std::uint64_t seed = 1;
  int max_iterations = 2000;
  double grad_tol = 1e-7;
  std::optional<Eigen::VectorXd> warm_start;  // previous solution parameters
};

struct MleResult {
  DensityMatrix rho = DensityMatrix::maximally_mixed(9);
  double flux_scale = 0.0;      // fitted N
  double log_likelihood = 0.0;  // profile log-likelihood at the optimum
  bool converged = false;
  int iterations = 0;
  Eigen::VectorXd parameters;   // optimal T parameters (for warm starts)
};

/// Throws std::invalid_argument on an all-zero or negative table.
MleResult mle_reconstruct(const CoincidenceTable& table,
                          const MeasurementModel& model,
                          const MleOptions& opts = {});

/// Deterministic synthetic counts round(N p_ij) under the given model.
CoincidenceTable synthesize_counts(const DensityMatrix& rho,
                                   const MeasurementModel& model, double flux);

using Statistic = std::function<double(const DensityMatrix&)>;
using Resampler = std::function<Eigen::Matrix<long, 9, 9>(
    const Eigen::Matrix<long, 9, 9>&, std::mt19937_64&)>;

struct BootstrapOptions {
  int resamples = 100;
  std::uint64_t seed = 7;
  MleOptions mle;           // per-resample reconstruction settings
  bool warm_start = true;   // start each resample from the full-data optimum
  Resampler resampler;      // default: elementwise Poisson(n_ij)
};

struct BootstrapResult {
  double mean = 0.0;
  double stddev = 0.0;
  int failures = 0;  // resamples whose reconstruction did not converge
  std::vector<double> samples;
};

BootstrapResult bootstrap_uncertainty(const CoincidenceTable& table,
                                      const MeasurementModel& model,
                                      const Statistic& statistic,
                                      const BootstrapOptions& opts = {});

/// Hermitian chi matrix over GellMannBasis: rho_out = sum_mn chi_mn L_m rho L_n^dag.
struct ProcessMatrix {
  Mat9c chi = Mat9c::Zero();
  double tp_residual = 0.0;  // ||sum_mn chi_mn L_n^dag L_m - I|| after projection

  static ProcessMatrix identity();
};

/// Linear inversion for chi from >= 9 spanning input/output pairs, followed
/// by projection to the completely-positive cone and trace-preservation
/// correction.  Throws on a rank-deficient input set.
ProcessMatrix process_reconstruct(const std::vector<DensityMatrix>& inputs,
                                  const std::vector<DensityMatrix>& outputs);

/// Apply the process described by chi to a 3x3 state.
DensityMatrix apply_process(const ProcessMatrix& chi, const DensityMatrix& rho);

/// Exact chi of a Kraus-operator channel (for round-trip checks).
ProcessMatrix chi_from_kraus(const std::vector<Mat3c>& kraus);

/// Uhlmann fidelity [Tr sqrt(sqrt(a) b sqrt(a))]^2 between two processes,
/// evaluated on the trace-orthonormalized representation of chi (the basis
/// is orthogonal but not normalized) so the result is basis-independent.
double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);

}  // namespace oam3
