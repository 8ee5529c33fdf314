#pragma once
/*
 * Core qutrit / bipartite-qutrit state types over the OAM basis {-1, 0, +1}.
 *
 * Basis order is fixed project-wide: OAM label l maps to computational index
 * l+1, i.e. (-1, 0, +1) -> (0, 1, 2).  Bipartite amplitudes are row-major
 * over (l_A, l_B): composite index = 3*a + b.  Every module in this library
 * shares these conventions.
 */

#include <Eigen/Dense>

#include <array>
#include <complex>

namespace oam3 {

using cxd = std::complex<double>;
using Vec3c = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;
using Vec9c = Eigen::Matrix<cxd, 9, 1>;
using Mat9c = Eigen::Matrix<cxd, 9, 9>;

inline constexpr double kNormTol = 1e-10;    // ket normalization
inline constexpr double kHermTol = 1e-10;    // elementwise Hermiticity
inline constexpr double kTraceTol = 1e-10;   // density-matrix trace
inline constexpr double kPsdFloor = -1e-8;   // eigenvalues below this are invalid;
                                             // in (kPsdFloor, 0) they clamp to 0

/// Computational index of an OAM label l in {-1, 0, +1}.
constexpr int oam_index(int ell) { return ell + 1; }

/// Composite row-major index of a (l_A, l_B) pair of computational indices.
constexpr int pair_index(int a, int b) { return 3 * a + b; }

Mat9c kron(const Mat3c& a, const Mat3c& b);
Vec9c kron(const Vec3c& a, const Vec3c& b);

/// Normalized single-qutrit amplitude vector.
class QutritKet {
 public:
  /// Validates unit norm to kNormTol; throws std::invalid_argument otherwise.
  static QutritKet from(const Vec3c& amplitudes);
  /// Rescales to unit norm; throws on (near-)zero input.
  static QutritKet normalized(const Vec3c& amplitudes);
  /// Basis ket |l> for l in {-1, 0, +1}.
  static QutritKet basis(int ell);

  const Vec3c& amplitudes() const { return amp_; }
  cxd amplitude(int ell) const { return amp_(oam_index(ell)); }

  /// Relabels l -> -l (component reversal).
  QutritKet oam_flipped() const;
  QutritKet conjugated() const;

 private:
  explicit QutritKet(Vec3c a) : amp_(std::move(a)) {}
  Vec3c amp_;
};

/// Normalized two-qutrit amplitude vector, row-major over (l_A, l_B).
class BipartiteKet {
 public:
  static BipartiteKet from(const Vec9c& amplitudes);
  static BipartiteKet normalized(const Vec9c& amplitudes);

  const Vec9c& amplitudes() const { return amp_; }
  /// 3x3 coefficient matrix M(a, b) = amplitude of |a>_A |b>_B.
  Mat3c coefficient_matrix() const;

 private:
  explicit BipartiteKet(Vec9c a) : amp_(std::move(a)) {}
  Vec9c amp_;
};

/// Hermitian, positive-semidefinite, unit-trace matrix (3x3 or 9x9).
///
/// Construction validates all three invariants; eigenvalues in
/// (kPsdFloor, 0) are clamped to zero and the trace renormalized, anything
/// below kPsdFloor throws.  Instances are immutable values.
class DensityMatrix {
 public:
  static DensityMatrix make(const Eigen::MatrixXcd& m);
  static DensityMatrix pure(const QutritKet& psi);
  static DensityMatrix pure(const BipartiteKet& psi);
  static DensityMatrix maximally_mixed(int dim);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  cxd operator()(int r, int c) const { return m_(r, c); }

 private:
  explicit DensityMatrix(Eigen::MatrixXcd m) : m_(std::move(m)) {}
  Eigen::MatrixXcd m_;
};

/// Singular-value form of a bipartite pure state: sum_i c_i |l_i>|r_i>,
/// coefficients nonnegative and descending.
struct SchmidtDecomposition {
  Eigen::Vector3d coefficients;
  std::array<Vec3c, 3> left;
  std::array<Vec3c, 3> right;

  BipartiteKet reconstruct() const;
};

/// The fixed 9-operator qutrit basis used for process tomography:
/// op(0) = identity, op(1..7) the off-diagonal/diagonal pair operators,
/// op(8) = diag(1, 1, -2)/sqrt(3).  Orthogonal but not normalized:
/// Tr(op_m op_n) = diag(3, 2, 2, 2, 2, 2, 2, 2, 2).
class GellMannBasis {
 public:
  static const GellMannBasis& instance();
  const Mat3c& op(int m) const { return ops_[static_cast<size_t>(m)]; }
  const std::array<Mat3c, 9>& ops() const { return ops_; }
  Eigen::Matrix<double, 9, 9> gram() const;
  /// Tr(op_m op_m) for each m.
  static const std::array<double, 9>& norms();

 private:
  GellMannBasis();
  std::array<Mat3c, 9> ops_;
};

enum class Side { A, B };

/// (e^{i theta}|-1,1> + |0,0> + e^{i phi}|1,-1>) / sqrt(3)
BipartiteKet mes_state(double theta, double phi);

SchmidtDecomposition schmidt_decompose(const BipartiteKet& psi);

/// <psi| rho |psi>, clamped to [0,1].  Throws on dimension mismatch.
double fidelity_pure(const DensityMatrix& rho, const BipartiteKet& psi);

/// Tr(rho^2)
double purity(const DensityMatrix& rho);

/// Reduced 3x3 state after tracing out the given side of a 9x9 state.
DensityMatrix partial_trace(const DensityMatrix& rho, Side traced_out);

}  // namespace oam3
