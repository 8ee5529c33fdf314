#include "oam3/qstate.hpp"

#include <cmath>
#include <stdexcept>

namespace oam3 {

Mat9c kron(const Mat3c& a, const Mat3c& b) {
  Mat9c out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.block<3, 3>(3 * i, 3 * j) = a(i, j) * b;
  return out;
}

Vec9c kron(const Vec3c& a, const Vec3c& b) {
  Vec9c out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out(pair_index(i, j)) = a(i) * b(j);
  return out;
}

QutritKet QutritKet::from(const Vec3c& amplitudes) {
  if (std::abs(amplitudes.squaredNorm() - 1.0) > kNormTol)
    throw std::invalid_argument("QutritKet: amplitudes not normalized");
  return QutritKet(amplitudes);
}

QutritKet QutritKet::normalized(const Vec3c& amplitudes) {
  const double n = amplitudes.norm();
  if (n < 1e-300) throw std::invalid_argument("QutritKet: zero vector");
  return QutritKet(amplitudes / n);
}

QutritKet QutritKet::basis(int ell) {
  if (ell < -1 || ell > 1)
    throw std::invalid_argument("QutritKet: OAM label outside {-1,0,+1}");
  Vec3c a = Vec3c::Zero();
  a(oam_index(ell)) = 1.0;
  return QutritKet(a);
}

QutritKet QutritKet::oam_flipped() const {
  return QutritKet(amp_.reverse());
}

QutritKet QutritKet::conjugated() const {
  return QutritKet(amp_.conjugate());
}

BipartiteKet BipartiteKet::from(const Vec9c& amplitudes) {
  if (std::abs(amplitudes.squaredNorm() - 1.0) > kNormTol)
    throw std::invalid_argument("BipartiteKet: amplitudes not normalized");
  return BipartiteKet(amplitudes);
}

BipartiteKet BipartiteKet::normalized(const Vec9c& amplitudes) {
  const double n = amplitudes.norm();
  if (n < 1e-300) throw std::invalid_argument("BipartiteKet: zero vector");
  return BipartiteKet(amplitudes / n);
}

Mat3c BipartiteKet::coefficient_matrix() const {
  Mat3c m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      m(a, b) = amp_(pair_index(a, b));
  return m;
}

DensityMatrix DensityMatrix::make(const Eigen::MatrixXcd& m) {
  if (m.rows() != m.cols() || (m.rows() != 3 && m.rows() != 9))
    throw std::invalid_argument("DensityMatrix: dimension must be 3 or 9");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
    throw std::invalid_argument("DensityMatrix: not Hermitian");
  Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  if (std::abs(h.trace().real() - 1.0) > kTraceTol ||
      std::abs(h.trace().imag()) > kTraceTol)
    throw std::invalid_argument("DensityMatrix: trace != 1");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < kPsdFloor)
    throw std::invalid_argument("DensityMatrix: negative eigenvalue beyond tolerance");
  bool clamped = false;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) < 0.0) { ev(i) = 0.0; clamped = true; }
  if (clamped) {
    h = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    h /= h.trace().real();
    h = 0.5 * (h + h.adjoint().eval());
  }
  return DensityMatrix(std::move(h));
}

DensityMatrix DensityMatrix::pure(const QutritKet& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::pure(const BipartiteKet& psi) {
  return DensityMatrix(psi.amplitudes() * psi.amplitudes().adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int dim) {
  if (dim != 3 && dim != 9)
    throw std::invalid_argument("DensityMatrix: dimension must be 3 or 9");
  return DensityMatrix(Eigen::MatrixXcd::Identity(dim, dim) / double(dim));
}

BipartiteKet SchmidtDecomposition::reconstruct() const {
  Vec9c amp = Vec9c::Zero();
  for (int i = 0; i < 3; ++i)
    amp += coefficients(i) * kron(left[static_cast<size_t>(i)],
                                  right[static_cast<size_t>(i)]);
  return BipartiteKet::normalized(amp);
}

GellMannBasis::GellMannBasis() {
  const cxd I(0.0, 1.0);
  for (auto& op : ops_) op = Mat3c::Zero();
  ops_[0] = Mat3c::Identity();
  ops_[1](0, 1) = 1; ops_[1](1, 0) = 1;
  ops_[2](0, 1) = -I; ops_[2](1, 0) = I;
  ops_[3](0, 0) = 1; ops_[3](1, 1) = -1;
  ops_[4](0, 2) = 1; ops_[4](2, 0) = 1;
  ops_[5](0, 2) = -I; ops_[5](2, 0) = I;
  ops_[6](1, 2) = 1; ops_[6](2, 1) = 1;
  ops_[7](1, 2) = -I; ops_[7](2, 1) = I;
  ops_[8](0, 0) = 1; ops_[8](1, 1) = 1; ops_[8](2, 2) = -2;
  ops_[8] /= std::sqrt(3.0);
}

const GellMannBasis& GellMannBasis::instance() {
  static const GellMannBasis basis;
  return basis;
}

Eigen::Matrix<double, 9, 9> GellMannBasis::gram() const {
  Eigen::Matrix<double, 9, 9> g;
  for (int m = 0; m < 9; ++m)
    for (int n = 0; n < 9; ++n)
      g(m, n) = (op(m) * op(n)).trace().real();
  return g;
}

const std::array<double, 9>& GellMannBasis::norms() {
  static const std::array<double, 9> n = {3, 2, 2, 2, 2, 2, 2, 2, 2};
  return n;
}

BipartiteKet mes_state(double theta, double phi) {
  Vec9c amp = Vec9c::Zero();
  const double s = 1.0 / std::sqrt(3.0);
  amp(pair_index(oam_index(-1), oam_index(+1))) = std::polar(s, theta);
  amp(pair_index(oam_index(0), oam_index(0))) = s;
  amp(pair_index(oam_index(+1), oam_index(-1))) = std::polar(s, phi);
  return BipartiteKet::from(amp);
}

SchmidtDecomposition schmidt_decompose(const BipartiteKet& psi) {
  Eigen::JacobiSVD<Mat3c> svd(psi.coefficient_matrix(),
                              Eigen::ComputeFullU | Eigen::ComputeFullV);
  SchmidtDecomposition out;
  out.coefficients = svd.singularValues();
  for (int i = 0; i < 3; ++i) {
    out.left[static_cast<size_t>(i)] = svd.matrixU().col(i);
    out.right[static_cast<size_t>(i)] = svd.matrixV().col(i).conjugate();
  }
  return out;
}

double fidelity_pure(const DensityMatrix& rho, const BipartiteKet& psi) {
  if (rho.dim() != 9)
    throw std::invalid_argument("fidelity_pure: dimension mismatch");
  const cxd f = psi.amplitudes().adjoint() * rho.matrix() * psi.amplitudes();
  return std::clamp(f.real(), 0.0, 1.0);
}

double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

DensityMatrix partial_trace(const DensityMatrix& rho, Side traced_out) {
  if (rho.dim() != 9)
    throw std::invalid_argument("partial_trace: expected a 9x9 state");
  Mat3c red = Mat3c::Zero();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < 3; ++k)
        red(r, c) += (traced_out == Side::B)
                         ? rho(pair_index(r, k), pair_index(c, k))
                         : rho(pair_index(k, r), pair_index(k, c));
  return DensityMatrix::make(red);
}

}  // namespace oam3
