// Copyright 2026 The QRC Measurement Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense multi-qubit linear algebra: states, operators, Pauli strings,
// partial trace and the Hermitian exponential.
//
// Basis convention: qubit 0 is the leftmost tensor factor, i.e. qubit q is
// bit (N - 1 - q) of a computational-basis index. Tracing out "the first
// qubit" therefore sums the two diagonal blocks of the matrix.

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Matrix2c = Eigen::Matrix2cd;
using Index = Eigen::Index;

/// Largest register the dense representation accepts (4096-dimensional).
inline constexpr int kMaxQubits = 12;

namespace tolerance {
inline constexpr double kTrace = 1e-10;
inline constexpr double kHermitian = 1e-10;
inline constexpr double kPositive = 1e-9;
inline constexpr double kUnitary = 1e-9;
inline constexpr double kImaginary = 1e-9;
}  // namespace tolerance

/// Raised when a computation leaves the numerically meaningful range, e.g. a
/// trajectory whose normalization underflows.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

inline constexpr std::array<Axis, 3> kAllAxes{Axis::x, Axis::y, Axis::z};

constexpr char axis_char(Axis a) noexcept {
  switch (a) {
    case Axis::x: return 'x';
    case Axis::y: return 'y';
    case Axis::z: return 'z';
  }
  return '?';
}

inline Axis parse_axis(std::string_view s) {
  if (s == "x" || s == "X") return Axis::x;
  if (s == "y" || s == "Y") return Axis::y;
  if (s == "z" || s == "Z") return Axis::z;
  throw std::invalid_argument("unknown axis '" + std::string(s) +
                              "' (expected x, y or z)");
}

namespace detail {

constexpr bool is_power_of_two(Index n) noexcept {
  return n > 0 && (n & (n - 1)) == 0;
}

inline int qubits_for_dim(Index dim) {
  if (!is_power_of_two(dim) || dim < 2)
    throw std::invalid_argument("dimension " + std::to_string(dim) +
                                " is not a power of two >= 2");
  const int n = std::countr_zero(static_cast<std::uint64_t>(dim));
  if (n > kMaxQubits)
    throw std::invalid_argument("register of " + std::to_string(n) +
                                " qubits exceeds the supported maximum of " +
                                std::to_string(kMaxQubits));
  return n;
}

inline double hermitian_deviation(const CMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double unitary_deviation(const CMatrix& u) {
  return (u * u.adjoint() - CMatrix::Identity(u.rows(), u.cols()))
      .cwiseAbs()
      .maxCoeff();
}

/// Bit mask of qubit q in an N-qubit basis index.
constexpr std::uint32_t qubit_mask(int n, int q) noexcept {
  return std::uint32_t{1} << (n - 1 - q);
}

}  // namespace detail

/// A dim x dim operator on a qubit register. When flagged Hermitian the
/// flag is verified at construction.
class QubitOperator {
 public:
  explicit QubitOperator(CMatrix data, bool hermitian = true)
      : data_(std::move(data)), hermitian_(hermitian) {
    if (data_.rows() != data_.cols())
      throw std::invalid_argument("operator matrix must be square");
    num_qubits_ = detail::qubits_for_dim(data_.rows());
    if (hermitian_ && detail::hermitian_deviation(data_) > tolerance::kHermitian)
      throw std::invalid_argument("operator flagged Hermitian is not Hermitian");
  }

  Index dim() const noexcept { return data_.rows(); }
  int num_qubits() const noexcept { return num_qubits_; }
  bool is_hermitian() const noexcept { return hermitian_; }
  const CMatrix& matrix() const noexcept { return data_; }

 private:
  CMatrix data_;
  bool hermitian_;
  int num_qubits_ = 0;
};

class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(CMatrix data) : data_(std::move(data)) {
    if (data_.rows() != data_.cols())
      throw std::invalid_argument("unitary matrix must be square");
    num_qubits_ = detail::qubits_for_dim(data_.rows());
    if (detail::unitary_deviation(data_) > tolerance::kUnitary)
      throw std::invalid_argument("matrix is not unitary within 1e-9");
  }

  static UnitaryMatrix identity(int num_qubits) {
    return UnitaryMatrix(CMatrix::Identity(Index{1} << num_qubits,
                                           Index{1} << num_qubits));
  }

  Index dim() const noexcept { return data_.rows(); }
  int num_qubits() const noexcept { return num_qubits_; }
  const CMatrix& matrix() const noexcept { return data_; }

 private:
  CMatrix data_;
  int num_qubits_ = 0;
};

/// Unit-trace Hermitian state. Trace and Hermiticity are verified on every
/// construction; positivity only by `validated()` or `check_positive()`,
/// since it needs an eigendecomposition.
class DensityMatrix {
 public:
  explicit DensityMatrix(CMatrix data) : data_(std::move(data)) {
    if (data_.rows() != data_.cols())
      throw std::invalid_argument("density matrix must be square");
    num_qubits_ = detail::qubits_for_dim(data_.rows());
    const Complex tr = data_.trace();
    if (std::abs(tr - Complex{1.0, 0.0}) > tolerance::kTrace)
      throw std::invalid_argument("density matrix trace " +
                                  std::to_string(tr.real()) + "+" +
                                  std::to_string(tr.imag()) + "i != 1");
    if (detail::hermitian_deviation(data_) > tolerance::kHermitian)
      throw std::invalid_argument("density matrix is not Hermitian");
  }

  /// Also verifies all eigenvalues are >= -1e-9.
  static DensityMatrix validated(CMatrix data);

  static DensityMatrix basis_state(int num_qubits, std::uint64_t index) {
    const Index dim = Index{1} << num_qubits;
    if (index >= static_cast<std::uint64_t>(dim))
      throw std::invalid_argument("basis index out of range");
    CMatrix m = CMatrix::Zero(dim, dim);
    m(static_cast<Index>(index), static_cast<Index>(index)) = 1.0;
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix zero_state(int num_qubits) {
    return basis_state(num_qubits, 0);
  }

  static DensityMatrix maximally_mixed(int num_qubits) {
    const Index dim = Index{1} << num_qubits;
    return DensityMatrix(CMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix from_pure(const CVector& psi) {
    const double norm2 = psi.squaredNorm();
    if (!(norm2 > 0.0)) throw std::invalid_argument("zero state vector");
    CMatrix m = psi * psi.adjoint() / norm2;
    return DensityMatrix(std::move(m));
  }

  Index dim() const noexcept { return data_.rows(); }
  int num_qubits() const noexcept { return num_qubits_; }
  const CMatrix& matrix() const noexcept { return data_; }
  Complex operator()(Index i, Index j) const { return data_(i, j); }

 private:
  CMatrix data_;
  int num_qubits_ = 0;
};

inline double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline void check_positive(const DensityMatrix& rho) {
  const double lo = min_eigenvalue(rho);
  if (lo < -tolerance::kPositive)
    throw std::invalid_argument("density matrix has negative eigenvalue " +
                                std::to_string(lo));
}

inline DensityMatrix DensityMatrix::validated(CMatrix data) {
  DensityMatrix rho(std::move(data));
  check_positive(rho);
  return rho;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Matrix2c pauli_matrix(Axis a) {
  using namespace std::complex_literals;
  Matrix2c m;
  switch (a) {
    case Axis::x: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::y: m << 0.0, -1.0i, 1.0i, 0.0; break;
    case Axis::z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

struct PauliFactor {
  int qubit;
  Axis axis;
};

/// Compact Pauli string: P|c> = i^{n_y} (-1)^{popcount(c & z_mask)} |c ^ x_mask>.
class PauliString {
 public:
  PauliString(int num_qubits, std::span<const PauliFactor> factors)
      : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > kMaxQubits)
      throw std::invalid_argument("qubit count out of range");
    std::uint32_t seen = 0;
    for (const auto& f : factors) {
      if (f.qubit < 0 || f.qubit >= num_qubits)
        throw std::out_of_range("Pauli factor on qubit " + std::to_string(f.qubit) +
                                " outside a " + std::to_string(num_qubits) +
                                "-qubit register");
      const std::uint32_t m = detail::qubit_mask(num_qubits, f.qubit);
      if (seen & m)
        throw std::invalid_argument("duplicate qubit " + std::to_string(f.qubit) +
                                    " in Pauli string");
      seen |= m;
      factors_.push_back(f);
      if (f.axis != Axis::z) x_mask_ |= m;
      if (f.axis != Axis::x) z_mask_ |= m;
      if (f.axis == Axis::y) ++y_count_;
    }
  }

  PauliString(int num_qubits, std::initializer_list<PauliFactor> factors)
      : PauliString(num_qubits, std::span<const PauliFactor>(factors.begin(),
                                                             factors.size())) {}

  int num_qubits() const noexcept { return num_qubits_; }
  std::uint32_t x_mask() const noexcept { return x_mask_; }
  std::uint32_t z_mask() const noexcept { return z_mask_; }
  int y_count() const noexcept { return y_count_; }
  const std::vector<PauliFactor>& factors() const noexcept { return factors_; }

  /// Dense matrix, identity on unlisted qubits.
  CMatrix matrix() const {
    std::vector<Matrix2c> per_qubit(static_cast<std::size_t>(num_qubits_),
                                    Matrix2c::Identity());
    for (const auto& f : factors_) per_qubit[static_cast<std::size_t>(f.qubit)] = pauli_matrix(f.axis);
    CMatrix out = per_qubit[0];
    for (int q = 1; q < num_qubits_; ++q) out = kron(out, per_qubit[static_cast<std::size_t>(q)]);
    return out;
  }

 private:
  int num_qubits_;
  std::vector<PauliFactor> factors_;
  std::uint32_t x_mask_ = 0;
  std::uint32_t z_mask_ = 0;
  int y_count_ = 0;
};

inline QubitOperator pauli_string(int num_qubits, std::span<const PauliFactor> factors) {
  return QubitOperator(PauliString(num_qubits, factors).matrix(), true);
}

inline QubitOperator pauli_string(int num_qubits,
                                  std::initializer_list<PauliFactor> factors) {
  return pauli_string(num_qubits,
                      std::span<const PauliFactor>(factors.begin(), factors.size()));
}

/// Traces out qubit 0: the sum of the two diagonal blocks.
inline DensityMatrix partial_trace_first(const DensityMatrix& rho) {
  if (rho.dim() < 4)
    throw std::invalid_argument("partial trace needs at least two qubits");
  const Index h = rho.dim() / 2;
  const CMatrix& m = rho.matrix();
  return DensityMatrix(m.topLeftCorner(h, h) + m.bottomRightCorner(h, h));
}

/// exp(-i H t) through the eigendecomposition of the symmetrized generator.
inline UnitaryMatrix hermitian_expm(const QubitOperator& h, double t) {
  const CMatrix& m = h.matrix();
  if (detail::hermitian_deviation(m) > tolerance::kHermitian)
    throw std::invalid_argument("hermitian_expm: generator is not Hermitian");
  const CMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalError("hermitian_expm: eigendecomposition failed");
  const Eigen::VectorXd& lambda = es.eigenvalues();
  CVector phases(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i)
    phases(i) = std::polar(1.0, -lambda(i) * t);
  CMatrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  if (detail::unitary_deviation(u) > tolerance::kUnitary) {
    // Polar projection onto the nearest unitary.
    Eigen::JacobiSVD<CMatrix> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = svd.matrixU() * svd.matrixV().adjoint();
  }
  return UnitaryMatrix(std::move(u));
}

namespace detail {

inline double checked_real(Complex value, const char* what) {
  if (std::abs(value.imag()) > tolerance::kImaginary)
    throw NumericalError(std::string(what) + ": imaginary residue " +
                         std::to_string(value.imag()) + " exceeds tolerance");
  return value.real();
}

}  // namespace detail

/// Tr(O rho) for a Hermitian operator.
inline double expectation(const DensityMatrix& rho, const QubitOperator& op) {
  if (rho.dim() != op.dim())
    throw std::invalid_argument("expectation: dimension mismatch");
  if (!op.is_hermitian())
    throw std::invalid_argument("expectation: observable must be Hermitian");
  const Complex tr = op.matrix().transpose().cwiseProduct(rho.matrix()).sum();
  return detail::checked_real(tr, "expectation");
}

/// Tr(P rho) in O(dim) using the signed-permutation form of P.
inline double expectation(const DensityMatrix& rho, const PauliString& p) {
  if (rho.num_qubits() != p.num_qubits())
    throw std::invalid_argument("expectation: dimension mismatch");
  const CMatrix& m = rho.matrix();
  Complex acc{0.0, 0.0};
  for (Index c = 0; c < rho.dim(); ++c) {
    const auto cu = static_cast<std::uint32_t>(c);
    const Complex v = m(c, static_cast<Index>(cu ^ p.x_mask()));
    acc += (std::popcount(cu & p.z_mask()) & 1) ? -v : v;
  }
  static constexpr std::array<Complex, 4> kIPow{
      Complex{1, 0}, Complex{0, 1}, Complex{-1, 0}, Complex{0, -1}};
  acc *= kIPow[static_cast<std::size_t>(p.y_count() % 4)];
  return detail::checked_real(acc, "expectation");
}

/// (1/2) Tr|a - b| from the spectrum of the Hermitian difference.
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  const CMatrix diff = a.matrix() - b.matrix();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (diff + diff.adjoint()),
                                            Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qrc
