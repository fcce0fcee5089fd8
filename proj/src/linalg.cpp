// Copyright 2026 The qtraj Authors
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

#include "qtraj/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtraj/errors.hpp"

namespace qtraj {

namespace {

void require_square_finite(const ComplexMatrix& a, const char* what)
{
    if (a.rows() == 0 || a.rows() != a.cols()) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << a.rows() << "x" << a.cols();
        throw InvalidArgument(os.str());
    }
    if (!all_finite(a)) {
        throw InvalidArgument(std::string(what) + ": non-finite entry");
    }
}

ComplexMatrix from_spectrum(const ComplexMatrix& vectors, const RealVector& values)
{
    return vectors * values.asDiagonal() * vectors.adjoint();
}

} // namespace

HermitianMatrix::HermitianMatrix(const ComplexMatrix& a)
{
    require_square_finite(a, "HermitianMatrix");
    m_ = hermitian_part(a);
}

DensityMatrix::DensityMatrix(const ComplexMatrix& a) : HermitianMatrix(a)
{
    const double tr = trace(m_).real();
    if (std::abs(tr - 1.0) > kEigenTolerance) {
        std::ostringstream os;
        os << "DensityMatrix: trace " << tr << " differs from 1";
        throw InvalidArgument(os.str());
    }
    const auto eig = eig_hermitian(*this);
    if (eig.values(0) < -kPsdClip) {
        std::ostringstream os;
        os << "DensityMatrix: negative eigenvalue " << eig.values(0);
        throw InvalidArgument(os.str());
    }
}

DensityMatrix DensityMatrix::assume_valid(ComplexMatrix a)
{
    return DensityMatrix(hermitian_part(a), Trusted{});
}

DensityMatrix DensityMatrix::maximally_mixed(Eigen::Index dim)
{
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim), Trusted{});
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi)
{
    const double norm = psi.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw InvalidArgument("DensityMatrix::pure: vector must be finite and nonzero");
    }
    const ComplexVector unit = psi / norm;
    return DensityMatrix(unit * unit.adjoint(), Trusted{});
}

EigenDecomposition eig_hermitian(const HermitianMatrix& a)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(a.matrix());
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eig_hermitian: eigen-solver did not converge on\n" << a.matrix();
        throw NumericalFailure(os.str());
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

HermitianMatrix herm_sqrt(const HermitianMatrix& a)
{
    auto eig = eig_hermitian(a);
    if (eig.values(0) < -1e-8) {
        std::ostringstream os;
        os << "herm_sqrt: eigenvalue " << eig.values(0) << " is not PSD within roundoff";
        throw NotPsdError(os.str());
    }
    // Eigenvalues at the solver's resolution are indistinguishable from zero;
    // their square roots (~1e-8) would otherwise dominate the error.
    const double floor = 8.0 * static_cast<double>(a.dim()) * std::numeric_limits<double>::epsilon() *
                         std::max(eig.values.maxCoeff(), 0.0);
    const RealVector roots = eig.values.unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
    return HermitianMatrix(from_spectrum(eig.vectors, roots));
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma)
{
    if (rho.dim() != sigma.dim()) {
        throw InvalidArgument("fidelity: dimension mismatch");
    }
    // tr sqrt(sqrt(rho) sigma sqrt(rho)) is the nuclear norm of sqrt(rho) sqrt(sigma).
    // Taking singular values directly avoids square roots of roundoff-level
    // eigenvalues, which would otherwise inject errors of order 1e-8.
    const ComplexMatrix product = herm_sqrt(rho).matrix() * herm_sqrt(sigma).matrix();
    const double s = Eigen::JacobiSVD<ComplexMatrix>(product).singularValues().sum();
    return std::clamp(s * s, 0.0, 1.0);
}

ComplexMatrix expm(const ComplexMatrix& a)
{
    if (a.rows() != a.cols()) {
        throw InvalidArgument("expm: matrix must be square");
    }
    if (!all_finite(a)) {
        throw NumericalFailure("expm: non-finite input");
    }
    const Eigen::Index n = a.rows();
    if (n == 0) {
        return a;
    }

    // Higham (2005) degree-13 coefficients and theta_13.
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    const ComplexMatrix x = a / std::ldexp(1.0, squarings);
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);

    const ComplexMatrix x2 = x * x;
    const ComplexMatrix x4 = x2 * x2;
    const ComplexMatrix x6 = x4 * x2;

    const ComplexMatrix u_inner = b[13] * x6 + b[11] * x4 + b[9] * x2;
    const ComplexMatrix u = x * (x6 * u_inner + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const ComplexMatrix v_inner = b[12] * x6 + b[10] * x4 + b[8] * x2;
    const ComplexMatrix v = x6 * v_inner + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    ComplexMatrix result = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) {
        result = result * result;
    }
    if (!all_finite(result)) {
        throw NumericalFailure("expm: overflow");
    }
    return result;
}

DensityMatrix project_to_density(const HermitianMatrix& a)
{
    const double tr = trace(a.matrix()).real();
    if (!(tr > 1e-12)) {
        throw DegenerateStateError("project_to_density: trace is not positive");
    }
    const auto eig = eig_hermitian(a);
    if (eig.values(0) >= -kPsdClip && std::abs(tr - 1.0) <= kEigenTolerance) {
        return DensityMatrix::assume_valid(a.matrix());
    }
    const RealVector clipped = eig.values.cwiseMax(0.0);
    const double mass = clipped.sum();
    if (!(mass > 1e-12)) {
        throw DegenerateStateError("project_to_density: no positive spectral weight");
    }
    return DensityMatrix::assume_valid(from_spectrum(eig.vectors, clipped / mass));
}

KernelInclusion kernel_inclusion(const DensityMatrix& rho_hat, const DensityMatrix& rho, double tol)
{
    if (rho_hat.dim() != rho.dim()) {
        throw InvalidArgument("kernel_inclusion: dimension mismatch");
    }
    const auto eig = eig_hermitian(rho_hat);
    KernelInclusion out;
    out.holds = true;

    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        const ComplexVector v = eig.vectors.col(i);
        if (eig.values(i) <= tol) {
            const double weight = (v.adjoint() * rho.matrix() * v)(0, 0).real();
            if (weight > tol && out.holds) {
                out.holds = false;
                out.witness = v;
            }
        } else {
            support.push_back(i);
        }
    }

    if (!support.empty()) {
        ComplexMatrix scaled(rho.dim(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t j = 0; j < support.size(); ++j) {
            scaled.col(static_cast<Eigen::Index>(j)) =
                eig.vectors.col(support[j]) / std::sqrt(eig.values(support[j]));
        }
        const HermitianMatrix compressed(scaled.adjoint() * rho.matrix() * scaled);
        out.c = eig_hermitian(compressed).values.maxCoeff();
    }
    return out;
}

Complex trace(const ComplexMatrix& a)
{
    return a.trace();
}

ComplexMatrix dagger(const ComplexMatrix& a)
{
    return a.adjoint();
}

ComplexMatrix hermitian_part(const ComplexMatrix& a)
{
    return 0.5 * (a + a.adjoint());
}

bool all_finite(const ComplexMatrix& a)
{
    return a.allFinite();
}

double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b)
{
    const auto eig = eig_hermitian(HermitianMatrix(a - b));
    return 0.5 * eig.values.cwiseAbs().sum();
}

ComplexMatrix projector_onto(const ComplexMatrix& columns)
{
    return columns * columns.adjoint();
}

ComplexVector vec(const ComplexMatrix& a)
{
    return Eigen::Map<const ComplexVector>(a.data(), a.size());
}

ComplexMatrix unvec(const ComplexVector& v, Eigen::Index dim)
{
    if (v.size() != dim * dim) {
        throw InvalidArgument("unvec: size mismatch");
    }
    return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

namespace pauli {

ComplexMatrix identity()
{
    return ComplexMatrix::Identity(2, 2);
}

ComplexMatrix x()
{
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

ComplexMatrix y()
{
    ComplexMatrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    return m;
}

ComplexMatrix z()
{
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

ComplexMatrix lowering()
{
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 0.0, 0.0;
    return m;
}

ComplexMatrix raising()
{
    return lowering().adjoint();
}

} // namespace pauli

} // namespace qtraj
