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

#include "qtraj/model.hpp"

#include <algorithm>
#include <sstream>

#include "qtraj/errors.hpp"

namespace qtraj {

namespace {

void check_operator(const ComplexMatrix& op, Eigen::Index dim, const std::string& what)
{
    if (op.rows() != dim || op.cols() != dim) {
        std::ostringstream os;
        os << what << ": expected " << dim << "x" << dim << ", got " << op.rows() << "x" << op.cols();
        throw InvalidArgument(os.str());
    }
    if (!all_finite(op)) {
        throw InvalidArgument(what + ": non-finite entry");
    }
}

const ComplexMatrix& validated_hamiltonian(const ComplexMatrix& h)
{
    if (h.rows() == 0 || h.rows() != h.cols()) {
        std::ostringstream os;
        os << "hamiltonian: expected a non-empty square matrix, got " << h.rows() << "x" << h.cols();
        throw InvalidArgument(os.str());
    }
    if (h.rows() > kMaxDim) {
        std::ostringstream os;
        os << "hamiltonian: dimension " << h.rows() << " exceeds the supported maximum " << kMaxDim;
        throw InvalidArgument(os.str());
    }
    if (!all_finite(h)) {
        throw InvalidArgument("hamiltonian: non-finite entry");
    }
    const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, h.cwiseAbs().maxCoeff())) {
        throw InvalidArgument("hamiltonian: not Hermitian");
    }
    return h;
}

ComplexMatrix identity(Eigen::Index dim)
{
    return ComplexMatrix::Identity(dim, dim);
}

} // namespace

ModelSpec::ModelSpec(const ComplexMatrix& hamiltonian,
                     std::vector<ComplexMatrix> diffusive_ops,
                     std::vector<ComplexMatrix> jump_ops)
    : hamiltonian_(validated_hamiltonian(hamiltonian)),
      diffusive_(std::move(diffusive_ops)),
      jumps_(std::move(jump_ops))
{
    if (diffusive_.empty() && jumps_.empty()) {
        throw InvalidArgument("model: at least one diffusive or jump channel is required");
    }
    for (std::size_t i = 0; i < diffusive_.size(); ++i) {
        check_operator(diffusive_[i], dim(), "diffusive[" + std::to_string(i) + "]");
    }
    for (std::size_t j = 0; j < jumps_.size(); ++j) {
        check_operator(jumps_[j], dim(), "jump[" + std::to_string(j) + "]");
    }
}

ModelSpec ModelSpec::conjugated(const ComplexMatrix& u) const
{
    auto conj = [&u](const ComplexMatrix& a) -> ComplexMatrix { return u * a * u.adjoint(); };
    std::vector<ComplexMatrix> l;
    std::vector<ComplexMatrix> c;
    std::transform(diffusive_.begin(), diffusive_.end(), std::back_inserter(l), conj);
    std::transform(jumps_.begin(), jumps_.end(), std::back_inserter(c), conj);
    return ModelSpec(hermitian_part(conj(hamiltonian_.matrix())), std::move(l), std::move(c));
}

ComplexMatrix Superoperator::apply(const ComplexMatrix& x) const
{
    return unvec(matrix * vec(x), dim);
}

ComplexMatrix drift_K(const ModelSpec& spec)
{
    const Eigen::Index k = spec.dim();
    ComplexMatrix dissipation = ComplexMatrix::Zero(k, k);
    for (const auto& l : spec.diffusive_ops()) {
        dissipation += l.adjoint() * l;
    }
    for (const auto& c : spec.jump_ops()) {
        dissipation += c.adjoint() * c;
    }
    return Complex(0.0, -1.0) * spec.hamiltonian().matrix() - 0.5 * dissipation;
}

ComplexMatrix apply_lindbladian(const ModelSpec& spec, const ComplexMatrix& rho)
{
    const ComplexMatrix& h = spec.hamiltonian().matrix();
    ComplexMatrix out = Complex(0.0, -1.0) * (h * rho - rho * h);
    auto dissipator = [&](const ComplexMatrix& op) {
        const ComplexMatrix opdag_op = op.adjoint() * op;
        out += op * rho * op.adjoint() - 0.5 * (opdag_op * rho + rho * opdag_op);
    };
    for (const auto& l : spec.diffusive_ops()) {
        dissipator(l);
    }
    for (const auto& c : spec.jump_ops()) {
        dissipator(c);
    }
    return out;
}

ComplexMatrix apply_adjoint_lindbladian(const ModelSpec& spec, const ComplexMatrix& a)
{
    const ComplexMatrix& h = spec.hamiltonian().matrix();
    ComplexMatrix out = Complex(0.0, 1.0) * (h * a - a * h);
    auto dissipator = [&](const ComplexMatrix& op) {
        const ComplexMatrix opdag_op = op.adjoint() * op;
        out += op.adjoint() * a * op - 0.5 * (opdag_op * a + a * opdag_op);
    };
    for (const auto& l : spec.diffusive_ops()) {
        dissipator(l);
    }
    for (const auto& c : spec.jump_ops()) {
        dissipator(c);
    }
    return out;
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b)
{
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Superoperator lindbladian(const ModelSpec& spec)
{
    const Eigen::Index k = spec.dim();
    const ComplexMatrix id = identity(k);
    const ComplexMatrix& h = spec.hamiltonian().matrix();

    // -i(H rho - rho H)  ->  -i(I kron H - H^T kron I)
    ComplexMatrix m = Complex(0.0, -1.0) * (kron(id, h) - kron(h.transpose(), id));
    auto dissipator = [&](const ComplexMatrix& op) {
        const ComplexMatrix opdag_op = op.adjoint() * op;
        m += kron(op.conjugate(), op) - 0.5 * kron(id, opdag_op) - 0.5 * kron(opdag_op.transpose(), id);
    };
    for (const auto& l : spec.diffusive_ops()) {
        dissipator(l);
    }
    for (const auto& c : spec.jump_ops()) {
        dissipator(c);
    }
    return {k, std::move(m)};
}

Superoperator adjoint_lindbladian(const ModelSpec& spec)
{
    const Eigen::Index k = spec.dim();
    const ComplexMatrix id = identity(k);
    const ComplexMatrix& h = spec.hamiltonian().matrix();

    ComplexMatrix m = Complex(0.0, 1.0) * (kron(id, h) - kron(h.transpose(), id));
    auto dissipator = [&](const ComplexMatrix& op) {
        const ComplexMatrix opdag_op = op.adjoint() * op;
        // op* A op  ->  (op^T kron op*)
        m += kron(op.transpose(), op.adjoint()) - 0.5 * kron(id, opdag_op) -
             0.5 * kron(opdag_op.transpose(), id);
    };
    for (const auto& l : spec.diffusive_ops()) {
        dissipator(l);
    }
    for (const auto& c : spec.jump_ops()) {
        dissipator(c);
    }
    return {k, std::move(m)};
}

DensityMatrix evolve_master(const ModelSpec& spec, const DensityMatrix& rho, double t)
{
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("evolve_master: time must be finite and non-negative");
    }
    if (rho.dim() != spec.dim()) {
        throw InvalidArgument("evolve_master: state dimension does not match the model");
    }
    if (t == 0.0) {
        return rho;
    }
    const Superoperator gen = lindbladian(spec);
    const ComplexMatrix propagator = expm(t * gen.matrix);
    const HermitianMatrix evolved(unvec(propagator * vec(rho.matrix()), spec.dim()));
    DensityMatrix cleaned = project_to_density(evolved);
    const double drift = (cleaned.matrix() - evolved.matrix()).cwiseAbs().maxCoeff();
    if (drift > 1e-8) {
        std::ostringstream os;
        os << "evolve_master: result left the state space by " << drift;
        throw NumericalFailure(os.str());
    }
    return cleaned;
}

} // namespace qtraj
