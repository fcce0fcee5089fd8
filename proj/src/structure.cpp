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

#include "qtraj/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qtraj/errors.hpp"
#include "qtraj/rng.hpp"
#include "qtraj/sde.hpp"

namespace qtraj {

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Holds:
        return "holds";
    case Verdict::Fails:
        return "fails";
    case Verdict::Unknown:
        break;
    }
    return "unknown";
}

namespace {

struct NullSpace {
    ComplexMatrix right;
    ComplexMatrix left;
    double gap = std::numeric_limits<double>::infinity();
    double threshold = 0.0;
    bool ambiguous = false;
};

NullSpace null_space(const ComplexMatrix& a, double rel_threshold)
{
    Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RealVector& s = svd.singularValues();
    NullSpace ns;
    ns.threshold = rel_threshold * std::max(1.0, s.size() > 0 ? s(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < s.size() && s(rank) > ns.threshold)
        ++rank;
    ns.right = svd.matrixV().rightCols(a.cols() - rank);
    ns.left = svd.matrixU().rightCols(a.rows() - rank);
    if (rank > 0)
        ns.gap = s(rank - 1);
    ns.ambiguous = ns.right.cols() > 0 && ns.gap < 10.0 * ns.threshold;
    return ns;
}

// Real coordinates of a Hermitian matrix: real and imaginary parts of vec(A).
Eigen::VectorXd real_coords(const ComplexMatrix& a)
{
    const ComplexVector v = vec(a);
    Eigen::VectorXd r(2 * v.size());
    r << v.real(), v.imag();
    return r;
}

ComplexMatrix from_real_coords(const Eigen::VectorXd& r, Eigen::Index dim)
{
    const Eigen::Index n = r.size() / 2;
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = Complex(r(i), r(n + i));
    return hermitian_part(unvec(v, dim));
}

// Hilbert-Schmidt orthonormal Hermitian basis of the span of the given
// vectorized matrices, assuming the span is closed under adjoints.
std::vector<HermitianMatrix> hermitize(const ComplexMatrix& columns, Eigen::Index dim)
{
    const Eigen::Index r = columns.cols();
    std::vector<HermitianMatrix> out;
    if (r == 0)
        return out;
    Eigen::MatrixXd coords(2 * dim * dim, 2 * r);
    for (Eigen::Index c = 0; c < r; ++c) {
        const ComplexMatrix x = unvec(columns.col(c), dim);
        const ComplexMatrix xd = x.adjoint();
        coords.col(2 * c) = real_coords((x + xd) / 2.0);
        coords.col(2 * c + 1) = real_coords((x - xd) / Complex(0.0, 2.0));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(coords, Eigen::ComputeThinU);
    const RealVector& s = svd.singularValues();
    const double cut = 1e-8 * std::max(1.0, s(0));
    for (Eigen::Index c = 0; c < std::min<Eigen::Index>(r, s.size()); ++c) {
        if (s(c) <= cut)
            break;
        ComplexMatrix a = from_real_coords(svd.matrixU().col(c), dim);
        // Deterministic sign: positive trace, else positive largest diagonal.
        double t = trace(a).real();
        if (std::abs(t) < 1e-10) {
            Eigen::Index i = 0;
            a.diagonal().real().cwiseAbs().maxCoeff(&i);
            t = a(i, i).real();
        }
        if (t < 0.0)
            a = -a;
        out.emplace_back(a);
    }
    return out;
}

FixedPoints kernel_of(const ComplexMatrix& superop, Eigen::Index dim, double threshold)
{
    const NullSpace ns = null_space(superop, threshold);
    FixedPoints fp;
    fp.basis = hermitize(ns.right, dim);
    fp.gap_singular_value = ns.gap;
    fp.threshold = ns.threshold;
    fp.ambiguous = ns.ambiguous;
    return fp;
}

double hs_inner(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a.adjoint() * b).trace().real();
}

// Project x onto the span of an HS-orthonormal Hermitian basis.
ComplexMatrix project_onto(const std::vector<HermitianMatrix>& basis, const ComplexMatrix& x)
{
    ComplexMatrix out = ComplexMatrix::Zero(x.rows(), x.cols());
    for (const auto& b : basis)
        out += hs_inner(b.matrix(), x) * b.matrix();
    return out;
}

struct Leaf {
    ComplexMatrix projector;
    ComplexMatrix state;
    double center = 0.0;
};

class EnclosureSplitter {
public:
    EnclosureSplitter(const ComplexMatrix& superop, Eigen::Index dim, double threshold)
        : superop_(superop), dim_(dim), threshold_(threshold)
    {
    }

    void split(const ComplexMatrix& v)
    {
        const Eigen::Index d = v.cols();
        const ComplexMatrix restricted = superop_ * kron(v.conjugate(), v);
        const NullSpace ns = null_space(restricted, threshold_);
        const std::vector<HermitianMatrix> basis = hermitize(ns.right, d);
        if (basis.empty())
            throw DecompositionError("an invariant subspace of dimension " + std::to_string(d) +
                                     " carries no invariant state");
        if (basis.size() == 1) {
            add_leaf(v, basis.front().matrix());
            return;
        }
        const ComplexMatrix t = traceless_element(v, basis);
        const EigenDecomposition eig = eig_hermitian(HermitianMatrix(t));
        const double tol = 1e-7 * eig.values.cwiseAbs().maxCoeff();
        std::vector<Eigen::Index> pos, neg, zero;
        for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
            if (eig.values(i) > tol)
                pos.push_back(i);
            else if (eig.values(i) < -tol)
                neg.push_back(i);
            else
                zero.push_back(i);
        }
        for (const auto* part : {&pos, &neg, &zero}) {
            if (part->empty())
                continue;
            ComplexMatrix u(d, static_cast<Eigen::Index>(part->size()));
            for (std::size_t c = 0; c < part->size(); ++c)
                u.col(static_cast<Eigen::Index>(c)) = eig.vectors.col((*part)[c]);
            split(v * u);
        }
    }

    std::vector<Leaf>& leaves() { return leaves_; }

private:
    // A nonzero traceless element of the restricted fixed-point space. Its
    // positive and negative parts are invariant with orthogonal supports.
    // Candidates are tried in a fixed order so the splitting is canonical:
    // compressed computational-basis projectors, then the basis itself.
    ComplexMatrix traceless_element(const ComplexMatrix& v, const std::vector<HermitianMatrix>& basis) const
    {
        const Eigen::Index d = v.cols();
        const ComplexMatrix q = project_onto(basis, ComplexMatrix::Identity(d, d));
        const double tq = trace(q).real();
        if (!(tq > 1e-12))
            throw DecompositionError("restricted fixed-point space contains no faithful element");
        auto detrace = [&](const ComplexMatrix& p) -> ComplexMatrix { return p - (trace(p).real() / tq) * q; };

        std::vector<ComplexMatrix> candidates;
        for (Eigen::Index i = 0; i < dim_; ++i) {
            const ComplexVector row = v.row(i).adjoint();
            candidates.push_back(project_onto(basis, row * row.adjoint()));
        }
        for (const auto& b : basis)
            candidates.push_back(b.matrix());
        for (const auto& c : candidates) {
            ComplexMatrix t = detrace(c);
            if (t.norm() > 1e-6 * std::max(1.0, c.norm()))
                return hermitian_part(t);
        }
        throw DecompositionError("could not split a fixed-point space of dimension " + std::to_string(basis.size()));
    }

    void add_leaf(const ComplexMatrix& v, const ComplexMatrix& y)
    {
        ComplexMatrix state = v * y * v.adjoint();
        const double tr = trace(state).real();
        state /= tr;
        const EigenDecomposition eig = eig_hermitian(HermitianMatrix(y / tr));
        if (eig.values(0) <= 1e-9 * eig.values.maxCoeff())
            throw DecompositionError("invariant state is not faithful on its enclosure");
        Leaf leaf;
        leaf.projector = projector_onto(v);
        leaf.state = hermitian_part(state);
        const double rank = trace(leaf.projector).real();
        for (Eigen::Index i = 0; i < dim_; ++i)
            leaf.center += static_cast<double>(i) * leaf.projector(i, i).real();
        leaf.center /= rank;
        leaves_.push_back(std::move(leaf));
    }

    const ComplexMatrix& superop_;
    Eigen::Index dim_;
    double threshold_;
    std::vector<Leaf> leaves_;
};

std::vector<ComplexMatrix> hermitian_family(const ModelSpec& spec)
{
    std::vector<ComplexMatrix> family;
    for (const auto& l : spec.diffusive_ops())
        family.push_back(hermitian_part(l + l.adjoint()));
    for (const auto& c : spec.jump_ops())
        family.push_back(hermitian_part(c.adjoint() * c));
    return family;
}

// Span of every S*S reachable by the propagator, as a basis. It is the
// smallest space containing I and closed under the first-order maps of one
// Euler step: the drift X -> K'*X + XK' + sum L*XL, the diffusive parts
// X -> L*X + XL and the jumps X -> C*XC, with K' = K + m/2 I.
std::vector<ComplexMatrix> reachable_family(const ModelSpec& spec)
{
    const Eigen::Index k = spec.dim();
    const ComplexMatrix id = ComplexMatrix::Identity(k, k);
    const ComplexMatrix kp = drift_K(spec) + 0.5 * static_cast<double>(spec.num_jump()) * id;
    auto images = [&](const ComplexMatrix& x) {
        std::vector<ComplexMatrix> out;
        ComplexMatrix g = kp.adjoint() * x + x * kp;
        for (const auto& l : spec.diffusive_ops()) {
            g += l.adjoint() * x * l;
            out.push_back(l.adjoint() * x + x * l);
        }
        out.push_back(g);
        for (const auto& c : spec.jump_ops())
            out.push_back(c.adjoint() * x * c);
        return out;
    };

    std::vector<ComplexMatrix> basis;
    std::vector<ComplexVector> flat;
    auto add = [&](ComplexMatrix x) {
        x = hermitian_part(x);
        ComplexVector v = vec(x);
        const double scale = v.norm();
        if (!(scale > 1e-14))
            return false;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : flat)
                v -= b * b.dot(v);
        if (v.norm() <= 1e-10 * scale)
            return false;
        v.normalize();
        flat.push_back(v);
        basis.push_back(hermitian_part(unvec(v, k)));
        return true;
    };

    add(id);
    for (std::size_t next = 0; next < basis.size() && basis.size() < static_cast<std::size_t>(k * k); ++next) {
        for (const auto& y : images(basis[next]))
            add(y);
    }
    return basis;
}

// Largest deviation of the compressions W* A W from scalars.
double compression_residual(const std::vector<ComplexMatrix>& family, const ComplexMatrix& w)
{
    const Eigen::Index d = w.cols();
    double worst = 0.0;
    for (const auto& a : family) {
        const ComplexMatrix c = w.adjoint() * a * w;
        const Complex mean = trace(c) / static_cast<double>(d);
        const double scale = std::max(1.0, a.norm());
        worst = std::max(worst, (c - mean * ComplexMatrix::Identity(d, d)).norm() / scale);
    }
    return worst;
}

// Intersections of eigenspaces across the family, kept when of rank >= 2.
std::optional<ComplexMatrix> joint_eigenspace(const std::vector<ComplexMatrix>& family, Eigen::Index k)
{
    std::vector<ComplexMatrix> spaces{ComplexMatrix::Identity(k, k)};
    for (const auto& a : family) {
        const EigenDecomposition eig = eig_hermitian(HermitianMatrix(a));
        const double scale = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
        std::vector<double> clusters;
        for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
            if (clusters.empty() || eig.values(i) - clusters.back() > 1e-8 * scale)
                clusters.push_back(eig.values(i));
        }
        std::vector<ComplexMatrix> next;
        for (const auto& w : spaces) {
            for (double lambda : clusters) {
                const ComplexMatrix shifted = (a - lambda * ComplexMatrix::Identity(k, k)) * w;
                const NullSpace ns = null_space(shifted, 1e-8 * scale);
                if (ns.right.cols() >= 2) {
                    const ComplexMatrix sub = w * ns.right;
                    Eigen::HouseholderQR<ComplexMatrix> qr(sub);
                    next.push_back(qr.householderQ() * ComplexMatrix::Identity(k, sub.cols()));
                }
            }
        }
        spaces = std::move(next);
        if (spaces.empty())
            return std::nullopt;
    }
    return spaces.front();
}

// Levenberg-Marquardt search for a 2-frame on which every family member
// compresses to a scalar. Returns a verified witness or nothing.
class CompressionSearch {
public:
    CompressionSearch(const std::vector<ComplexMatrix>& family, Eigen::Index k) : k_(k)
    {
        for (const auto& a : family) {
            const ComplexMatrix centered = a - (trace(a) / static_cast<double>(k)) * ComplexMatrix::Identity(k, k);
            const double n = centered.norm();
            if (n > 1e-12)
                family_.push_back(centered / n);
        }
    }

    std::optional<ComplexMatrix> run(int restarts, std::uint64_t seed, double tol) const
    {
        if (family_.empty())
            return ComplexMatrix(ComplexMatrix::Identity(k_, 2));
        for (int r = 0; r < restarts; ++r) {
            CounterRng rng(seed, static_cast<std::uint64_t>(r));
            Eigen::VectorXd x(4 * k_);
            for (Eigen::Index i = 0; i < x.size(); ++i)
                x(i) = rng.normal();
            x = minimize(x);
            const ComplexMatrix w = frame(x);
            if (compression_residual(family_, w) <= tol)
                return w;
        }
        return std::nullopt;
    }

private:
    ComplexMatrix frame(const Eigen::VectorXd& x) const
    {
        ComplexMatrix f(k_, 2);
        for (Eigen::Index c = 0; c < 2; ++c)
            for (Eigen::Index i = 0; i < k_; ++i)
                f(i, c) = Complex(x(c * k_ + i), x(2 * k_ + c * k_ + i));
        f.col(0).normalize();
        f.col(1) -= f.col(0) * f.col(0).dot(f.col(1));
        f.col(1).normalize();
        return f;
    }

    Eigen::VectorXd residuals(const Eigen::VectorXd& x) const
    {
        const ComplexMatrix w = frame(x);
        Eigen::VectorXd r(3 * static_cast<Eigen::Index>(family_.size()));
        for (std::size_t i = 0; i < family_.size(); ++i) {
            const ComplexMatrix c = w.adjoint() * family_[i] * w;
            const auto o = static_cast<Eigen::Index>(3 * i);
            r(o) = c(0, 0).real() - c(1, 1).real();
            r(o + 1) = c(0, 1).real();
            r(o + 2) = c(0, 1).imag();
        }
        return r;
    }

    Eigen::VectorXd minimize(Eigen::VectorXd x) const
    {
        const double h = 1e-7;
        double mu = 1e-3;
        Eigen::VectorXd r = residuals(x);
        for (int iter = 0; iter < 300 && r.norm() > 1e-14; ++iter) {
            Eigen::MatrixXd jac(r.size(), x.size());
            for (Eigen::Index j = 0; j < x.size(); ++j) {
                Eigen::VectorXd xp = x, xm = x;
                xp(j) += h;
                xm(j) -= h;
                jac.col(j) = (residuals(xp) - residuals(xm)) / (2.0 * h);
            }
            const Eigen::MatrixXd jtj = jac.transpose() * jac;
            const Eigen::VectorXd g = jac.transpose() * r;
            bool improved = false;
            for (int tries = 0; tries < 20; ++tries) {
                Eigen::MatrixXd lhs = jtj;
                lhs.diagonal().array() += mu;
                const Eigen::VectorXd delta = lhs.ldlt().solve(-g);
                const Eigen::VectorXd trial = x + delta;
                const Eigen::VectorXd rt = residuals(trial);
                if (rt.norm() < r.norm()) {
                    x = trial;
                    r = rt;
                    mu = std::max(mu / 3.0, 1e-12);
                    improved = true;
                    break;
                }
                mu *= 4.0;
            }
            if (!improved)
                break;
        }
        return x;
    }

    Eigen::Index k_;
    std::vector<ComplexMatrix> family_;
};

bool is_scalar(const ComplexMatrix& a, double tol)
{
    const Eigen::Index k = a.rows();
    const Complex mean = trace(a) / static_cast<double>(k);
    return (a - mean * ComplexMatrix::Identity(k, k)).norm() <= tol * std::max(1.0, a.norm());
}

// Largest second eigenvalue of M_T over trajectories started from I/k.
std::optional<double> monte_carlo_second_eigenvalue(const ModelSpec& spec, const PurificationOptions& opts)
{
    if (opts.mc_trajectories <= 0)
        return std::nullopt;
    double max_rate = 0.0;
    for (const auto& c : spec.jump_ops())
        max_rate = std::max(max_rate, eig_hermitian(HermitianMatrix(c.adjoint() * c)).values.maxCoeff());
    SimConfig cfg;
    cfg.dt = opts.mc_max_dt;
    if (max_rate > 0.0)
        cfg.dt = std::min(cfg.dt, 0.09 / max_rate);
    cfg.horizon = opts.mc_horizon;
    cfg.seed = opts.seed;
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(spec.dim());
    try {
        Integrator integrator(spec, cfg);
        const std::int64_t n = cfg.num_steps();
        double worst = 0.0;
        for (int t = 0; t < opts.mc_trajectories; ++t) {
            CounterRng rng(cfg.seed, static_cast<std::uint64_t>(t));
            PairState state = initial_pair_state(spec, mixed, mixed);
            for (std::int64_t s = 0; s < n; ++s)
                integrator.advance(state, rng);
            const EigenDecomposition eig = eig_hermitian(derive_M(state));
            worst = std::max(worst, eig.values(eig.values.size() - 2));
        }
        return worst;
    } catch (const Error&) {
        return std::nullopt;
    }
}

} // namespace

FixedPoints fixed_points(const ModelSpec& spec, double threshold)
{
    return kernel_of(lindbladian(spec).matrix, spec.dim(), threshold);
}

FixedPoints dual_fixed_points(const ModelSpec& spec, double threshold)
{
    return kernel_of(adjoint_lindbladian(spec).matrix, spec.dim(), threshold);
}

DecayingSubspace decaying_subspace(const ModelSpec& spec, double threshold)
{
    const Eigen::Index k = spec.dim();
    const NullSpace ns = null_space(lindbladian(spec).matrix, threshold);
    if (ns.right.cols() == 0)
        throw DecompositionError("the Lindbladian has no numerical kernel");
    // Spectral projection onto the zero eigenspace from right and left null
    // vectors; this is the Cesaro limit of the semigroup.
    const ComplexMatrix overlap = ns.left.adjoint() * ns.right;
    Eigen::JacobiSVD<ComplexMatrix> osvd(overlap);
    const RealVector& os = osvd.singularValues();
    if (!(os(os.size() - 1) > 1e-10 * os(0))) {
        std::ostringstream msg;
        msg << "zero eigenvalue is not semisimple (overlap condition " << os(0) / os(os.size() - 1) << ")";
        throw DecompositionError(msg.str());
    }
    const ComplexVector id = vec(ComplexMatrix::Identity(k, k) / static_cast<double>(k));
    const ComplexVector coeffs = overlap.partialPivLu().solve(ns.left.adjoint() * id);
    ComplexMatrix mean = hermitian_part(unvec(ns.right * coeffs, k));
    mean /= trace(mean).real();

    const EigenDecomposition eig = eig_hermitian(HermitianMatrix(mean));
    const double cut = 1e-8 * std::max(1e-300, eig.values.maxCoeff());
    std::vector<Eigen::Index> kernel;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        if (eig.values(i) <= cut)
            kernel.push_back(i);
    }
    DecayingSubspace out;
    out.dim = static_cast<Eigen::Index>(kernel.size());
    out.projector = ComplexMatrix::Zero(k, k);
    for (Eigen::Index i : kernel)
        out.projector += eig.vectors.col(i) * eig.vectors.col(i).adjoint();
    out.mean_state = mean;
    out.peripheral = !check_spectral(spec);
    return out;
}

Enclosures minimal_enclosures(const ModelSpec& spec, double threshold)
{
    const DecayingSubspace dsub = decaying_subspace(spec, threshold);
    if (dsub.dim > 0)
        throw UnsupportedModel("decaying subspace has dimension " + std::to_string(dsub.dim) +
                               "; only models whose invariant states cover the whole space are supported");
    const Eigen::Index k = spec.dim();
    const ComplexMatrix superop = lindbladian(spec).matrix;
    EnclosureSplitter splitter(superop, k, threshold);
    splitter.split(ComplexMatrix::Identity(k, k));

    std::vector<Leaf>& leaves = splitter.leaves();
    std::stable_sort(leaves.begin(), leaves.end(), [](const Leaf& a, const Leaf& b) { return a.center < b.center; });

    Enclosures out;
    ComplexMatrix total = ComplexMatrix::Zero(k, k);
    for (auto& leaf : leaves) {
        total += leaf.projector;
        out.projectors.push_back(leaf.projector);
        out.states.push_back(project_to_density(HermitianMatrix(leaf.state)));
    }
    if ((total - ComplexMatrix::Identity(k, k)).norm() > 1e-8)
        throw DecompositionError("enclosure projectors do not resolve the identity");

    const std::size_t kernel_dim = fixed_points(spec, threshold).basis.size();
    if (kernel_dim > out.states.size()) {
        out.unique = false;
        out.warnings.push_back("minimal decomposition is not unique: fixed-point space has dimension " +
                               std::to_string(kernel_dim) + " but only " + std::to_string(out.states.size()) +
                               " orthogonal minimal states were split off; a canonical splitting was chosen");
    }
    return out;
}

DualProjectors dual_projectors(const ModelSpec& spec, const Enclosures& enclosures, double threshold)
{
    const Eigen::Index k = spec.dim();
    const std::vector<HermitianMatrix> basis = dual_fixed_points(spec, threshold).basis;
    const auto K = static_cast<Eigen::Index>(enclosures.states.size());
    const auto r = static_cast<Eigen::Index>(basis.size());
    if (K == 0)
        throw InvalidArgument("no enclosures given");

    Eigen::MatrixXd g(K, r);
    for (Eigen::Index i = 0; i < K; ++i)
        for (Eigen::Index l = 0; l < r; ++l)
            g(i, l) = (basis[static_cast<std::size_t>(l)].matrix() * enclosures.states[static_cast<std::size_t>(i)].matrix())
                          .trace()
                          .real();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    const double smin = s.size() < K ? 0.0 : s(K - 1);
    DualProjectors out;
    out.condition = smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    if (!(smin > 1e-12 * s(0))) {
        std::ostringstream msg;
        msg << "biorthogonal system is singular (condition number " << out.condition << ")";
        throw DecompositionError(msg.str());
    }
    // Minimum-norm solution of the biorthogonality conditions.
    const Eigen::MatrixXd coeffs = svd.solve(Eigen::MatrixXd::Identity(K, K));

    ComplexMatrix total = ComplexMatrix::Zero(k, k);
    for (Eigen::Index i = 0; i < K; ++i) {
        ComplexMatrix m = ComplexMatrix::Zero(k, k);
        for (Eigen::Index l = 0; l < r; ++l)
            m += coeffs(l, i) * basis[static_cast<std::size_t>(l)].matrix();
        out.idempotency_residual = std::max(out.idempotency_residual, (m * m - m).norm());
        total += m;
        out.projectors.emplace_back(m);
    }
    out.completeness_residual = (total - ComplexMatrix::Identity(k, k)).norm();
    if (out.completeness_residual > 1e-8) {
        std::ostringstream msg;
        msg << "dual projectors do not sum to the identity (residual " << out.completeness_residual << ")";
        out.warnings.push_back(msg.str());
    }
    if (out.idempotency_residual > 1e-7) {
        std::ostringstream msg;
        msg << "dual elements are not orthogonal projectors (residual " << out.idempotency_residual << ")";
        out.warnings.push_back(msg.str());
    }
    return out;
}

std::vector<Complex> liouvillian_spectrum(const ModelSpec& spec)
{
    Eigen::ComplexEigenSolver<ComplexMatrix> solver(lindbladian(spec).matrix, false);
    if (solver.info() != Eigen::Success)
        throw NumericalFailure("eigenvalue solver failed on the Lindbladian");
    std::vector<Complex> values(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    std::sort(values.begin(), values.end(), [](Complex a, Complex b) {
        if (a.real() != b.real())
            return a.real() > b.real();
        return a.imag() > b.imag();
    });
    return values;
}

bool check_spectral(const ModelSpec& spec, double tol)
{
    for (Complex v : liouvillian_spectrum(spec)) {
        if (std::abs(v.real()) <= tol && std::abs(v.imag()) > tol)
            return false;
    }
    return true;
}

Identifiability check_identifiability(const ModelSpec& spec, const std::vector<DensityMatrix>& states, double tol)
{
    Identifiability out;
    for (const auto& rho : states) {
        std::vector<double> row;
        for (const auto& l : spec.diffusive_ops())
            row.push_back(((l + l.adjoint()) * rho.matrix()).trace().real());
        for (const auto& c : spec.jump_ops())
            row.push_back((c * rho.matrix() * c.adjoint()).trace().real());
        out.table.push_back(std::move(row));
    }
    for (std::size_t u = 0; u < states.size() && out.identifiable; ++u) {
        for (std::size_t v = u + 1; v < states.size(); ++v) {
            bool separated = false;
            for (std::size_t c = 0; c < out.table[u].size(); ++c)
                separated = separated || std::abs(out.table[u][c] - out.table[v][c]) > tol;
            if (!separated) {
                out.identifiable = false;
                out.witness = std::make_pair(u, v);
                break;
            }
        }
    }
    return out;
}

Purification check_purification(const ModelSpec& spec, const PurificationOptions& opts)
{
    const Eigen::Index k = spec.dim();
    const std::vector<ComplexMatrix> family = hermitian_family(spec);
    Purification out;
    if (k == 1) {
        out.verdict = Verdict::Holds;
        out.method = "one-dimensional";
        return out;
    }
    if (k == 2) {
        out.method = "qubit criterion";
        const bool all_scalar = std::all_of(family.begin(), family.end(),
                                            [&](const ComplexMatrix& a) { return is_scalar(a, opts.tol); });
        out.verdict = all_scalar ? Verdict::Fails : Verdict::Holds;
        if (all_scalar)
            out.witness = ComplexMatrix::Identity(2, 2);
        return out;
    }

    out.method = "compression search and Monte Carlo";
    const std::vector<ComplexMatrix> reachable = reachable_family(spec);
    std::optional<ComplexMatrix> witness;
    // When every Hermitian matrix is reachable no rank >= 2 compression is scalar.
    if (static_cast<Eigen::Index>(reachable.size()) < k * k) {
        witness = joint_eigenspace(reachable, k);
        if (!witness)
            witness = CompressionSearch(reachable, k).run(opts.search_restarts, opts.seed, 1e-8);
        if (witness && compression_residual(reachable, *witness) > 1e-8)
            witness.reset();
    }
    out.witness = witness;
    out.mc_second_eigenvalue = monte_carlo_second_eigenvalue(spec, opts);
    const bool mc_holds = out.mc_second_eigenvalue && *out.mc_second_eigenvalue < opts.mc_rank_one_tol;
    const bool mc_fails = out.mc_second_eigenvalue && !mc_holds;
    if (witness && mc_fails)
        out.verdict = Verdict::Fails;
    else if (!witness && mc_holds)
        out.verdict = Verdict::Holds;
    else
        out.verdict = Verdict::Unknown;
    return out;
}

StructureReport analyze(const ModelSpec& spec, const AnalysisOptions& opts)
{
    StructureReport report;
    report.liouvillian_spectrum = liouvillian_spectrum(spec);
    report.spectral_ok = check_spectral(spec, opts.spectral_tol);

    const FixedPoints fp = fixed_points(spec, opts.kernel_threshold);
    report.fixed_point_basis = fp.basis;
    if (fp.ambiguous) {
        std::ostringstream msg;
        msg << "kernel is ill-separated: smallest nonzero singular value " << fp.gap_singular_value
            << " is within 10x of the threshold " << fp.threshold;
        report.warnings.push_back(msg.str());
    }

    const DecayingSubspace dsub = decaying_subspace(spec, opts.kernel_threshold);
    report.decaying_projector = dsub.projector;
    report.decaying_dim = dsub.dim;
    if (dsub.peripheral)
        report.warnings.push_back("nonzero eigenvalues on the imaginary axis; the decaying subspace is taken from "
                                  "the Cesaro limit (zero-eigenvalue projection) of the semigroup");
    report.purification = check_purification(spec, opts.purification);
    if (dsub.dim > 0) {
        report.rejection = "decaying subspace has dimension " + std::to_string(dsub.dim) +
                           "; enclosure analysis requires invariant states covering the whole space";
        return report;
    }

    const Enclosures enc = minimal_enclosures(spec, opts.kernel_threshold);
    report.enclosures = enc.projectors;
    report.invariant_states = enc.states;
    report.unique_decomposition = enc.unique;
    report.warnings.insert(report.warnings.end(), enc.warnings.begin(), enc.warnings.end());

    const DualProjectors duals = dual_projectors(spec, enc, opts.kernel_threshold);
    report.dual_projectors = duals.projectors;
    report.warnings.insert(report.warnings.end(), duals.warnings.begin(), duals.warnings.end());

    report.identifiability = check_identifiability(spec, enc.states, opts.identifiability_tol);
    report.identifiable = report.identifiability.identifiable;
    return report;
}

} // namespace qtraj
