#pragma once

// Complex sparse matrix kernel: Kronecker products, dense matrix exponential,
// sparse matrix-exponential action on vectors, shifted linear solves.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cstdint>
#include <limits>
#include <vector>

#include "constants.hpp"
#include "errors.hpp"

namespace fpsim {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using Triplet = Eigen::Triplet<cxd>;
using SparseCx = Eigen::SparseMatrix<cxd, Eigen::RowMajor>;

// Compressed row-ordered complex sparse matrix. Construction goes through
// coordinate triplet buffers; duplicates are summed and explicit zeros pruned,
// so stored entries are unique in-range (row,col) pairs.
class CSparse {
public:
    CSparse() = default;

    explicit CSparse(SparseCx m) : m_(std::move(m)) {
        m_.prune(0.0, 0.0);
        m_.makeCompressed();
    }

    static CSparse from_triplets(Eigen::Index rows, Eigen::Index cols,
                                 const std::vector<Triplet>& trip) {
        if (rows <= 0 || cols <= 0)
            throw InvalidInput("CSparse: dimensions must be positive");
        SparseCx m(rows, cols);
        m.setFromTriplets(trip.begin(), trip.end()); // duplicates summed
        return CSparse(std::move(m));
    }

    static CSparse identity(Eigen::Index n) {
        SparseCx m(n, n);
        m.setIdentity();
        return CSparse(std::move(m));
    }

    static CSparse zero(Eigen::Index rows, Eigen::Index cols) {
        return CSparse(SparseCx(rows, cols));
    }

    static CSparse from_dense(const CMatrix& d, double drop_tol = 0.0) {
        std::vector<Triplet> trip;
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            for (Eigen::Index i = 0; i < d.rows(); ++i)
                if (std::abs(d(i, j)) > drop_tol) trip.emplace_back(i, j, d(i, j));
        return from_triplets(d.rows(), d.cols(), trip);
    }

    static CSparse diag(const CVector& v) {
        std::vector<Triplet> trip;
        trip.reserve(static_cast<std::size_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (v[i] != cxd(0.0)) trip.emplace_back(i, i, v[i]);
        return from_triplets(v.size(), v.size(), trip);
    }

    Eigen::Index rows() const { return m_.rows(); }
    Eigen::Index cols() const { return m_.cols(); }
    Eigen::Index nnz() const { return m_.nonZeros(); }
    bool is_square() const { return m_.rows() == m_.cols(); }

    const SparseCx& eigen() const { return m_; }
    CMatrix dense() const { return CMatrix(m_); }

    CSparse adjoint() const { return CSparse(SparseCx(m_.adjoint())); }
    CSparse transpose() const { return CSparse(SparseCx(m_.transpose())); }

    double norm1() const {
        // max absolute column sum
        Eigen::VectorXd colsum = Eigen::VectorXd::Zero(m_.cols());
        for (int k = 0; k < m_.outerSize(); ++k)
            for (SparseCx::InnerIterator it(m_, k); it; ++it)
                colsum[it.col()] += std::abs(it.value());
        return colsum.size() ? colsum.maxCoeff() : 0.0;
    }

    double max_abs() const {
        double m = 0.0;
        for (int k = 0; k < m_.outerSize(); ++k)
            for (SparseCx::InnerIterator it(m_, k); it; ++it)
                m = std::max(m, std::abs(it.value()));
        return m;
    }

    CSparse operator+(const CSparse& o) const { return CSparse(SparseCx(m_ + o.m_)); }
    CSparse operator-(const CSparse& o) const { return CSparse(SparseCx(m_ - o.m_)); }
    CSparse operator*(const CSparse& o) const { return CSparse(SparseCx(m_ * o.m_)); }
    CSparse operator*(cxd s) const { return CSparse(SparseCx(m_ * s)); }
    CSparse operator*(double s) const { return CSparse(SparseCx(m_ * cxd(s))); }
    CVector operator*(const CVector& v) const { return m_ * v; }
    CSparse operator-() const { return CSparse(SparseCx(-m_)); }

    friend CSparse operator*(cxd s, const CSparse& a) { return a * s; }
    friend CSparse operator*(double s, const CSparse& a) { return a * s; }

private:
    SparseCx m_;
};

// Kronecker product; entry ((i*b.rows+k),(j*b.cols+l)) = a(i,j) b(k,l).
inline CSparse kron(const CSparse& a, const CSparse& b) {
    const std::int64_t r64 = std::int64_t(a.rows()) * b.rows();
    const std::int64_t c64 = std::int64_t(a.cols()) * b.cols();
    if (r64 > std::numeric_limits<int>::max() || c64 > std::numeric_limits<int>::max())
        throw InvalidInput("kron: product dimension overflows index range");

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(a.nnz()) * static_cast<std::size_t>(b.nnz()));
    const auto& am = a.eigen();
    const auto& bm = b.eigen();
    for (int ka = 0; ka < am.outerSize(); ++ka)
        for (SparseCx::InnerIterator ia(am, ka); ia; ++ia)
            for (int kb = 0; kb < bm.outerSize(); ++kb)
                for (SparseCx::InnerIterator ib(bm, kb); ib; ++ib)
                    trip.emplace_back(ia.row() * b.rows() + ib.row(),
                                      ia.col() * b.cols() + ib.col(),
                                      ia.value() * ib.value());
    return CSparse::from_triplets(static_cast<Eigen::Index>(r64),
                                  static_cast<Eigen::Index>(c64), trip);
}

inline constexpr Eigen::Index default_dense_expm_cap = 4096;

// Dense e^A by scaling-and-squaring with a Pade core.
inline CMatrix expm(const CSparse& a, Eigen::Index dense_cap = default_dense_expm_cap) {
    if (!a.is_square()) throw InvalidInput("expm: matrix must be square");
    if (a.rows() > dense_cap)
        throw InvalidInput("expm: dimension above dense cap, use expmv");
    return a.dense().exp();
}

inline CMatrix expm_dense(const CMatrix& a) {
    if (a.rows() != a.cols()) throw InvalidInput("expm: matrix must be square");
    return a.exp();
}

inline constexpr double default_expmv_tol = 1e-10;

// y ~= e^{A t} v by sub-stepped truncated Taylor series; never forms e^{At}.
// Relative 2-norm error <= tol. Diagonal shift by mean(trace) keeps the series
// short for dissipative generators.
inline CVector expmv(const CSparse& a, const CVector& v, double t,
                     double tol = default_expmv_tol) {
    if (!a.is_square()) throw InvalidInput("expmv: matrix must be square");
    if (a.cols() != v.size()) throw InvalidInput("expmv: dimension mismatch");
    if (tol <= 0.0) throw InvalidInput("expmv: tolerance must be positive");
    if (t == 0.0 || v.norm() == 0.0) return v;

    const Eigen::Index n = a.rows();
    cxd mu(0.0, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) mu += a.eigen().coeff(i, i);
    mu /= double(n);

    const SparseCx& am = a.eigen();
    const double shifted_norm = (a - CSparse::diag(CVector::Constant(n, mu))).norm1();

    constexpr int max_terms = 60;
    constexpr int max_restart = 8;
    int steps = std::max<int>(1, static_cast<int>(std::ceil(shifted_norm * std::abs(t) / 4.0)));

    double last_rel = std::numeric_limits<double>::quiet_NaN();
    for (int attempt = 0; attempt < max_restart; ++attempt) {
        const double dt = t / steps;
        const cxd step_phase = std::exp(mu * dt);
        const double step_tol = tol / steps;

        CVector w = v;
        bool ok = true;
        for (int s = 0; s < steps && ok; ++s) {
            CVector term = w;
            CVector acc = w;
            bool converged = false;
            for (int k = 1; k <= max_terms; ++k) {
                term = (am * term - mu * term) * (dt / double(k));
                acc += term;
                const double rel = term.norm() / std::max(acc.norm(), 1e-300);
                if (rel <= step_tol) {
                    last_rel = rel;
                    converged = true;
                    break;
                }
                last_rel = rel;
            }
            if (!converged) {
                ok = false;
                break;
            }
            w = step_phase * acc;
        }
        if (ok) return w;
        steps *= 2;
    }
    throw NumericalError("expmv: Taylor series did not converge within step budget",
                         last_rel);
}

struct SolveOptions {
    Eigen::Index direct_cap = 20000; // direct sparse factorisation below this
    double residual_tol = 1e-8;
    int gmres_restart = 60;
    int gmres_max_iter = 2000;
    double ilut_drop_tol = 1e-4;
    int ilut_fill = 40;
};

// Solve (F + omega I) x = b. Direct sparse LU below the dimension threshold,
// ILU-preconditioned restarted GMRES above it. The returned solution always
// satisfies the relative residual bound or an exception is thrown.
inline CVector shifted_solve(const CSparse& f, double omega, const CVector& b,
                             const SolveOptions& opt = {}) {
    if (!f.is_square()) throw InvalidInput("shifted_solve: matrix must be square");
    if (f.rows() != b.size()) throw InvalidInput("shifted_solve: dimension mismatch");

    using ColMajor = Eigen::SparseMatrix<cxd, Eigen::ColMajor>;
    ColMajor m(f.rows(), f.cols());
    {
        SparseCx shifted = f.eigen();
        CSparse id = CSparse::identity(f.rows());
        shifted += omega * id.eigen();
        m = shifted;
        m.makeCompressed();
    }

    const double bnorm = b.norm();
    if (bnorm == 0.0) return CVector::Zero(b.size());

    CVector x;
    if (f.rows() <= opt.direct_cap) {
        Eigen::SparseLU<ColMajor> lu;
        lu.compute(m);
        if (lu.info() != Eigen::Success)
            throw NumericalError("shifted_solve: factorisation failed (matrix singular after shift?)",
                                 std::numeric_limits<double>::infinity());
        x = lu.solve(b);
    } else {
        Eigen::GMRES<ColMajor, Eigen::IncompleteLUT<cxd>> gmres;
        gmres.preconditioner().setDroptol(opt.ilut_drop_tol);
        gmres.preconditioner().setFillfactor(opt.ilut_fill);
        gmres.set_restart(opt.gmres_restart);
        gmres.setMaxIterations(opt.gmres_max_iter);
        gmres.setTolerance(opt.residual_tol * 0.1);
        gmres.compute(m);
        x = gmres.solve(b);
        if (gmres.info() != Eigen::Success)
            throw NumericalError("shifted_solve: GMRES did not converge", gmres.error());
    }

    const double res = (m * x - b).norm() / bnorm;
    if (!(res <= opt.residual_tol))
        throw NumericalError("shifted_solve: residual bound violated (near-singular shift?)", res);
    return x;
}

} // namespace fpsim
