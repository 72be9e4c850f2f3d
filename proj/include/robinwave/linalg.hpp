#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <vector>

#include "robinwave/error.hpp"
#include "robinwave/grid.hpp"

namespace robinwave::linalg {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Assembles K + diag(B) + diag(extra), the matrix of the Robin form
/// ∫∇u·∇v + ∫_Γ uv (+ Σ extra_i u_i v_i).
inline SparseMatrix robin_form_matrix(const Grid& g, std::span<const double> extra_diagonal = {}) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(4 * g.edges.size() + g.size());
    for (const auto& e : g.edges) {
        trip.emplace_back(e.a, e.a, e.coeff);
        trip.emplace_back(e.b, e.b, e.coeff);
        trip.emplace_back(e.a, e.b, -e.coeff);
        trip.emplace_back(e.b, e.a, -e.coeff);
    }
    for (int i = 0; i < g.size(); ++i) {
        double d = g.boundary_weights[i];
        if (!extra_diagonal.empty()) d += extra_diagonal[i];
        if (d != 0.0) trip.emplace_back(i, i, d);
    }
    SparseMatrix mat(g.size(), g.size());
    mat.setFromTriplets(trip.begin(), trip.end());
    return mat;
}

struct EigenPair {
    double value = 0.0;
    std::vector<double> vector;  // mass-normalised
    double residual = 0.0;
    int iterations = 0;
};

struct InverseIterationOptions {
    double shift = 0.0;
    double tol = 1e-10;
    int max_iter = 2000;
    std::uint64_t seed = 12345;
};

/// Smallest `count` eigenpairs of A x = λ M x (A symmetric, M = diag(mass)
/// positive) by inverse iteration on (A - σM) with mass-orthogonal deflation
/// against converged vectors. A - σM must be positive definite.
/// Residuals are ‖Ax - λMx‖_{M^{-1}} / max(1, |λ|) for M-normalised x;
/// iteration stops below `tol` or at the rounding floor 10³ε‖M⁻¹A‖_∞.
inline std::vector<EigenPair> smallest_eigenpairs(const SparseMatrix& a, std::span<const double> mass, int count,
                                                  const InverseIterationOptions& opt = {}) {
    const int n = static_cast<int>(a.rows());
    if (count < 1 || count > n) throw ConfigError("smallest_eigenpairs: invalid count");
    SparseMatrix shifted = a;
    if (opt.shift != 0.0) {
        for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= opt.shift * mass[i];
    }
    Eigen::SimplicialLDLT<SparseMatrix> solver(shifted);
    if (solver.info() != Eigen::Success) throw NumericalError("smallest_eigenpairs: factorisation failed");

    Vector m(n);
    for (int i = 0; i < n; ++i) m[i] = mass[i];
    const auto m_dot = [&](const Vector& x, const Vector& y) { return (x.array() * m.array() * y.array()).sum(); };

    // Residual floor set by rounding: ‖M⁻¹A‖_∞ ε.
    double gersh = 0.0;
    {
        Vector rows = Vector::Zero(n);
        for (int k = 0; k < a.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(a, k); it; ++it) rows[it.row()] += std::fabs(it.value());
        for (int i = 0; i < n; ++i) gersh = std::max(gersh, rows[i] / mass[i]);
    }
    const double floor = 1e3 * std::numeric_limits<double>::epsilon() * gersh;

    std::vector<Vector> found;
    std::vector<EigenPair> out;
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto deflate = [&](Vector& x) {
        // Two passes of modified Gram-Schmidt keep the deflation tight.
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& v : found) x -= m_dot(v, x) * v;
        }
    };

    for (int k = 0; k < count; ++k) {
        Vector x(n);
        for (int i = 0; i < n; ++i) x[i] = normal(rng);
        deflate(x);
        x /= std::sqrt(m_dot(x, x));
        EigenPair pair;
        bool converged = false;
        for (int it = 1; it <= opt.max_iter; ++it) {
            Vector y = solver.solve((m.array() * x.array()).matrix());
            deflate(y);
            const double len = std::sqrt(m_dot(y, y));
            if (!(len > 0.0) || !std::isfinite(len)) throw NumericalError("smallest_eigenpairs: breakdown");
            x = y / len;
            const Vector ax = a * x;
            const double lambda = x.dot(ax);
            const Vector r = ax - lambda * (m.array() * x.array()).matrix();
            const double res = std::sqrt((r.array().square() / m.array()).sum()) / std::max(1.0, std::fabs(lambda));
            pair.value = lambda;
            pair.residual = res;
            pair.iterations = it;
            if (res < opt.tol || res * std::max(1.0, std::fabs(lambda)) < floor) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream msg;
            msg << "smallest_eigenpairs: eigenpair " << k << " not converged after " << opt.max_iter
                << " iterations (residual " << pair.residual << ")";
            throw NumericalError(msg.str());
        }
        // Sign convention: the largest-magnitude entry is positive.
        Eigen::Index imax = 0;
        x.cwiseAbs().maxCoeff(&imax);
        if (x[imax] < 0.0) x = -x;
        found.push_back(x);
        pair.vector.assign(x.data(), x.data() + n);
        out.push_back(std::move(pair));
    }
    std::sort(out.begin(), out.end(), [](const EigenPair& l, const EigenPair& r) { return l.value < r.value; });
    return out;
}

/// Eigenvalues (ascending) of a small symmetric matrix by cyclic Jacobi rotations.
template <std::size_t N>
std::array<double, N> symmetric_eigenvalues(std::array<std::array<double, N>, N> a) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < N; ++p)
            for (std::size_t q = p + 1; q < N; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < N; ++p) {
            for (std::size_t q = p + 1; q < N; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < N; ++k) {
                    const double akp = a[k][p];
                    const double akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < N; ++k) {
                    const double apk = a[p][k];
                    const double aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::array<double, N> eig{};
    for (std::size_t i = 0; i < N; ++i) eig[i] = a[i][i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

}  // namespace robinwave::linalg
