#include "kerrsol/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

namespace kerrsol {

ComplexField scalar_soliton(const Grid& grid) {
    ComplexField u(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) u[j] = 1.0 / std::cosh(grid.position(j));
    return u;
}

Eigen::MatrixXd laplacian_matrix(const Grid& grid, LaplacianKind kind) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    if (kind == LaplacianKind::finite_difference) {
        const double s = 1.0 / (grid.dr() * grid.dr());
        for (Eigen::Index j = 0; j < n; ++j) {
            d(j, j) = -2.0 * s;
            d(j, (j + 1) % n) += s;
            d(j, (j + n - 1) % n) += s;
        }
        return d;
    }
    const auto k = grid.wavenumbers();
    FftBlock block(grid.size(), 1);
    for (Eigen::Index l = 0; l < n; ++l) {
        auto col = block.column(0);
        std::ranges::fill(col, cplx{});
        col[static_cast<std::size_t>(l)] = 1.0;
        block.forward(0);
        for (std::size_t m = 0; m < col.size(); ++m) col[m] *= -k[m] * k[m] / static_cast<double>(n);
        block.backward(0);
        for (Eigen::Index j = 0; j < n; ++j) d(j, l) = col[static_cast<std::size_t>(j)].real();
    }
    return 0.5 * (d + d.transpose());
}

namespace {

Eigen::VectorXd residual_vector(const Eigen::MatrixXd& lap, const KerrParams& p, double mu_plus, double mu_minus,
                                const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const auto n = u.size();
    Eigen::VectorXd f(2 * n);
    const Eigen::ArrayXd u2 = u.array().square();
    const Eigen::ArrayXd v2 = v.array().square();
    f.head(n) = lap * u + (p.spm * (u2 + p.xpm_ratio * v2) * u.array() - mu_plus * u.array()).matrix();
    f.tail(n) = lap * v + (p.spm * (v2 + p.xpm_ratio * u2) * v.array() - mu_minus * v.array()).matrix();
    return f;
}

// Orthonormal basis of the (U even, V odd) subspace of R^{2N}.
Eigen::MatrixXd parity_basis(const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index half = n / 2;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2 * n, n);
    const double s = std::numbers::sqrt2 / 2.0;
    Eigen::Index c = 0;
    for (Eigen::Index j = 0; j <= half; ++j, ++c) {
        if (j == 0 || j == half) {
            q(j, c) = 1.0;
        } else {
            q(j, c) = s;
            q(n - j, c) = s;
        }
    }
    for (Eigen::Index j = 1; j < half; ++j, ++c) {
        q(n + j, c) = s;
        q(n + n - j, c) = -s;
    }
    return q;
}

void symmetrize(const Grid& grid, Eigen::VectorXd& u, Eigen::VectorXd& v) {
    const Eigen::VectorXd u0 = u;
    const Eigen::VectorXd v0 = v;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const auto rj = static_cast<Eigen::Index>(grid.reflect(j));
        u(jj) = 0.5 * (u0(jj) + u0(rj));
        v(jj) = 0.5 * (v0(jj) - v0(rj));
    }
}

// Newton on the parity-reduced system. With bordered = true the unknown
// mu_minus is appended and the extra equation fixes the V power.
struct NewtonState {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    double mu_minus = 0.0;
};

Eigen::MatrixXd stationary_jacobian(const Eigen::MatrixXd& lap, const KerrParams& p, double mu_plus,
                                    double mu_minus, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const auto n = u.size();
    const double g = p.spm;
    const double b = p.xpm_ratio;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    jac.topLeftCorner(n, n) = lap;
    jac.bottomRightCorner(n, n) = lap;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double uj = u(j);
        const double vj = v(j);
        jac(j, j) += g * (3.0 * uj * uj + b * vj * vj) - mu_plus;
        jac(n + j, n + j) += g * (3.0 * vj * vj + b * uj * uj) - mu_minus;
        jac(j, n + j) = 2.0 * g * b * uj * vj;
        jac(n + j, j) = 2.0 * g * b * uj * vj;
    }
    return jac;
}

// Fixed-V-power Newton; returns false when it fails to converge.
bool bordered_newton(const Grid& grid, const Eigen::MatrixXd& lap, const Eigen::MatrixXd& q, const KerrParams& p,
                     double mu_plus, double power_v, NewtonState& state) {
    const auto n = state.u.size();
    const auto m = q.cols();
    const double dr = grid.dr();
    for (int it = 0; it < 40; ++it) {
        Eigen::VectorXd f(2 * n + 1);
        f.head(2 * n) = residual_vector(lap, p, mu_plus, state.mu_minus, state.u, state.v);
        f(2 * n) = state.v.squaredNorm() * dr - power_v;
        if (!f.allFinite()) return false;
        if (f.lpNorm<Eigen::Infinity>() < 1e-11) return true;
        const Eigen::MatrixXd jac = stationary_jacobian(lap, p, mu_plus, state.mu_minus, state.u, state.v);
        Eigen::MatrixXd ext = Eigen::MatrixXd::Zero(m + 1, m + 1);
        ext.topLeftCorner(m, m) = q.transpose() * jac * q;
        Eigen::VectorXd dmu = Eigen::VectorXd::Zero(2 * n);
        dmu.tail(n) = -state.v;
        ext.topRightCorner(m, 1) = q.transpose() * dmu;
        Eigen::VectorXd dp = Eigen::VectorXd::Zero(2 * n);
        dp.tail(n) = 2.0 * dr * state.v;
        ext.bottomLeftCorner(1, m) = (q.transpose() * dp).transpose();
        Eigen::VectorXd rhs(m + 1);
        rhs.head(m) = -(q.transpose() * f.head(2 * n));
        rhs(m) = -f(2 * n);
        const Eigen::VectorXd step = ext.partialPivLu().solve(rhs);
        const Eigen::VectorXd dx = q * step.head(m);
        state.u += dx.head(n);
        state.v += dx.tail(n);
        state.mu_minus += step(m);
        symmetrize(grid, state.u, state.v);
    }
    return false;
}

// Branch of bound states bifurcating from (sech, 0) where the first odd
// mode of the XPM waveguide 2B mu_plus sech^2 appears:
// mu_minus = (nu - 1)^2 mu_plus with nu (nu + 1) = 2B.
double bifurcation_mu_minus(const KerrParams& p, double mu_plus) {
    const double nu = 0.5 * (-1.0 + std::sqrt(1.0 + 8.0 * p.xpm_ratio));
    return (nu - 1.0) * (nu - 1.0) * mu_plus;
}

// Follows the branch in V power from the bifurcation until mu_minus drops
// below the target; returns the closest branch point above the target.
NewtonState continue_branch(const Grid& grid, const Eigen::MatrixXd& lap, const Eigen::MatrixXd& q,
                            const KerrParams& p, double mu_plus, double mu_target, int& steps) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double nu = 0.5 * (-1.0 + std::sqrt(1.0 + 8.0 * p.xpm_ratio));
    const double k = std::sqrt(mu_plus);
    NewtonState state;
    state.u.resize(n);
    state.v.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double s = k * grid.position(static_cast<std::size_t>(j));
        state.u(j) = std::sqrt(2.0 * mu_plus / p.spm) / std::cosh(s);
        state.v(j) = std::tanh(s) * std::pow(1.0 / std::cosh(s), nu - 1.0);
    }
    symmetrize(grid, state.u, state.v);
    const double scalar_power = state.u.squaredNorm() * grid.dr();
    double power_v = 1e-3 * scalar_power;
    state.v *= std::sqrt(power_v / (state.v.squaredNorm() * grid.dr()));
    state.mu_minus = bifurcation_mu_minus(p, mu_plus);

    if (!bordered_newton(grid, lap, q, p, mu_plus, power_v, state))
        throw Error(ErrorCode::NoConvergence, "could not leave the bifurcation point");
    double factor = 1.25;
    steps = 0;
    while (state.mu_minus > mu_target) {
        NewtonState trial = state;
        const double target_power = power_v * factor;
        const bool ok = bordered_newton(grid, lap, q, p, mu_plus, target_power, trial);
        const double u_max = trial.u.lpNorm<Eigen::Infinity>();
        const double v_max = trial.v.lpNorm<Eigen::Infinity>();
        if (!ok || u_max < 1e-3 * v_max || trial.mu_minus > state.mu_minus) {
            factor = 1.0 + 0.5 * (factor - 1.0);
            if (factor < 1.0 + 1e-4)
                throw Error(ErrorCode::TrivialSolution,
                            "the U component collapses before mu_minus reaches " + std::to_string(mu_target) +
                                "; mu_minus lies below the bound-state band");
            continue;
        }
        ++steps;
        if (trial.mu_minus <= mu_target) {
            // Pick whichever side of the crossing lies closer to the target.
            if (mu_target - trial.mu_minus < state.mu_minus - mu_target) state = trial;
            break;
        }
        state = trial;
        power_v = target_power;
        factor = std::min(1.25, 1.0 + 1.5 * (factor - 1.0));
    }
    return state;
}

}  // namespace

double stationary_residual(const Eigen::MatrixXd& laplacian, const KerrParams& params, double mu_plus,
                           double mu_minus, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return residual_vector(laplacian, params, mu_plus, mu_minus, u, v).lpNorm<Eigen::Infinity>();
}

VectorSolitonSolution solve_vector_soliton(const Grid& grid, const KerrParams& params, double mu_plus,
                                           double mu_minus, const NewtonOptions& options) {
    params.validate();
    if (!(params.spm > 0.0)) throw Error(ErrorCode::InvalidArgument, "a bound state needs spm > 0");
    if (!(mu_plus > 0.0) || !(mu_minus > 0.0))
        throw Error(ErrorCode::InvalidArgument, "propagation constants must be positive");
    if (options.max_iterations <= 0) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");

    // The odd component needs a guided odd mode in the XPM waveguide of U.
    if (params.xpm_ratio <= 1.0)
        throw Error(ErrorCode::TrivialSolution, "V decays to zero: no bound odd mode for B = " +
                                                    std::to_string(params.xpm_ratio) + " <= 1");
    const double mu_bif = bifurcation_mu_minus(params, mu_plus);
    if (mu_minus >= mu_bif)
        throw Error(ErrorCode::TrivialSolution, "V decays to zero: mu_minus = " + std::to_string(mu_minus) +
                                                    " lies above the bifurcation at " + std::to_string(mu_bif));

    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::MatrixXd lap = laplacian_matrix(grid, options.laplacian);
    const Eigen::MatrixXd q = parity_basis(grid);

    VectorSolitonSolution sol;
    sol.params = params;
    sol.mu_plus = mu_plus;
    sol.mu_minus = mu_minus;
    sol.laplacian = options.laplacian;
    NewtonState state = continue_branch(grid, lap, q, params, mu_plus, mu_minus, sol.continuation_steps);
    Eigen::VectorXd u = state.u;
    Eigen::VectorXd v = state.v;

    bool converged = false;
    for (int it = 0; it <= options.max_iterations; ++it) {
        const Eigen::VectorXd f = residual_vector(lap, params, mu_plus, mu_minus, u, v);
        const double res = f.lpNorm<Eigen::Infinity>();
        sol.residual_history.push_back(res);
        sol.residual = res;
        sol.iterations = it;
        if (!std::isfinite(res)) break;
        if (res < options.tolerance) {
            converged = true;
            break;
        }
        if (it == options.max_iterations) break;
        const Eigen::MatrixXd jac = stationary_jacobian(lap, params, mu_plus, mu_minus, u, v);
        const Eigen::MatrixXd reduced = q.transpose() * jac * q;
        const Eigen::VectorXd dx = q * reduced.partialPivLu().solve(-(q.transpose() * f));
        u += dx.head(n);
        v += dx.tail(n);
        symmetrize(grid, u, v);
    }

    const double u_max = u.lpNorm<Eigen::Infinity>();
    const double v_max = v.lpNorm<Eigen::Infinity>();
    if (std::isfinite(u_max) && std::isfinite(v_max) && (v_max <= 1e-6 * u_max || u_max <= 1e-6 * v_max))
        throw Error(ErrorCode::TrivialSolution, "a component collapsed to zero");
    if (!converged)
        throw Error(ErrorCode::NoConvergence, "Newton stalled at residual " + std::to_string(sol.residual) +
                                                  " after " + std::to_string(sol.iterations) + " iterations");

    CVector us(grid.size()), vs(grid.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        us[static_cast<std::size_t>(j)] = u(j);
        vs[static_cast<std::size_t>(j)] = v(j);
    }
    sol.profile = PolarizedField({grid, std::move(us)}, {grid, std::move(vs)});
    return sol;
}

VectorSolitonSolution embedded_scalar_soliton(const Grid& grid, const KerrParams& params, double mu_minus) {
    VectorSolitonSolution sol;
    sol.params = params;
    sol.mu_plus = 1.0;
    sol.mu_minus = mu_minus;
    sol.profile = PolarizedField(scalar_soliton(grid), ComplexField(grid));
    return sol;
}

void write_profile_csv(std::ostream& os, const VectorSolitonSolution& solution) {
    os << "r,u,v\n" << std::setprecision(17);
    const Grid& grid = solution.profile.grid();
    for (std::size_t j = 0; j < grid.size(); ++j)
        os << grid.position(j) << ',' << solution.profile.plus[j].real() << ',' << solution.profile.minus[j].real()
           << '\n';
}

}  // namespace kerrsol
