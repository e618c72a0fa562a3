#pragma once

// Stationary states: the scalar sech soliton and the two-component bound
// state (U even, V odd) solving
//   mu_plus  U = U'' + spm (U^2 + B V^2) U
//   mu_minus V = V'' + spm (V^2 + B U^2) V

#include <Eigen/Dense>

#include <vector>

#include "kerrsol/core.hpp"
#include "kerrsol/meanfield.hpp"

namespace kerrsol {

ComplexField scalar_soliton(const Grid& grid);

enum class LaplacianKind {
    spectral,           // consistent with the split-step propagator
    finite_difference,  // second-order three-point stencil
};

/// Dense periodic second-derivative matrix on the grid.
Eigen::MatrixXd laplacian_matrix(const Grid& grid, LaplacianKind kind);

inline constexpr double default_mu_plus = 0.4;
inline constexpr double default_mu_minus = 1.0;

struct NewtonOptions {
    int max_iterations = 200;
    double tolerance = 1e-10;  // max-norm of the stationary residual
    LaplacianKind laplacian = LaplacianKind::spectral;
};

struct VectorSolitonSolution {
    PolarizedField profile;  // real U (even) and V (odd)
    KerrParams params;
    double mu_plus = 0.0;
    double mu_minus = 0.0;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> residual_history;  // max-norm residual before each Newton update
    int continuation_steps = 0;            // branch-following steps used for the initial guess
    LaplacianKind laplacian = LaplacianKind::spectral;
};

/// Bound state on the branch that bifurcates from (sech, 0) at
/// mu_minus = (nu - 1)^2 mu_plus, nu (nu + 1) = 2B, and exists down to
/// mu_minus close to mu_plus (for B = 7). The initial guess comes from
/// following that branch in V power; the final solve is a fixed-(mu_plus,
/// mu_minus) Newton iteration restricted to the (U even, V odd) subspace.
/// Throws TrivialSolution outside the existence band, NoConvergence otherwise.
VectorSolitonSolution solve_vector_soliton(const Grid& grid, const KerrParams& params, double mu_plus,
                                           double mu_minus, const NewtonOptions& options = {});

/// Max-norm residual of the stationary equations for real profiles.
double stationary_residual(const Eigen::MatrixXd& laplacian, const KerrParams& params, double mu_plus,
                           double mu_minus, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

/// Scalar soliton embedded as (U = sech, V = 0) with mu_plus = 1.
VectorSolitonSolution embedded_scalar_soliton(const Grid& grid, const KerrParams& params, double mu_minus = 0.4);

/// Profile CSV: r, u, v.
void write_profile_csv(std::ostream& os, const VectorSolitonSolution& solution);

}  // namespace kerrsol
