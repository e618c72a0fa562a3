#include "kerrsol/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

namespace kerrsol {

void KerrParams::validate() const {
    if (!(spm >= 0.0) || !std::isfinite(spm)) throw Error(ErrorCode::InvalidArgument, "spm must be non-negative");
    if (!(xpm_ratio >= 0.0) || !std::isfinite(xpm_ratio))
        throw Error(ErrorCode::InvalidArgument, "xpm_ratio must be non-negative");
}

Trajectory Trajectory::slice(std::size_t first, std::size_t last) const {
    if (first > last || last >= size()) throw Error(ErrorCode::InvalidArgument, "trajectory slice out of range");
    Trajectory out;
    out.grid = grid;
    out.params = params;
    out.stride = stride;
    out.vector = vector;
    for (std::size_t k = first; k <= last; ++k) {
        out.zeta.push_back(zeta[k] - zeta[first]);
        out.u.push_back(u[k]);
        if (vector) out.v.push_back(v[k]);
    }
    return out;
}

SplitStepper::SplitStepper(const Grid& grid, const KerrParams& params)
    : grid_(grid), params_(params), half_(grid, 0.5 * grid.dz()), full_(grid, grid.dz()) {
    params_.validate();
}

void SplitStepper::kerr_scalar(std::span<cplx> u) const {
    const double gh = params_.spm * grid_.dz();
    for (auto& x : u) x *= std::polar(1.0, gh * std::norm(x));
}

void SplitStepper::kerr_vector(std::span<cplx> u, std::span<cplx> v) const {
    const double gh = params_.spm * grid_.dz();
    const double b = params_.xpm_ratio;
    for (std::size_t j = 0; j < u.size(); ++j) {
        const double nu = std::norm(u[j]);
        const double nv = std::norm(v[j]);
        u[j] *= std::polar(1.0, gh * (nu + b * nv));
        v[j] *= std::polar(1.0, gh * (nv + b * nu));
    }
}

void SplitStepper::advance_scalar(FftBlock& block, std::size_t column, std::size_t steps) const {
    if (steps == 0) return;
    half_.apply(block, column);
    for (std::size_t s = 0; s < steps; ++s) {
        kerr_scalar(block.column(column));
        if (s + 1 < steps) full_.apply(block, column);
    }
    half_.apply(block, column);
}

void SplitStepper::advance_vector(FftBlock& block, std::size_t column_u, std::size_t column_v,
                                  std::size_t steps) const {
    if (steps == 0) return;
    half_.apply(block, column_u);
    half_.apply(block, column_v);
    for (std::size_t s = 0; s < steps; ++s) {
        kerr_vector(block.column(column_u), block.column(column_v));
        if (s + 1 < steps) {
            full_.apply(block, column_u);
            full_.apply(block, column_v);
        }
    }
    half_.apply(block, column_u);
    half_.apply(block, column_v);
}

namespace {

double raw_power(std::span<const cplx> u) {
    double p = 0.0;
    for (const auto& x : u) p += std::norm(x);
    return p;
}

void check_drift(double p0, double p1, double zeta_total, double& worst) {
    if (p0 <= 0.0) return;
    const double drift = std::abs(p1 - p0) / p0 / std::max(zeta_total, 1.0);
    worst = std::max(worst, drift);
    if (drift > 1e-10 || !std::isfinite(p1))
        throw Error(ErrorCode::PowerDrift, "relative power drift " + std::to_string(drift) +
                                               " per unit zeta; reduce dz or widen the window");
}

template <typename Step>
void record(Trajectory& traj, std::size_t n_steps, std::size_t stride, Step&& step) {
    std::size_t done = 0;
    while (done < n_steps) {
        const std::size_t chunk = std::min(stride, n_steps - done);
        step(chunk);
        done += chunk;
        traj.zeta.push_back(static_cast<double>(done) * traj.grid.dz());
    }
}

}  // namespace

Trajectory propagate_scalar(const ComplexField& field, const KerrParams& params, double zeta_total,
                            std::size_t record_stride) {
    if (!(zeta_total > 0.0)) throw Error(ErrorCode::InvalidArgument, "zeta_total must be positive");
    if (record_stride == 0) throw Error(ErrorCode::InvalidArgument, "record stride must be positive");
    const Grid& grid = field.grid();
    const std::size_t n_steps = grid.steps_for(zeta_total);
    SplitStepper stepper(grid, params);
    FftBlock block(grid.size(), 1);
    std::ranges::copy(field.samples(), block.column(0).begin());

    Trajectory traj;
    traj.grid = grid;
    traj.params = params;
    traj.stride = record_stride;
    traj.zeta.push_back(0.0);
    traj.u.push_back(field.vector());
    record(traj, n_steps, record_stride, [&](std::size_t chunk) {
        stepper.advance_scalar(block, 0, chunk);
        auto c = block.column(0);
        traj.u.emplace_back(c.begin(), c.end());
    });
    check_drift(raw_power(traj.u.front()), raw_power(traj.u.back()), zeta_total, traj.max_power_drift);
    return traj;
}

Trajectory propagate_vector(const PolarizedField& field, const KerrParams& params, double zeta_total,
                            std::size_t record_stride) {
    if (!(zeta_total > 0.0)) throw Error(ErrorCode::InvalidArgument, "zeta_total must be positive");
    if (record_stride == 0) throw Error(ErrorCode::InvalidArgument, "record stride must be positive");
    const Grid& grid = field.grid();
    const std::size_t n_steps = grid.steps_for(zeta_total);
    SplitStepper stepper(grid, params);
    FftBlock block(grid.size(), 2);
    std::ranges::copy(field.plus.samples(), block.column(0).begin());
    std::ranges::copy(field.minus.samples(), block.column(1).begin());

    Trajectory traj;
    traj.grid = grid;
    traj.params = params;
    traj.stride = record_stride;
    traj.vector = true;
    traj.zeta.push_back(0.0);
    traj.u.push_back(field.plus.vector());
    traj.v.push_back(field.minus.vector());
    record(traj, n_steps, record_stride, [&](std::size_t chunk) {
        stepper.advance_vector(block, 0, 1, chunk);
        auto cu = block.column(0);
        auto cv = block.column(1);
        traj.u.emplace_back(cu.begin(), cu.end());
        traj.v.emplace_back(cv.begin(), cv.end());
    });
    check_drift(raw_power(traj.u.front()), raw_power(traj.u.back()), zeta_total, traj.max_power_drift);
    check_drift(raw_power(traj.v.front()), raw_power(traj.v.back()), zeta_total, traj.max_power_drift);
    return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
    os << (trajectory.vector ? "zeta,r,re_u,im_u,re_v,im_v\n" : "zeta,r,re_u,im_u\n");
    os << std::setprecision(17);
    const auto r = trajectory.grid.positions();
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            const cplx u = trajectory.u[k][j];
            os << trajectory.zeta[k] << ',' << r[j] << ',' << u.real() << ',' << u.imag();
            if (trajectory.vector) {
                const cplx v = trajectory.v[k][j];
                os << ',' << v.real() << ',' << v.imag();
            }
            os << '\n';
        }
    }
}

double l2_distance(const Grid& grid, std::span<const cplx> a, std::span<const cplx> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += std::norm(a[j] - b[j]);
    return std::sqrt(s * grid.dr());
}

double l2_norm(const Grid& grid, std::span<const cplx> a) { return std::sqrt(raw_power(a) * grid.dr()); }

}  // namespace kerrsol
