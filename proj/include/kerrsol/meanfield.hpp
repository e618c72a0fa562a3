#pragma once

// Classical split-step propagation of the scalar Kerr equation and the
// XPM-coupled two-component system
//   dU/dzeta = i U_rr + i spm (|U|^2 + B |V|^2) U
//   dV/dzeta = i V_rr + i spm (|V|^2 + B |U|^2) V

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "kerrsol/core.hpp"
#include "kerrsol/fft.hpp"

namespace kerrsol {

struct KerrParams {
    double spm = 2.0;        // self-phase coefficient in normalized units
    double xpm_ratio = 7.0;  // B, cross-phase / self-phase

    void validate() const;
};

/// Fields recorded every `stride` steps; zeta[0] = 0 is the input.
struct Trajectory {
    Grid grid;
    KerrParams params;
    std::size_t stride = 1;
    bool vector = false;
    std::vector<double> zeta;
    std::vector<CVector> u;
    std::vector<CVector> v;  // empty for scalar trajectories
    double max_power_drift = 0.0;

    std::size_t size() const noexcept { return zeta.size(); }
    ComplexField field(std::size_t k) const { return {grid, u.at(k)}; }
    PolarizedField polarized(std::size_t k) const { return {{grid, u.at(k)}, {grid, v.at(k)}}; }

    /// Snapshots [first, last] with zeta shifted so that the first is 0.
    Trajectory slice(std::size_t first, std::size_t last) const;
};

/// Strang split-step engine: half diffraction, exact Kerr phase rotation,
/// half diffraction per dz. Consecutive half steps are merged inside one call.
class SplitStepper {
public:
    SplitStepper(const Grid& grid, const KerrParams& params);

    void advance_scalar(FftBlock& block, std::size_t column, std::size_t steps) const;
    void advance_vector(FftBlock& block, std::size_t column_u, std::size_t column_v, std::size_t steps) const;

    const Grid& grid() const noexcept { return grid_; }

private:
    void kerr_scalar(std::span<cplx> u) const;
    void kerr_vector(std::span<cplx> u, std::span<cplx> v) const;

    Grid grid_;
    KerrParams params_;
    DiffractionStep half_;
    DiffractionStep full_;
};

Trajectory propagate_scalar(const ComplexField& field, const KerrParams& params, double zeta_total,
                            std::size_t record_stride = 1);

Trajectory propagate_vector(const PolarizedField& field, const KerrParams& params, double zeta_total,
                            std::size_t record_stride = 1);

/// CSV with columns zeta, r, re_u, im_u (, re_v, im_v).
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

/// sqrt(sum |a_j - b_j|^2 dr)
double l2_distance(const Grid& grid, std::span<const cplx> a, std::span<const cplx> b);
double l2_norm(const Grid& grid, std::span<const cplx> a);

}  // namespace kerrsol
