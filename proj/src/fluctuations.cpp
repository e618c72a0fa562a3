#include "kerrsol/fluctuations.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "kerrsol/fft.hpp"

namespace kerrsol {

const char* to_string(Plane p) noexcept { return p == Plane::direct ? "direct" : "fourier"; }
const char* to_string(PhaseFrame f) noexcept { return f == PhaseFrame::lab ? "lab" : "local"; }
const char* to_string(PolarizationBasis b) noexcept {
    return b == PolarizationBasis::circular ? "circular" : "linear";
}

SymplecticDefect symplectic_defect(const Eigen::MatrixXcd& g, const Eigen::MatrixXcd& h) {
    const auto n = g.rows();
    SymplecticDefect d;
    const Eigen::MatrixXcd a = g * g.adjoint() - h * h.adjoint() - Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd b = g * h.transpose() - h * g.transpose();
    d.norm = a.cwiseAbs().maxCoeff();
    d.pairing = b.cwiseAbs().maxCoeff();
    return d;
}

void check_symplectic(GreenPair& green, double tolerance) {
    green.defect = symplectic_defect(green.g, green.h);
    green.symplectic_warning = !(green.defect.worst() < tolerance);
}

GreenPair identity_green(const Grid& grid, int blocks, const Eigen::VectorXcd& mean) {
    if (blocks != 1 && blocks != 2) throw Error(ErrorCode::InvalidArgument, "blocks must be 1 or 2");
    const auto dim = static_cast<Eigen::Index>(grid.size()) * blocks;
    GreenPair out;
    out.grid = grid;
    out.blocks = blocks;
    out.g = Eigen::MatrixXcd::Identity(dim, dim);
    out.h = Eigen::MatrixXcd::Zero(dim, dim);
    out.mean = mean.size() == 0 ? Eigen::VectorXcd::Zero(dim) : mean;
    if (out.mean.size() != dim) throw Error(ErrorCode::InvalidArgument, "mean field length does not match");
    return out;
}

namespace {

// Per-pixel coefficients of the tangent of the Kerr phase rotation
//   d' = a d + b d*  (+ XPM cross terms a_x dV + b_x dV* in the vector case)
struct KerrTangent {
    CVector a_u, b_u, ax_u, bx_u;
    CVector a_v, b_v, ax_v, bx_v;

    void compute(std::span<const cplx> u, std::span<const cplx> v, double gh, double b, bool vector) {
        const std::size_t n = u.size();
        a_u.resize(n);
        b_u.resize(n);
        const cplx igh(0.0, gh);
        if (!vector) {
            for (std::size_t j = 0; j < n; ++j) {
                const double nu = std::norm(u[j]);
                const cplx e = std::polar(1.0, gh * nu);
                a_u[j] = e * cplx(1.0, gh * nu);
                b_u[j] = e * igh * u[j] * u[j];
            }
            return;
        }
        ax_u.resize(n);
        bx_u.resize(n);
        a_v.resize(n);
        b_v.resize(n);
        ax_v.resize(n);
        bx_v.resize(n);
        const cplx ighb(0.0, gh * b);
        for (std::size_t j = 0; j < n; ++j) {
            const double nu = std::norm(u[j]);
            const double nv = std::norm(v[j]);
            const cplx eu = std::polar(1.0, gh * (nu + b * nv));
            const cplx ev = std::polar(1.0, gh * (nv + b * nu));
            a_u[j] = eu * cplx(1.0, gh * nu);
            b_u[j] = eu * igh * u[j] * u[j];
            ax_u[j] = eu * ighb * u[j] * std::conj(v[j]);
            bx_u[j] = eu * ighb * u[j] * v[j];
            a_v[j] = ev * cplx(1.0, gh * nv);
            b_v[j] = ev * igh * v[j] * v[j];
            ax_v[j] = ev * ighb * v[j] * std::conj(u[j]);
            bx_v[j] = ev * ighb * v[j] * u[j];
        }
    }

    void apply(std::span<cplx> du) const {
        for (std::size_t j = 0; j < du.size(); ++j) du[j] = a_u[j] * du[j] + b_u[j] * std::conj(du[j]);
    }

    void apply(std::span<cplx> du, std::span<cplx> dv) const {
        for (std::size_t j = 0; j < du.size(); ++j) {
            const cplx x = du[j];
            const cplx y = dv[j];
            du[j] = a_u[j] * x + b_u[j] * std::conj(x) + ax_u[j] * y + bx_u[j] * std::conj(y);
            dv[j] = a_v[j] * y + b_v[j] * std::conj(y) + ax_v[j] * x + bx_v[j] * std::conj(x);
        }
    }
};

void require_every_step(const Trajectory& traj) {
    if (traj.stride != 1)
        throw Error(ErrorCode::StrideMismatch, "linearization needs a trajectory recorded at every step, got stride " +
                                                   std::to_string(traj.stride));
    if (traj.size() < 1) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
}

// Linearized split-step propagation of `impulses` perturbations stored in
// `block` (column impulse * comps + c). At every checkpoint step the
// callback sees the block advanced exactly to that step.
void tangent_run(const Trajectory& traj, FftBlock& block, std::size_t impulses,
                 const std::vector<std::size_t>& checkpoints, const std::function<void(std::size_t)>& record) {
    const Grid& grid = traj.grid;
    const std::size_t comps = traj.vector ? 2 : 1;
    const std::size_t cols = impulses * comps;
    const DiffractionStep half(grid, 0.5 * grid.dz());
    const DiffractionStep full(grid, grid.dz());
    const double gh = traj.params.spm * grid.dz();
    FftBlock mid(grid.size(), comps);
    KerrTangent tangent;

    for (std::size_t c = 0; c < cols; ++c) half.apply(block, c);
    const std::size_t total = checkpoints.back();
    std::size_t next = 0;
    for (std::size_t s = 0; s < total; ++s) {
        std::ranges::copy(traj.u[s], mid.column(0).begin());
        half.apply(mid, 0);
        if (traj.vector) {
            std::ranges::copy(traj.v[s], mid.column(1).begin());
            half.apply(mid, 1);
            tangent.compute(mid.column(0), mid.column(1), gh, traj.params.xpm_ratio, true);
            for (std::size_t i = 0; i < impulses; ++i) tangent.apply(block.column(2 * i), block.column(2 * i + 1));
        } else {
            tangent.compute(mid.column(0), {}, gh, 0.0, false);
            for (std::size_t i = 0; i < impulses; ++i) tangent.apply(block.column(i));
        }
        if (s + 1 == checkpoints[next]) {
            for (std::size_t c = 0; c < cols; ++c) half.apply(block, c);
            record(next);
            ++next;
            if (s + 1 < total)
                for (std::size_t c = 0; c < cols; ++c) half.apply(block, c);
        } else {
            for (std::size_t c = 0; c < cols; ++c) full.apply(block, c);
        }
    }
}

Eigen::VectorXcd mean_modes(const Trajectory& traj, std::size_t k) {
    const auto n = static_cast<Eigen::Index>(traj.grid.size());
    const double s = std::sqrt(traj.grid.dr());
    Eigen::VectorXcd m(traj.vector ? 2 * n : n);
    for (Eigen::Index j = 0; j < n; ++j) {
        m(j) = traj.u[k][static_cast<std::size_t>(j)] * s;
        if (traj.vector) m(n + j) = traj.v[k][static_cast<std::size_t>(j)] * s;
    }
    return m;
}

std::vector<GreenPair> build_green(const Trajectory& traj, const std::vector<double>& zetas) {
    require_every_step(traj);
    if (zetas.empty()) throw Error(ErrorCode::InvalidArgument, "no zeta requested");
    const Grid& grid = traj.grid;
    const std::size_t comps = traj.vector ? 2 : 1;
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index dim = n * static_cast<Eigen::Index>(comps);
    const std::size_t recorded = traj.size() - 1;

    std::vector<std::size_t> steps;
    for (const double z : zetas) {
        if (!(z >= 0.0)) throw Error(ErrorCode::InvalidArgument, "zeta must be non-negative");
        const std::size_t s = z == 0.0 ? 0 : grid.steps_for(z);
        if (s > recorded) throw Error(ErrorCode::InvalidArgument, "zeta beyond the recorded trajectory");
        steps.push_back(s);
    }
    std::vector<std::size_t> checkpoints;
    for (const auto s : steps)
        if (s > 0) checkpoints.push_back(s);
    std::ranges::sort(checkpoints);
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    // Responses to real (r1) and imaginary (r2) unit impulses.
    std::vector<Eigen::MatrixXcd> r1(checkpoints.size(), Eigen::MatrixXcd(dim, dim));
    std::vector<Eigen::MatrixXcd> r2(checkpoints.size(), Eigen::MatrixXcd(dim, dim));
    const std::size_t impulses = 2 * static_cast<std::size_t>(dim);
    if (!checkpoints.empty()) {
        parallel_chunks(impulses, 32, [&](std::size_t begin, std::size_t end) {
            const std::size_t count = end - begin;
            FftBlock block(grid.size(), count * comps);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t k = begin + i;
                const std::size_t p = k / 2;  // mode index c * n + j
                const std::size_t c = p / grid.size();
                const std::size_t j = p % grid.size();
                block.column(i * comps + c)[j] = (k % 2 == 0) ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
            }
            tangent_run(traj, block, count, checkpoints, [&](std::size_t ci) {
                for (std::size_t i = 0; i < count; ++i) {
                    const std::size_t k = begin + i;
                    auto& target = (k % 2 == 0) ? r1[ci] : r2[ci];
                    const auto col = static_cast<Eigen::Index>(k / 2);
                    for (std::size_t c = 0; c < comps; ++c) {
                        const auto data = block.column(i * comps + c);
                        for (Eigen::Index j = 0; j < n; ++j)
                            target(static_cast<Eigen::Index>(c) * n + j, col) = data[static_cast<std::size_t>(j)];
                    }
                }
            });
        });
    }

    std::vector<GreenPair> out;
    const cplx i1(0.0, 1.0);
    for (const auto s : steps) {
        GreenPair gp;
        if (s == 0) {
            gp = identity_green(grid, static_cast<int>(comps), mean_modes(traj, 0));
        } else {
            const auto ci = static_cast<std::size_t>(std::ranges::find(checkpoints, s) - checkpoints.begin());
            gp.grid = grid;
            gp.blocks = static_cast<int>(comps);
            gp.g = 0.5 * (r1[ci] - i1 * r2[ci]);
            gp.h = 0.5 * (r1[ci] + i1 * r2[ci]);
            gp.mean = mean_modes(traj, s);
        }
        gp.zeta = static_cast<double>(s) * grid.dz();
        check_symplectic(gp);
        out.push_back(std::move(gp));
    }
    return out;
}

}  // namespace

ComplexField propagate_fluctuation(const Trajectory& trajectory, const ComplexField& delta) {
    require_every_step(trajectory);
    if (trajectory.vector) throw Error(ErrorCode::InvalidArgument, "scalar perturbation on a vector trajectory");
    if (!(delta.grid() == trajectory.grid)) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    FftBlock block(trajectory.grid.size(), 1);
    std::ranges::copy(delta.samples(), block.column(0).begin());
    if (trajectory.size() > 1) tangent_run(trajectory, block, 1, {trajectory.size() - 1}, [](std::size_t) {});
    const auto c = block.column(0);
    return {trajectory.grid, CVector(c.begin(), c.end())};
}

PolarizedField propagate_fluctuation(const Trajectory& trajectory, const PolarizedField& delta) {
    require_every_step(trajectory);
    if (!trajectory.vector) throw Error(ErrorCode::InvalidArgument, "vector perturbation on a scalar trajectory");
    if (!(delta.grid() == trajectory.grid)) throw Error(ErrorCode::InvalidArgument, "grid mismatch");
    FftBlock block(trajectory.grid.size(), 2);
    std::ranges::copy(delta.plus.samples(), block.column(0).begin());
    std::ranges::copy(delta.minus.samples(), block.column(1).begin());
    if (trajectory.size() > 1) tangent_run(trajectory, block, 1, {trajectory.size() - 1}, [](std::size_t) {});
    const auto u = block.column(0);
    const auto v = block.column(1);
    return {{trajectory.grid, CVector(u.begin(), u.end())}, {trajectory.grid, CVector(v.begin(), v.end())}};
}

std::vector<GreenPair> build_green_scalar(const Trajectory& trajectory, const std::vector<double>& zetas) {
    if (trajectory.vector) throw Error(ErrorCode::InvalidArgument, "build_green_scalar needs a scalar trajectory");
    return build_green(trajectory, zetas);
}

GreenPair build_green_scalar(const Trajectory& trajectory) {
    return build_green_scalar(trajectory, {trajectory.zeta.back()}).front();
}

std::vector<GreenPair> build_green_vector(const Trajectory& trajectory, const std::vector<double>& zetas) {
    if (!trajectory.vector) throw Error(ErrorCode::InvalidArgument, "build_green_vector needs a vector trajectory");
    return build_green(trajectory, zetas);
}

GreenPair build_green_vector(const Trajectory& trajectory) {
    return build_green_vector(trajectory, {trajectory.zeta.back()}).front();
}

namespace {

GreenPair difference_once(const Trajectory& traj, double epsilon, DifferenceScheme scheme) {
    const Grid& grid = traj.grid;
    const std::size_t comps = traj.vector ? 2 : 1;
    const auto n = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index dim = n * static_cast<Eigen::Index>(comps);
    const double zeta = traj.zeta.back();
    const std::size_t steps = zeta > 0.0 ? grid.steps_for(zeta) : 0;
    const SplitStepper stepper(grid, traj.params);

    auto run = [&](FftBlock& block) {
        if (steps == 0) return;
        if (traj.vector)
            stepper.advance_vector(block, 0, 1, steps);
        else
            stepper.advance_scalar(block, 0, steps);
    };
    auto load = [&](FftBlock& block) {
        std::ranges::copy(traj.u.front(), block.column(0).begin());
        if (traj.vector) std::ranges::copy(traj.v.front(), block.column(1).begin());
    };

    FftBlock base(grid.size(), comps);
    load(base);
    run(base);
    Eigen::VectorXcd out_mean(dim);
    for (std::size_t c = 0; c < comps; ++c)
        for (Eigen::Index j = 0; j < n; ++j)
            out_mean(static_cast<Eigen::Index>(c) * n + j) = base.column(c)[static_cast<std::size_t>(j)];

    Eigen::MatrixXcd r1(dim, dim), r2(dim, dim);
    const std::size_t impulses = 2 * static_cast<std::size_t>(dim);
    parallel_chunks(impulses, 8, [&](std::size_t begin, std::size_t end) {
        FftBlock plus(grid.size(), comps);
        FftBlock minus(grid.size(), comps);
        for (std::size_t k = begin; k < end; ++k) {
            const std::size_t p = k / 2;
            const std::size_t c = p / grid.size();
            const std::size_t j = p % grid.size();
            const cplx step = (k % 2 == 0) ? cplx(epsilon, 0.0) : cplx(0.0, epsilon);
            load(plus);
            plus.column(c)[j] += step;
            run(plus);
            if (scheme == DifferenceScheme::central) {
                load(minus);
                minus.column(c)[j] -= step;
                run(minus);
            }
            auto& target = (k % 2 == 0) ? r1 : r2;
            const auto col = static_cast<Eigen::Index>(p);
            for (std::size_t cc = 0; cc < comps; ++cc) {
                const auto a = plus.column(cc);
                for (Eigen::Index jj = 0; jj < n; ++jj) {
                    const auto js = static_cast<std::size_t>(jj);
                    const auto row = static_cast<Eigen::Index>(cc) * n + jj;
                    target(row, col) = scheme == DifferenceScheme::central
                                           ? (a[js] - minus.column(cc)[js]) / (2.0 * epsilon)
                                           : (a[js] - out_mean(row)) / epsilon;
                }
            }
        }
    });

    GreenPair gp;
    gp.grid = grid;
    gp.blocks = static_cast<int>(comps);
    gp.zeta = static_cast<double>(steps) * grid.dz();
    const cplx i1(0.0, 1.0);
    gp.g = 0.5 * (r1 - i1 * r2);
    gp.h = 0.5 * (r1 + i1 * r2);
    gp.mean = out_mean * std::sqrt(grid.dr());
    gp = to_local_frame(gp);
    check_symplectic(gp);
    return gp;
}

}  // namespace

GreenPair build_green_difference(const Trajectory& trajectory, const DifferenceOptions& options, double* leak) {
    if (trajectory.size() < 1) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
    if (!(options.epsilon >= 1e-6 && options.epsilon <= 1e-2))
        throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [1e-6, 1e-2]");
    if (trajectory.zeta.back() == 0.0) {
        GreenPair id = identity_green(trajectory.grid, trajectory.vector ? 2 : 1, mean_modes(trajectory, 0));
        id = to_local_frame(id);
        check_symplectic(id);
        if (leak) *leak = 0.0;
        return id;
    }
    GreenPair gp = difference_once(trajectory, options.epsilon, options.scheme);
    if (options.check_linearity) {
        const GreenPair twice = difference_once(trajectory, 2.0 * options.epsilon, options.scheme);
        const double scale = std::max(gp.g.cwiseAbs().maxCoeff(), gp.h.cwiseAbs().maxCoeff());
        const double change = max_abs_difference(gp, twice) / scale;
        if (leak) *leak = change;
        if (change > options.leak_tolerance)
            throw Error(ErrorCode::NonlinearityLeak, "doubling epsilon changes the Green's matrices by " +
                                                         std::to_string(change) + " (relative)");
    }
    return gp;
}

Eigen::MatrixXcd centered_dft(std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd f(nn, nn);
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    const auto half = static_cast<std::int64_t>(n / 2);
    for (Eigen::Index k = 0; k < nn; ++k)
        for (Eigen::Index j = 0; j < nn; ++j) {
            // Reduce the phase index modulo n before scaling to keep the angle small.
            const std::int64_t prod = ((static_cast<std::int64_t>(k) - half) * (static_cast<std::int64_t>(j) - half)) %
                                      static_cast<std::int64_t>(n);
            f(k, j) = std::polar(s, -2.0 * std::numbers::pi * static_cast<double>(prod) / static_cast<double>(n));
        }
    return f;
}

namespace {

Eigen::MatrixXcd block_diag(const Eigen::MatrixXcd& a, int blocks) {
    if (blocks == 1) return a;
    const auto n = a.rows();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = a;
    out.bottomRightCorner(n, n) = a;
    return out;
}

}  // namespace

GreenPair to_fourier(const GreenPair& green) {
    if (green.plane != Plane::direct) throw Error(ErrorCode::BasisMismatch, "GreenPair is already in the Fourier plane");
    const Eigen::MatrixXcd f = block_diag(centered_dft(green.pixels()), green.blocks);
    GreenPair out = green;
    out.g = f * green.g;
    out.h = f * green.h;
    out.mean = f * green.mean;
    out.plane = Plane::fourier;
    check_symplectic(out);
    return out;
}

GreenPair to_linear(const GreenPair& green) {
    if (green.blocks != 2) throw Error(ErrorCode::BasisMismatch, "polarization change needs a two-block GreenPair");
    if (green.polarization != PolarizationBasis::circular)
        throw Error(ErrorCode::BasisMismatch, "GreenPair is already in the linear basis");
    const auto n = static_cast<Eigen::Index>(green.pixels());
    const double s = std::numbers::sqrt2 / 2.0;
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (Eigen::Index j = 0; j < n; ++j) {
        p(j, j) = s;
        p(j, n + j) = s;
        p(n + j, j) = s;
        p(n + j, n + j) = -s;
    }
    GreenPair out = green;
    out.g = p * green.g * p;
    out.h = p * green.h * p;
    out.mean = p * green.mean;
    out.polarization = PolarizationBasis::linear;
    check_symplectic(out);
    return out;
}

GreenPair to_local_frame(const GreenPair& green) {
    if (green.frame == PhaseFrame::local) return green;
    GreenPair out = green;
    const auto n = static_cast<Eigen::Index>(green.pixels());
    for (int b = 0; b < green.blocks; ++b) {
        // Nodes of the mean field carry round-off phases; they take the phase
        // of the strongest pixel of their block instead.
        Eigen::Index peak = 0;
        const double peak_abs = green.mean.segment(b * n, n).cwiseAbs().maxCoeff(&peak);
        const cplx peak_val = green.mean(b * n + peak);
        const cplx fallback = peak_abs > 0.0 ? std::conj(peak_val) / peak_abs : cplx(1.0, 0.0);
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index r = b * n + j;
            const cplx m = green.mean(r);
            const cplx rot = std::abs(m) > 1e-8 * peak_abs ? std::conj(m) / std::abs(m) : fallback;
            out.g.row(r) *= rot;
            out.h.row(r) *= rot;
            out.mean(r) = m * rot;
        }
    }
    out.frame = PhaseFrame::local;
    check_symplectic(out);
    return out;
}

GreenPair compose(const GreenPair& second, const GreenPair& first) {
    if (!(second.grid == first.grid) || second.blocks != first.blocks || second.plane != first.plane ||
        second.frame != first.frame || second.polarization != first.polarization)
        throw Error(ErrorCode::BasisMismatch, "cannot compose GreenPairs in different bases");
    GreenPair out = second;
    out.g = second.g * first.g + second.h * first.h.conjugate();
    out.h = second.g * first.h + second.h * first.g.conjugate();
    out.zeta = first.zeta + second.zeta;
    check_symplectic(out);
    return out;
}

double max_abs_difference(const GreenPair& a, const GreenPair& b) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::BasisMismatch, "GreenPair dimensions differ");
    return std::max((a.g - b.g).cwiseAbs().maxCoeff(), (a.h - b.h).cwiseAbs().maxCoeff());
}

// ---- binary dump -----------------------------------------------------------

namespace {

constexpr char green_magic[8] = {'K', 'S', 'G', 'R', 'E', 'E', 'N', '\0'};
constexpr std::uint32_t green_version = 1;
constexpr std::uint32_t endian_tag = 0x01020304u;

template <typename T>
void put(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error(ErrorCode::IoError, "truncated GreenPair dump");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

void put_matrix(std::ostream& os, const Eigen::MatrixXcd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            put(os, m(r, c).real());
            put(os, m(r, c).imag());
        }
}

void get_matrix(std::istream& is, Eigen::MatrixXcd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            const double re = get<double>(is);
            const double im = get<double>(is);
            m(r, c) = {re, im};
        }
}

}  // namespace

void write_green(std::ostream& os, const GreenPair& green) {
    os.write(green_magic, sizeof(green_magic));
    put(os, green_version);
    put(os, endian_tag);
    put(os, static_cast<std::uint64_t>(green.grid.size()));
    put(os, green.grid.half_width());
    put(os, green.grid.dz());
    put(os, green.zeta);
    put(os, static_cast<std::uint32_t>(green.plane));
    put(os, static_cast<std::uint32_t>(green.frame));
    put(os, static_cast<std::uint32_t>(green.polarization));
    put(os, static_cast<std::uint32_t>(green.blocks));
    for (Eigen::Index r = 0; r < green.mean.size(); ++r) {
        put(os, green.mean(r).real());
        put(os, green.mean(r).imag());
    }
    put_matrix(os, green.g);
    put_matrix(os, green.h);
    if (!os) throw Error(ErrorCode::IoError, "failed to write GreenPair dump");
}

GreenPair read_green(std::istream& is) {
    char magic[sizeof(green_magic)];
    if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, green_magic, sizeof(magic)) != 0)
        throw Error(ErrorCode::IoError, "not a GreenPair dump");
    if (get<std::uint32_t>(is) != green_version) throw Error(ErrorCode::IoError, "unsupported GreenPair dump version");
    if (get<std::uint32_t>(is) != endian_tag) throw Error(ErrorCode::IoError, "GreenPair dump endianness tag mismatch");
    const auto n = get<std::uint64_t>(is);
    const double half_width = get<double>(is);
    const double dz = get<double>(is);
    GreenPair g;
    g.grid = make_grid(static_cast<std::size_t>(n), half_width, dz);
    g.zeta = get<double>(is);
    const auto plane = get<std::uint32_t>(is);
    const auto frame = get<std::uint32_t>(is);
    const auto pol = get<std::uint32_t>(is);
    const auto blocks = get<std::uint32_t>(is);
    if (plane > 1 || frame > 1 || pol > 1 || (blocks != 1 && blocks != 2))
        throw Error(ErrorCode::IoError, "corrupt GreenPair header");
    g.plane = static_cast<Plane>(plane);
    g.frame = static_cast<PhaseFrame>(frame);
    g.polarization = static_cast<PolarizationBasis>(pol);
    g.blocks = static_cast<int>(blocks);
    const auto dim = static_cast<Eigen::Index>(n) * g.blocks;
    g.mean.resize(dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        g.mean(r) = {re, im};
    }
    g.g.resize(dim, dim);
    g.h.resize(dim, dim);
    get_matrix(is, g.g);
    get_matrix(is, g.h);
    check_symplectic(g);
    return g;
}

}  // namespace kerrsol
