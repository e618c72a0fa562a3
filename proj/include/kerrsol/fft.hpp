#pragma once

// Column-blocked FFT buffers over FFTW. Every column of a block is
// transformed by the same single-column plan, so the result for a column
// never depends on how many columns share the block.

#include <cstddef>
#include <functional>
#include <span>

#include "kerrsol/core.hpp"

namespace kerrsol {

class FftBlock {
public:
    FftBlock(std::size_t n, std::size_t columns);
    ~FftBlock();
    FftBlock(const FftBlock&) = delete;
    FftBlock& operator=(const FftBlock&) = delete;
    FftBlock(FftBlock&& other) noexcept;
    FftBlock& operator=(FftBlock&& other) noexcept;

    std::size_t n() const noexcept { return n_; }
    std::size_t columns() const noexcept { return columns_; }

    std::span<cplx> column(std::size_t c) noexcept { return {data_ + c * ld_, n_}; }
    std::span<const cplx> column(std::size_t c) const noexcept { return {data_ + c * ld_, n_}; }

    /// Unnormalized forward (e^{-i}) / backward (e^{+i}) transforms in place.
    void forward(std::size_t c);
    void backward(std::size_t c);

private:
    void release() noexcept;

    std::size_t n_ = 0;
    std::size_t columns_ = 0;
    std::size_t ld_ = 0;
    cplx* data_ = nullptr;
    void* forward_plan_ = nullptr;
    void* backward_plan_ = nullptr;
};

/// Exact diffraction over a distance h, exp(-i k^2 h) in Fourier space,
/// including the 1/n normalization of the round trip.
class DiffractionStep {
public:
    DiffractionStep(const Grid& grid, double h);
    void apply(FftBlock& block, std::size_t column) const;

private:
    CVector factors_;
};

/// Runs body(begin, end) over [0, count) in contiguous chunks. Chunks run on
/// std::thread when more than one hardware thread is available; the result
/// must not depend on the chunking.
void parallel_chunks(std::size_t count, std::size_t chunk, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace kerrsol
