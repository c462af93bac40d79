#pragma once

#include <complex>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isac/scenario.hpp"

namespace isac {

/// Unitary DFT matrix, W(n,k) = exp(-j 2 pi n k / N) / sqrt(N).
Eigen::MatrixXcd dft_matrix(int n);

/// Unitary FFT of a fixed size, backed by FFTW. Plan creation is guarded by a
/// global lock; transform execution is safe on distinct instances.
class Fft {
public:
    explicit Fft(int n);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    /// W x (unitary forward transform).
    Eigen::VectorXcd forward(const Eigen::VectorXcd& x) const;
    /// W^H x (unitary inverse transform).
    Eigen::VectorXcd inverse(const Eigen::VectorXcd& x) const;

private:
    struct Impl;
    int n_;
    std::unique_ptr<Impl> impl_;
};

/// Per-thread cache of FFT plans keyed by size.
const Fft& shared_fft(int n);

/// One OFDM symbol of one BS: unit-power QPSK on its allocated sub-carriers,
/// zero elsewhere; time = sqrt(p) W^H freq.
struct OfdmSymbol {
    Eigen::VectorXcd freq; // s_m, length N
    Eigen::VectorXcd time; // chi_m, length N
};

OfdmSymbol make_symbol(const OfdmParams& params, int bs, std::mt19937_64& rng);

/// Random disjoint split of {0..N-1} into M equal-size allocations.
std::vector<std::vector<int>> make_random_allocation(int n_subcarriers, int num_bs,
                                                     std::mt19937_64& rng);

/// Contiguous disjoint split: BS m gets block m of floor(N/M) sub-carriers.
std::vector<std::vector<int>> make_contiguous_allocation(int n_subcarriers, int num_bs);

/// Post-CP-removal circular channel model: y_m = sum_u H_{u,m} chi_u + z_m,
/// with H_{u,m} circulant built from taps[u][m] and z ~ CN(0, sigma_z^2 I).
std::vector<Eigen::VectorXcd>
transmit_through_channel(const std::vector<OfdmSymbol>& symbols,
                         const std::vector<std::vector<TapVector>>& taps,
                         const OfdmParams& params, std::mt19937_64& rng);

/// Circulant multiply y = H x where the first column of H is taps (padded to N).
Eigen::VectorXcd circulant_multiply(const TapVector& taps, const Eigen::VectorXcd& x);

/// Frequency-domain observation of one BS restricted to its own sub-carriers.
struct Observation {
    std::vector<int> subcarriers; // N_m, 0-based, ascending
    Eigen::VectorXcd s;           // s_m restricted to N_m (unit modulus)
    Eigen::VectorXcd y;           // y~_m
    int n_total = 0;              // N
    int max_paths = 0;            // L
    double tx_power = 1.0;        // p

    /// sqrt(p) diag(s~) G~, built on demand (|N_m| x L).
    Eigen::MatrixXcd sensing_matrix() const;
};

/// y~_m = rows of W y_m at indices N_m, paired with the BS's own known symbol.
Observation demodulate(const Eigen::VectorXcd& y_time, const OfdmSymbol& symbol,
                       const OfdmParams& params, int bs);

/// Debug dump: index, re, im per observation sample.
void write_observation_csv(const Observation& obs, const std::string& path);

} // namespace isac
