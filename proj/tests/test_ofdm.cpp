#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>

#include "isac/ofdm.hpp"
#include "isac/rng.hpp"

using namespace isac;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

OfdmParams small_params(int num_bs = 3) {
    OfdmParams p;
    p.n_subcarriers = 64;
    p.subcarrier_spacing = 30e3;
    p.cp_length = 16;
    p.max_paths = 12;
    p.tx_power = 4.0;
    p.allocation = make_contiguous_allocation(64, num_bs);
    return p;
}

} // namespace

TEST_CASE("dft matrix is unitary") {
    for (int n : {4, 16, 37}) {
        const MatrixXcd w = dft_matrix(n);
        const MatrixXcd should_be_i = w * w.adjoint();
        CHECK((should_be_i - MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("fftw transform matches the explicit DFT matrix") {
    const int n = 48;
    const MatrixXcd w = dft_matrix(n);
    auto rng = make_rng(3);
    std::normal_distribution<double> gauss;
    VectorXcd x(n);
    for (int i = 0; i < n; ++i) x(i) = {gauss(rng), gauss(rng)};

    const Fft fft(n);
    CHECK((fft.forward(x) - w * x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fft.inverse(x) - w.adjoint() * x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fft.inverse(fft.forward(x)) - x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(shared_fft(n).size() == n);
}

TEST_CASE("symbols carry unit-power QPSK on own sub-carriers only") {
    const OfdmParams p = small_params();
    auto rng = make_rng(5);
    const OfdmSymbol sym = make_symbol(p, 1, rng);
    REQUIRE(sym.freq.size() == p.n_subcarriers);
    for (int n = 0; n < p.n_subcarriers; ++n) {
        const bool owned = std::find(p.allocation[1].begin(), p.allocation[1].end(), n) !=
                           p.allocation[1].end();
        if (owned)
            CHECK(std::abs(sym.freq(n)) == doctest::Approx(1.0));
        else
            CHECK(std::abs(sym.freq(n)) == 0.0);
    }
    // time = sqrt(p) W^H freq
    const MatrixXcd w = dft_matrix(p.n_subcarriers);
    const VectorXcd expected = std::sqrt(p.tx_power) * (w.adjoint() * sym.freq);
    CHECK((sym.time - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("random allocation is a disjoint equal split") {
    auto rng = make_rng(8);
    const auto alloc = make_random_allocation(60, 4, rng);
    REQUIRE(alloc.size() == 4);
    std::vector<int> seen(60, 0);
    for (const auto& a : alloc) {
        CHECK(a.size() == 15);
        CHECK(std::is_sorted(a.begin(), a.end()));
        for (int n : a) seen[n] += 1;
    }
    for (int c : seen) CHECK(c == 1);

    const auto contig = make_contiguous_allocation(60, 4);
    CHECK(contig[0].front() == 0);
    CHECK(contig[3].back() == 59);
}

TEST_CASE("circulant multiply agrees with an explicit CP-removal convolution") {
    // Build the circulant matrix by hand from the padded tap column and compare.
    const int n = 32;
    TapVector taps = TapVector::Zero(6);
    auto rng = make_rng(13);
    std::normal_distribution<double> gauss;
    for (int l = 0; l < 6; ++l) taps(l) = {gauss(rng), gauss(rng)};
    VectorXcd x(n);
    for (int i = 0; i < n; ++i) x(i) = {gauss(rng), gauss(rng)};

    VectorXcd col = VectorXcd::Zero(n);
    col.head(6) = taps;
    MatrixXcd h(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) h((r + c) % n, c) = col(r);

    CHECK((circulant_multiply(taps, x) - h * x).cwiseAbs().maxCoeff() < 1e-10);

    // Same thing via linear convolution of a CP-extended block: prepend the
    // last Q samples, convolve, drop the CP, and the result is circular.
    const int q = 8;
    VectorXcd ext(n + q);
    ext.head(q) = x.tail(q);
    ext.tail(n) = x;
    VectorXcd lin = VectorXcd::Zero(n + q);
    for (int i = 0; i < n + q; ++i)
        for (int l = 0; l < 6 && l <= i; ++l) lin(i) += taps(l) * ext(i - l);
    CHECK((circulant_multiply(taps, x) - lin.tail(n)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("noiseless observation equals the sensing model") {
    const OfdmParams p = small_params();
    auto rng = make_rng(21);
    std::vector<OfdmSymbol> symbols;
    for (int m = 0; m < 3; ++m) symbols.push_back(make_symbol(p, m, rng));

    // random sparse channels
    std::vector<std::vector<TapVector>> taps(3, std::vector<TapVector>(3));
    std::normal_distribution<double> gauss;
    for (int u = 0; u < 3; ++u)
        for (int m = 0; m < 3; ++m) {
            taps[u][m] = TapVector::Zero(p.max_paths);
            taps[u][m](2 + u) = {gauss(rng), gauss(rng)};
            taps[u][m](7) = {gauss(rng), gauss(rng)};
        }

    const auto received = transmit_through_channel(symbols, taps, p, rng);
    REQUIRE(received.size() == 3);

    for (int m = 0; m < 3; ++m) {
        const Observation obs = demodulate(received[m], symbols[m], p, m);
        CHECK(obs.n_total == p.n_subcarriers);
        CHECK(obs.max_paths == p.max_paths);
        REQUIRE(obs.subcarriers == p.allocation[m]);

        // disjoint allocations: on N_m only the monostatic channel contributes,
        // so y~ restricted there must equal A h_{m,m} exactly
        const VectorXcd predicted = obs.sensing_matrix() * taps[m][m];
        CHECK((obs.y - predicted).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("sensing matrix is sqrt(p) diag(s) times a DFT sub-block") {
    const OfdmParams p = small_params();
    auto rng = make_rng(34);
    const OfdmSymbol sym = make_symbol(p, 0, rng);
    Observation obs;
    obs.subcarriers = p.allocation[0];
    obs.n_total = p.n_subcarriers;
    obs.max_paths = p.max_paths;
    obs.tx_power = p.tx_power;
    obs.s.resize(static_cast<long>(obs.subcarriers.size()));
    for (long r = 0; r < obs.s.size(); ++r) obs.s(r) = sym.freq(obs.subcarriers[r]);

    const MatrixXcd a = obs.sensing_matrix();
    REQUIRE(a.rows() == static_cast<long>(obs.subcarriers.size()));
    REQUIRE(a.cols() == p.max_paths);
    for (long r = 0; r < a.rows(); ++r)
        for (int l = 0; l < p.max_paths; ++l) {
            const std::complex<double> expected =
                std::sqrt(p.tx_power) * obs.s(r) *
                std::polar(1.0, -2.0 * M_PI * obs.subcarriers[r] * l / double(p.n_subcarriers));
            CHECK(std::abs(a(r, l) - expected) < 1e-10);
        }
}

TEST_CASE("channel noise has the configured per-sample variance") {
    OfdmParams p = small_params(3);
    p.n_subcarriers = 4096;
    p.cp_length = 300;
    p.max_paths = 250;
    p.noise_power = 0.5;
    p.allocation = make_contiguous_allocation(p.n_subcarriers, 3);
    auto rng = make_rng(55);
    std::vector<OfdmSymbol> symbols;
    for (int m = 0; m < 3; ++m) symbols.push_back(make_symbol(p, m, rng));
    std::vector<std::vector<TapVector>> taps(
        3, std::vector<TapVector>(3, TapVector::Zero(p.max_paths)));

    const auto received = transmit_through_channel(symbols, taps, p, rng);
    double power = 0.0;
    for (const auto& y : received) power += y.squaredNorm();
    power /= 3.0 * p.n_subcarriers;
    CHECK(power == doctest::Approx(p.noise_power).epsilon(0.05));
}
