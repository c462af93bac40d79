#include "isac/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include <fftw3.h>

namespace isac {

namespace {
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

// Plans are expensive relative to a transform; keep them per thread.
const Fft& shared_fft(int n)
{
    thread_local std::map<int, std::unique_ptr<Fft>> cache;
    auto& slot = cache[n];
    if (!slot)
        slot = std::make_unique<Fft>(n);
    return *slot;
}

struct Fft::Impl {
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

Fft::Fft(int n) : n_(n), impl_(std::make_unique<Impl>())
{
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->in = fftw_alloc_complex(static_cast<std::size_t>(n));
    impl_->out = fftw_alloc_complex(static_cast<std::size_t>(n));
    impl_->fwd = fftw_plan_dft_1d(n, impl_->in, impl_->out, FFTW_FORWARD, FFTW_ESTIMATE);
    impl_->inv = fftw_plan_dft_1d(n, impl_->in, impl_->out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft::~Fft()
{
    std::lock_guard<std::mutex> lock(plan_mutex());
    fftw_destroy_plan(impl_->fwd);
    fftw_destroy_plan(impl_->inv);
    fftw_free(impl_->in);
    fftw_free(impl_->out);
}

Eigen::VectorXcd Fft::forward(const Eigen::VectorXcd& x) const
{
    Eigen::VectorXcd result(n_);
    std::copy_n(reinterpret_cast<const double*>(x.data()), 2 * n_,
                reinterpret_cast<double*>(impl_->in));
    fftw_execute(impl_->fwd);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    auto* out = reinterpret_cast<const std::complex<double>*>(impl_->out);
    for (int i = 0; i < n_; ++i)
        result(i) = out[i] * scale;
    return result;
}

Eigen::VectorXcd Fft::inverse(const Eigen::VectorXcd& x) const
{
    Eigen::VectorXcd result(n_);
    std::copy_n(reinterpret_cast<const double*>(x.data()), 2 * n_,
                reinterpret_cast<double*>(impl_->in));
    fftw_execute(impl_->inv);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
    auto* out = reinterpret_cast<const std::complex<double>*>(impl_->out);
    for (int i = 0; i < n_; ++i)
        result(i) = out[i] * scale;
    return result;
}

Eigen::MatrixXcd dft_matrix(int n)
{
    Eigen::MatrixXcd w(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            w(r, c) = std::polar(scale, -2.0 * M_PI * double(r) * double(c) / double(n));
    return w;
}

OfdmSymbol make_symbol(const OfdmParams& params, int bs, std::mt19937_64& rng)
{
    const int n = params.n_subcarriers;
    OfdmSymbol sym;
    sym.freq = Eigen::VectorXcd::Zero(n);

    static const std::complex<double> kQpsk[4] = {
        {M_SQRT1_2, M_SQRT1_2}, {M_SQRT1_2, -M_SQRT1_2},
        {-M_SQRT1_2, M_SQRT1_2}, {-M_SQRT1_2, -M_SQRT1_2}};
    std::uniform_int_distribution<int> pick(0, 3);
    for (int idx : params.allocation.at(static_cast<std::size_t>(bs)))
        sym.freq(idx) = kQpsk[pick(rng)];

    sym.time = std::sqrt(params.tx_power) * shared_fft(n).inverse(sym.freq);
    return sym;
}

std::vector<std::vector<int>> make_random_allocation(int n_subcarriers, int num_bs,
                                                     std::mt19937_64& rng)
{
    std::vector<int> all(static_cast<std::size_t>(n_subcarriers));
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    const int per_bs = n_subcarriers / num_bs;
    std::vector<std::vector<int>> alloc(static_cast<std::size_t>(num_bs));
    for (int m = 0; m < num_bs; ++m) {
        alloc[m].assign(all.begin() + static_cast<long>(m) * per_bs,
                        all.begin() + static_cast<long>(m + 1) * per_bs);
        std::sort(alloc[m].begin(), alloc[m].end());
    }
    return alloc;
}

std::vector<std::vector<int>> make_contiguous_allocation(int n_subcarriers, int num_bs)
{
    const int per_bs = n_subcarriers / num_bs;
    std::vector<std::vector<int>> alloc(static_cast<std::size_t>(num_bs));
    for (int m = 0; m < num_bs; ++m) {
        alloc[m].resize(static_cast<std::size_t>(per_bs));
        std::iota(alloc[m].begin(), alloc[m].end(), m * per_bs);
    }
    return alloc;
}

Eigen::VectorXcd circulant_multiply(const TapVector& taps, const Eigen::VectorXcd& x)
{
    const int n = static_cast<int>(x.size());
    Eigen::VectorXcd col = Eigen::VectorXcd::Zero(n);
    col.head(taps.size()) = taps;
    const Fft& fft = shared_fft(n);
    // H x = sqrt(N) W^H ((W c) .* (W x)) for circulant H with first column c.
    Eigen::VectorXcd prod = fft.forward(col).cwiseProduct(fft.forward(x));
    return std::sqrt(static_cast<double>(n)) * fft.inverse(prod);
}

std::vector<Eigen::VectorXcd>
transmit_through_channel(const std::vector<OfdmSymbol>& symbols,
                         const std::vector<std::vector<TapVector>>& taps,
                         const OfdmParams& params, std::mt19937_64& rng)
{
    const int m_count = static_cast<int>(symbols.size());
    const int n = params.n_subcarriers;
    const double noise_sigma = std::sqrt(params.noise_power / 2.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<Eigen::VectorXcd> received(static_cast<std::size_t>(m_count));
    for (int m = 0; m < m_count; ++m) {
        Eigen::VectorXcd y = Eigen::VectorXcd::Zero(n);
        for (int u = 0; u < m_count; ++u) {
            if (taps[u][m].isZero(0.0))
                continue;
            y += circulant_multiply(taps[u][m], symbols[u].time);
        }
        if (noise_sigma > 0.0)
            for (int i = 0; i < n; ++i)
                y(i) += std::complex<double>(noise_sigma * gauss(rng), noise_sigma * gauss(rng));
        received[m] = std::move(y);
    }
    return received;
}

Observation demodulate(const Eigen::VectorXcd& y_time, const OfdmSymbol& symbol,
                       const OfdmParams& params, int bs)
{
    const auto& alloc = params.allocation.at(static_cast<std::size_t>(bs));
    Eigen::VectorXcd y_freq = shared_fft(params.n_subcarriers).forward(y_time);

    Observation obs;
    obs.subcarriers = alloc;
    obs.n_total = params.n_subcarriers;
    obs.max_paths = params.max_paths;
    obs.tx_power = params.tx_power;
    obs.s.resize(static_cast<long>(alloc.size()));
    obs.y.resize(static_cast<long>(alloc.size()));
    for (std::size_t i = 0; i < alloc.size(); ++i) {
        obs.s(static_cast<long>(i)) = symbol.freq(alloc[i]);
        obs.y(static_cast<long>(i)) = y_freq(alloc[i]);
    }
    return obs;
}

Eigen::MatrixXcd Observation::sensing_matrix() const
{
    const long rows = static_cast<long>(subcarriers.size());
    Eigen::MatrixXcd a(rows, max_paths);
    const double sqrt_p = std::sqrt(tx_power);
    for (long r = 0; r < rows; ++r) {
        // Row n: sqrt(p) s_n * [w^0, w^1, ..., w^{L-1}], w = exp(-j2pi n'/N).
        const std::complex<double> w =
            std::polar(1.0, -2.0 * M_PI * double(subcarriers[static_cast<std::size_t>(r)]) /
                                double(n_total));
        std::complex<double> cur = sqrt_p * s(r);
        for (int l = 0; l < max_paths; ++l) {
            a(r, l) = cur;
            cur *= w;
        }
    }
    return a;
}

void write_observation_csv(const Observation& obs, const std::string& path)
{
    std::ofstream out(path);
    out << "index,re,im\n";
    for (long i = 0; i < obs.y.size(); ++i)
        out << obs.subcarriers[static_cast<std::size_t>(i)] << ',' << obs.y(i).real() << ','
            << obs.y(i).imag() << '\n';
}

} // namespace isac
