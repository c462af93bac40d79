#include "isac/ranging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace isac {

namespace {

struct QuadraticForm {
    Eigen::MatrixXcd gram; // A^H A, L x L
    Eigen::VectorXcd b;    // A^H y~
    double y_norm_sq = 0.0;
};

bool unit_modulus(const Eigen::VectorXcd& s)
{
    for (long i = 0; i < s.size(); ++i)
        if (std::abs(std::abs(s(i)) - 1.0) > 1e-9)
            return false;
    return true;
}

// With unit-modulus symbols, A^H A = p G~^H G~ is Toeplitz with
// t(d) = sum_{n in N_m} exp(+j 2 pi n d / N): one FFT of the allocation
// indicator yields every lag. A^H y~ is one more FFT.
QuadraticForm build_structured(const Observation& obs)
{
    const int n = obs.n_total;
    const int l_max = obs.max_paths;
    const Fft& fft = shared_fft(n);
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    Eigen::VectorXcd indicator = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (std::size_t i = 0; i < obs.subcarriers.size(); ++i) {
        const int idx = obs.subcarriers[i];
        indicator(idx) = 1.0;
        v(idx) = obs.s(static_cast<long>(i)) * std::conj(obs.y(static_cast<long>(i)));
    }

    Eigen::VectorXcd spec = sqrt_n * fft.forward(indicator); // unscaled DFT
    Eigen::VectorXcd corr = sqrt_n * fft.forward(v);

    QuadraticForm q;
    q.gram.resize(l_max, l_max);
    for (int r = 0; r < l_max; ++r)
        for (int c = 0; c < l_max; ++c) {
            const int d = r - c; // t(r-c), t(-d) = conj(t(d))
            const std::complex<double> t =
                d >= 0 ? std::conj(spec(d)) : spec(-d);
            q.gram(r, c) = obs.tx_power * t;
        }
    q.b.resize(l_max);
    const double sqrt_p = std::sqrt(obs.tx_power);
    for (int l = 0; l < l_max; ++l)
        q.b(l) = sqrt_p * std::conj(corr(l));
    q.y_norm_sq = obs.y.squaredNorm();
    return q;
}

QuadraticForm build_dense(const Observation& obs)
{
    const Eigen::MatrixXcd a = obs.sensing_matrix();
    QuadraticForm q;
    q.gram = a.adjoint() * a;
    q.b = a.adjoint() * obs.y;
    q.y_norm_sq = obs.y.squaredNorm();
    return q;
}

QuadraticForm build_quadratic(const Observation& obs)
{
    if (!obs.subcarriers.empty() && unit_modulus(obs.s))
        return build_structured(obs);
    return build_dense(obs);
}

double lipschitz_estimate(const Eigen::MatrixXcd& gram)
{
    Eigen::VectorXcd v = Eigen::VectorXcd::Ones(gram.rows());
    v.normalize();
    double lam = 0.0;
    for (int i = 0; i < 30; ++i) {
        Eigen::VectorXcd w = gram * v;
        lam = w.norm();
        if (lam == 0.0)
            break;
        v = w / lam;
    }
    return lam > 0.0 ? 1.05 * lam : 1.0;
}

Eigen::VectorXcd soft_threshold(const Eigen::VectorXcd& u, double t)
{
    Eigen::VectorXcd z(u.size());
    for (long i = 0; i < u.size(); ++i) {
        const double mag = std::abs(u(i));
        z(i) = mag > t ? u(i) * (1.0 - t / mag) : std::complex<double>(0.0, 0.0);
    }
    return z;
}

double smooth_part(const QuadraticForm& q, const Eigen::VectorXcd& x,
                   const Eigen::VectorXcd& gram_x)
{
    return 0.5 * q.y_norm_sq - q.b.dot(x).real() + 0.5 * x.dot(gram_x).real();
}

// Max KKT violation of 0.5||y-Ah||^2 + lambda ||h||_1, scaled by the
// correlation magnitude so the tolerance is dimensionless.
double kkt_violation(const QuadraticForm& q, const Eigen::VectorXcd& x,
                     const Eigen::VectorXcd& gram_x, double lambda, double scale)
{
    double worst = 0.0;
    for (long l = 0; l < x.size(); ++l) {
        const std::complex<double> corr = q.b(l) - gram_x(l); // A^H (y - A x)
        const double mag = std::abs(x(l));
        double viol;
        if (mag == 0.0)
            viol = std::max(0.0, std::abs(corr) - lambda);
        else
            viol = std::abs(corr - lambda * x(l) / mag);
        worst = std::max(worst, viol);
    }
    return worst / scale;
}

} // namespace

LassoResult lasso_estimate(const Observation& obs, const LassoParams& params)
{
    const QuadraticForm q = build_quadratic(obs);
    const long l_max = q.gram.rows();

    double lambda = params.lambda;
    if (lambda < 0.0)
        lambda = universal_lambda(obs, estimate_noise_sigma(obs));

    if (lambda == 0.0 && static_cast<int>(obs.subcarriers.size()) >= obs.max_paths) {
        // Unpenalized overdetermined case: the normal equations are exact.
        LassoResult res;
        res.lambda = 0.0;
        res.h = q.gram.ldlt().solve(q.b);
        Eigen::VectorXcd gram_h = q.gram * res.h;
        res.objective = smooth_part(q, res.h, gram_h);
        const double scale0 = std::max(q.b.cwiseAbs().maxCoeff(),
                                       std::numeric_limits<double>::min());
        res.kkt_residual = (gram_h - q.b).cwiseAbs().maxCoeff() / scale0;
        res.converged = res.kkt_residual <= params.tol;
        if (params.record_trace)
            res.trace.push_back(res.objective);
        return res;
    }

    const double lip = lipschitz_estimate(q.gram);
    const double scale = std::max({lambda, q.b.cwiseAbs().maxCoeff(),
                                   std::numeric_limits<double>::min()});

    LassoResult res;
    res.lambda = lambda;

    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(l_max);
    Eigen::VectorXcd momentum = x;
    Eigen::VectorXcd gram_x = Eigen::VectorXcd::Zero(l_max);
    double fx = smooth_part(q, x, gram_x) + lambda * x.cwiseAbs().sum();
    double t = 1.0;
    if (params.record_trace)
        res.trace.push_back(fx);

    for (int iter = 1; iter <= params.max_iter; ++iter) {
        Eigen::VectorXcd gram_m = q.gram * momentum;
        Eigen::VectorXcd z = soft_threshold(momentum - (gram_m - q.b) / lip, lambda / lip);
        Eigen::VectorXcd gram_z = q.gram * z;
        double fz = smooth_part(q, z, gram_z) + lambda * z.cwiseAbs().sum();

        if (fz > fx) {
            // Monotone fallback: plain proximal step from the best iterate.
            z = soft_threshold(x - (gram_x - q.b) / lip, lambda / lip);
            gram_z = q.gram * z;
            fz = smooth_part(q, z, gram_z) + lambda * z.cwiseAbs().sum();
            t = 1.0;
        }

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        momentum = z + ((t - 1.0) / t_next) * (z - x);
        const double rel_change = std::abs(fx - fz) / std::max(1.0, std::abs(fx));
        x = std::move(z);
        gram_x = std::move(gram_z);
        fx = fz;
        t = t_next;
        res.iterations = iter;
        if (params.record_trace)
            res.trace.push_back(fx);

        res.kkt_residual = kkt_violation(q, x, gram_x, lambda, scale);
        if (rel_change < params.tol && res.kkt_residual <= params.tol) {
            res.converged = true;
            break;
        }
    }

    res.h = std::move(x);
    res.objective = fx;
    return res;
}

Eigen::VectorXcd least_squares_estimate(const Observation& obs)
{
    if (static_cast<int>(obs.subcarriers.size()) < obs.max_paths)
        throw Error("least-squares estimator requires |N_m| >= L");
    const QuadraticForm q = build_quadratic(obs);
    return q.gram.ldlt().solve(q.b);
}

double estimate_noise_sigma(const Observation& obs)
{
    const long rows = obs.y.size();
    if (rows <= obs.max_paths)
        throw Error("noise estimate requires an overdetermined observation");
    const QuadraticForm q = build_quadratic(obs);
    const Eigen::VectorXcd h = q.gram.ldlt().solve(q.b);
    const double res_sq = std::max(
        0.0, q.y_norm_sq - 2.0 * q.b.dot(h).real() + h.dot(q.gram * h).real());
    return std::sqrt(res_sq / static_cast<double>(rows - obs.max_paths));
}

double universal_lambda(const Observation& obs, double sigma_z)
{
    const double col_norm =
        std::sqrt(obs.tx_power * static_cast<double>(obs.subcarriers.size()));
    return sigma_z * col_norm * std::sqrt(2.0 * std::log(double(obs.max_paths)));
}

std::vector<int> detect_support(const Eigen::VectorXcd& h, const SupportRule& rule)
{
    double max_mag = 0.0;
    for (long i = 0; i < h.size(); ++i)
        max_mag = std::max(max_mag, std::abs(h(i)));
    const double tau = std::max(rule.tau_abs, rule.rho * max_mag);
    std::vector<int> support;
    for (long i = 0; i < h.size(); ++i)
        if (std::abs(h(i)) > tau)
            support.push_back(static_cast<int>(i) + 1);
    return support;
}

double range_midpoint(int l, const OfdmParams& params)
{
    if (l < 1 || l > params.max_paths)
        throw TapOutOfRange("tap index " + std::to_string(l) + " outside 1..L");
    const double width = params.tap_width();
    return (l - 1) * width + 0.5 * width;
}

RangeSet extract_range_set(const std::vector<int>& support, const OfdmParams& params)
{
    std::vector<std::pair<double, int>> entries;
    entries.reserve(support.size());
    for (int l : support)
        entries.emplace_back(range_midpoint(l, params), l);
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    RangeSet set;
    for (const auto& [d, l] : entries) {
        set.ranges.push_back(d);
        set.source_taps.push_back(l);
    }
    return set;
}

RangeSet RangeSet::from_values(std::vector<double> values)
{
    std::sort(values.begin(), values.end(), std::greater<>());
    RangeSet set;
    set.ranges = std::move(values);
    set.source_taps.assign(set.ranges.size(), -1);
    return set;
}

void write_range_sets_csv(const std::vector<RangeSet>& sets, const std::string& path)
{
    std::ofstream out(path);
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "bs,rank,range_m\n";
    for (std::size_t m = 0; m < sets.size(); ++m)
        for (int g = 1; g <= sets[m].size(); ++g)
            out << m + 1 << ',' << g << ',' << sets[m].at(g) << '\n';
}

std::vector<RangeSet> read_range_sets_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open range-set CSV: " + path);
    std::string line;
    std::getline(in, line); // header
    std::map<int, std::vector<double>> by_bs;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::istringstream ss(line);
        std::string bs_s, rank_s, range_s;
        if (!std::getline(ss, bs_s, ',') || !std::getline(ss, rank_s, ',') ||
            !std::getline(ss, range_s, ','))
            throw ConfigError("malformed range-set CSV line: " + line);
        by_bs[std::stoi(bs_s)].push_back(std::stod(range_s));
    }
    std::vector<RangeSet> sets;
    for (auto& [bs, values] : by_bs) {
        if (bs != static_cast<int>(sets.size()) + 1)
            throw ConfigError("range-set CSV must use contiguous 1-based bs ids");
        sets.push_back(RangeSet::from_values(std::move(values)));
    }
    return sets;
}

} // namespace isac
