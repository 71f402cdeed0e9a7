#include "dispersionlab/microlocal.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "dispersionlab/transforms.hpp"

namespace dlab {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

WavePacket::WavePacket(double t0_, double eta0_, double h_) : t0(t0_), eta0(eta0_), h(h_) {
    if (!(h > 0.0)) throw std::invalid_argument("WavePacket: h must be positive");
}

TimeSeries sample_packet(const WavePacket& p, Eigen::Index n, double dt, double grid_t0) {
    if (n < 2 || !(dt > 0.0)) throw std::invalid_argument("sample_packet: bad grid");
    const double reach = 8.0 * std::sqrt(p.h);
    const double t_end = grid_t0 + static_cast<double>(n - 1) * dt;
    if (grid_t0 > p.t0 - reach || t_end < p.t0 + reach)
        throw std::invalid_argument("sample_packet: grid does not cover t0 +/- 8 sqrt(h)");
    const double amp = std::pow(2.0 / p.h, 0.25);
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = grid_t0 + static_cast<double>(i) * dt - p.t0;
        const double phase = kTwoPi * t * p.eta0 / p.h;
        v[i] = amp * std::exp(-M_PI * t * t / p.h) *
               std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return TimeSeries(std::move(v), dt, grid_t0);
}

TimeSeries scaled_fourier(const TimeSeries& x, double h) {
    if (h != x.dt()) throw std::invalid_argument("scaled_fourier: h must equal the sampling step");
    const Eigen::Index n = x.size();

    fftw_complex* buf_in;
    fftw_complex* buf_out;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        buf_in = fftw_alloc_complex(static_cast<size_t>(n));
        buf_out = fftw_alloc_complex(static_cast<size_t>(n));
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf_in, buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        buf_in[i][0] = x[i].real();
        buf_in[i][1] = x[i].imag();
    }
    fftw_execute(plan);

    // X_j = sum_n x_n e^{-2 pi i j n / N}; the eta_j = j/N mode needs the
    // grid-origin phase e^{-2 pi i eta_j t0 / h} and the dt weight.
    const Eigen::Index half = n / 2;
    Eigen::VectorXcd f(n);
    const double scale = x.dt() / std::sqrt(h);
    for (Eigen::Index idx = 0; idx < n; ++idx) {
        const Eigen::Index j = idx - half;  // ascending eta
        const Eigen::Index bin = (j % n + n) % n;
        const double eta = static_cast<double>(j) / static_cast<double>(n);
        const double phase = -kTwoPi * eta * x.t0() / h;
        f[idx] = scale * std::complex<double>(std::cos(phase), std::sin(phase)) *
                 std::complex<double>(buf_out[bin][0], buf_out[bin][1]);
    }
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(buf_in);
        fftw_free(buf_out);
    }
    return TimeSeries(std::move(f), 1.0 / static_cast<double>(n),
                      -static_cast<double>(half) / static_cast<double>(n));
}

std::pair<double, double> estimate_center(const TimeSeries& x, double h) {
    double mass = 0.0, first = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double w = std::norm(x[i]);
        mass += w;
        first += x.time(i) * w;
    }
    if (mass <= 0.0) throw std::invalid_argument("estimate_center: signal is identically zero");
    const double t_center = first / mass;

    const TimeSeries f = scaled_fourier(x, h);
    double fmass = 0.0, ffirst = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        const double w = std::norm(f[i]);
        fmass += w;
        ffirst += f.time(i) * w;
    }
    return {t_center, ffirst / fmass};
}

WavePacketMapResult run_wavepacket_experiment(double t0, double eta0,
                                              const std::vector<double>& dt_list, double t_max) {
    if (dt_list.empty()) throw std::invalid_argument("run_wavepacket_experiment: empty dt list");
    WavePacketMapResult res;
    {
        // analytic targets from the normalized central phase function
        const SchemeSpec s = SchemeSpec::central_difference(dt_list.front());
        const double qi = s.q0_inv(eta0);
        res.itdt_target = {t0 / s.q0_prime(eta0), s.q0(eta0)};
        res.ftdt_target = {t0 * s.q0_prime(qi), qi};
    }
    auto rel_err = [](const std::array<double, 2>& c, const std::array<double, 2>& t) {
        return std::hypot((c[0] - t[0]) / t[0], (c[1] - t[1]) / t[1]);
    };
    for (const double h : dt_list) {
        const double steps = t_max / h;
        Eigen::Index n = static_cast<Eigen::Index>(std::llround(steps));
        if (n % 2 != 0) ++n;
        const WavePacket packet(t0, eta0, h);
        const TimeSeries phi = sample_packet(packet, n, h, 0.0);
        const SchemeSpec scheme = SchemeSpec::central_difference(h);
        const TransformOperator inv = build_operator(scheme, n, TransformDirection::inverse);
        const TransformOperator fwd = build_operator(scheme, n, TransformDirection::forward);
        const auto ci = estimate_center(inv.apply(phi), h);
        const auto cf = estimate_center(fwd.apply(phi), h);
        res.dt.push_back(h);
        res.itdt_center.push_back({ci.first, ci.second});
        res.ftdt_center.push_back({cf.first, cf.second});
        res.itdt_error.push_back(rel_err(res.itdt_center.back(), res.itdt_target));
        res.ftdt_error.push_back(rel_err(res.ftdt_center.back(), res.ftdt_target));
    }
    return res;
}

LemmaInitResult lemma_init_check(const GaussianSource& src, const std::vector<double>& dt_list,
                                 double t_max) {
    if (dt_list.empty()) throw std::invalid_argument("lemma_init_check: empty dt list");
    LemmaInitResult result;
    for (const double dt : dt_list) {
        if (!(dt > 0.0)) throw std::invalid_argument("lemma_init_check: dt must be positive");
        const double steps = t_max / dt;
        const Eigen::Index n = static_cast<Eigen::Index>(std::llround(steps));
        if (std::abs(steps - static_cast<double>(n)) > 1e-9 * steps)
            throw std::invalid_argument("lemma_init_check: t_max/dt must be an integer");

        // prepend half a record of zeros; keep the total even for the
        // central-scheme operator
        Eigen::Index n_pre = n / 2;
        if ((n + n_pre) % 2 != 0) ++n_pre;
        const Eigen::Index n_ext = n + n_pre;

        Eigen::VectorXcd u = Eigen::VectorXcd::Zero(n_ext);
        for (Eigen::Index i = n_pre; i < n_ext; ++i) {
            const double t = static_cast<double>(i - n_pre) * dt;
            if (t > 0.0) u[i] = analytic_solution(src, t);
        }
        const SchemeSpec scheme = SchemeSpec::central_difference(dt);
        const TransformOperator fwd = build_operator(scheme, n_ext, TransformDirection::forward);
        const Eigen::VectorXcd tu = fwd.apply(u);

        double sup = 0.0;
        for (Eigen::Index i = 0; i <= n_pre; ++i) sup = std::max(sup, std::abs(tu[i]));
        result.dt.push_back(dt);
        result.sup.push_back(sup);
    }
    return result;
}

}  // namespace dlab
