#include "dispersionlab/ode_lab.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "dispersionlab/quadrature.hpp"
#include "dispersionlab/transforms.hpp"

namespace dlab {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

MethodError window_error(const Eigen::VectorXd& err, double dt, double t_hi) {
    MethodError e;
    Eigen::Index count = 0;
    double sq = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        if (static_cast<double>(i) * dt > t_hi + 1e-12) break;
        e.max_abs = std::max(e.max_abs, err[i]);
        sq += err[i] * err[i];
        ++count;
    }
    e.rms = count > 0 ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
    return e;
}

}  // namespace

GaussianSource::GaussianSource(double mu_, double sigma2_, double a_)
    : mu(mu_), sigma2(sigma2_), a(a_) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("GaussianSource: sigma2 must be positive");
    if (!std::isfinite(mu) || !std::isfinite(a))
        throw std::invalid_argument("GaussianSource: non-finite parameter");
}

std::complex<double> GaussianSource::operator()(double t) const {
    const double envelope =
        std::exp(-(t - mu) * (t - mu) / (2.0 * sigma2)) / std::sqrt(kTwoPi * sigma2);
    const double phase = kTwoPi * a * (t - mu);
    return envelope * std::complex<double>(std::cos(phase), std::sin(phase));
}

TimeSeries GaussianSource::sample(double dt, Eigen::Index n, double t0) const {
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = (*this)(t0 + static_cast<double>(i) * dt);
    return TimeSeries(std::move(v), dt, t0);
}

std::complex<double> analytic_solution(const GaussianSource& src, double t, double abs_tol) {
    const double sigma = std::sqrt(src.sigma2);
    const double lo = src.mu - 12.0 * sigma;
    const double hi = std::min(t, src.mu + 12.0 * sigma);
    if (hi <= lo) return {0.0, 0.0};
    return integrate_gk(
        [&src, t](double s) { return std::exp(s - t) * src(s); }, lo, hi, abs_tol);
}

TimeSeries solve_central_fd(const TimeSeries& g) {
    const Eigen::Index n = g.size();
    const double dt = g.dt();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    std::complex<double> v_prev(0.0, 0.0);  // v_{-1}
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const std::complex<double> v_next = v_prev + 2.0 * dt * (g[k] - v[k]);
        v_prev = v[k];
        v[k + 1] = v_next;
    }
    return TimeSeries(std::move(v), dt, g.t0());
}

TimeSeries solve_forward_euler(const TimeSeries& f) {
    const Eigen::Index n = f.size();
    const double dt = f.dt();
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
    for (Eigen::Index k = 0; k + 1 < n; ++k) v[k + 1] = v[k] + dt * (f[k] - v[k]);
    return TimeSeries(std::move(v), dt, f.t0());
}

double theorem_residual(const TimeSeries& v, const TimeSeries& g, const SchemeSpec& scheme) {
    if (v.size() != g.size() || v.dt() != g.dt())
        throw std::invalid_argument("theorem_residual: v and g must share the grid");
    const Eigen::Index n = v.size();
    const double dt = v.dt();
    const double domega = 1.0 / (2.0 * static_cast<double>(n) * dt);
    double max_resid = 0.0, max_scale = 0.0;
    for (Eigen::Index m = -n / 2; m <= n / 2; ++m) {
        const double omega = static_cast<double>(m) * domega;
        const std::complex<double> am_v = fourier_sum(v, omega);
        const std::complex<double> am_g = fourier_sum(g, omega);
        const std::complex<double> lhs =
            std::complex<double>(1.0, kTwoPi * scheme.q(omega)) * am_v;
        max_resid = std::max(max_resid, std::abs(lhs - am_g));
        max_scale = std::max(max_scale, std::abs(am_g));
    }
    return max_resid / max_scale;
}

ErrorReport run_ode_experiment(const OdeExperimentConfig& cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0))
        throw std::invalid_argument("run_ode_experiment: dt and t_max must be positive");
    const double steps = cfg.t_max / cfg.dt;
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(n)) > 1e-9 * steps)
        throw std::invalid_argument("run_ode_experiment: t_max/dt must be an integer");
    if (n % 2 != 0)
        throw std::invalid_argument("run_ode_experiment: t_max/dt must be even (central scheme)");
    if (cfg.taper_fraction && !(*cfg.taper_fraction > 0.0 && *cfg.taper_fraction < 1.0))
        throw std::invalid_argument("run_ode_experiment: taper_fraction must lie in (0,1)");

    const auto clock_start = std::chrono::steady_clock::now();
    const GaussianSource src(cfg.mu, cfg.sigma2, cfg.a);
    const TimeSeries f = src.sample(cfg.dt, n);

    Eigen::VectorXcd u(n);
    for (Eigen::Index i = 0; i < n; ++i)
        u[i] = analytic_solution(src, static_cast<double>(i) * cfg.dt);
    const TimeSeries analytic(u, cfg.dt, 0.0);

    const SchemeSpec scheme = SchemeSpec::central_difference(cfg.dt);
    const TransformOperator fwd = build_operator(scheme, n, TransformDirection::forward);
    const TransformOperator inv = build_operator(scheme, n, TransformDirection::inverse);

    const TimeSeries g = fwd.apply(f);
    const TimeSeries v = solve_central_fd(g);
    const TimeSeries corrected_no_taper = inv.apply(v);
    const TimeSeries corrected =
        cfg.taper_fraction ? inv.apply(taper(v, *cfg.taper_fraction)) : corrected_no_taper;

    ErrorReport report;
    report.solutions.emplace("analytic", analytic);
    report.solutions.emplace("forward_euler", solve_forward_euler(f));
    report.solutions.emplace("central_fd", solve_central_fd(f));
    report.solutions.emplace("corrected_no_taper", corrected_no_taper);
    report.solutions.emplace("corrected", corrected);

    report.report_window_end = 0.9 * cfg.t_max;
    for (const auto& [name, series] : report.solutions) {
        if (name == "analytic") continue;
        Eigen::VectorXd err(n);
        for (Eigen::Index i = 0; i < n; ++i) err[i] = std::abs(series[i] - analytic[i]);
        report.report_window[name] = window_error(err, cfg.dt, report.report_window_end);
        report.full_window[name] = window_error(err, cfg.dt, cfg.t_max);
        report.error_series.emplace(name, std::move(err));
    }
    report.theorem_residual = theorem_residual(v, g, scheme);
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return report;
}

NonmatchingReport verify_nonmatching(const NonmatchingConfig& cfg) {
    if (cfg.n < 4) throw std::invalid_argument("verify_nonmatching: n too small");
    if (cfg.n % 2 != 0) throw std::invalid_argument("verify_nonmatching: n must be even");
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("verify_nonmatching: dt must be positive");

    // system matrix [[L11, L12], [L21, -c]]; require decay
    Eigen::Matrix2d sys;
    sys << cfg.l11, cfg.l12, cfg.l21, -cfg.c;
    const Eigen::EigenSolver<Eigen::Matrix2d> es(sys);
    for (int i = 0; i < 2; ++i) {
        if (es.eigenvalues()[i].real() >= 0.0)
            throw std::invalid_argument("verify_nonmatching: system is not decaying");
    }
    const Eigen::Matrix2cd vec = es.eigenvectors();
    const Eigen::Matrix2cd vec_inv = vec.inverse();
    const Eigen::Vector2cd lambda = es.eigenvalues();
    const Eigen::Vector2cd b = vec_inv * Eigen::Vector2cd(1.0, 0.0);

    const Eigen::Index n = cfg.n;
    const double dt = cfg.dt;
    const GaussianSource src(5.0, 0.1, 0.0);
    const double sigma = std::sqrt(src.sigma2);
    const double lo = src.mu - 12.0 * sigma;

    // u(t) = V diag(b_k * int e^{lambda_k (t-s)} f(s) ds) summed over modes
    Eigen::VectorXcd u1(n), u2(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double hi = std::min(t, src.mu + 12.0 * sigma);
        Eigen::Vector2cd modal = Eigen::Vector2cd::Zero();
        if (hi > lo) {
            for (int k = 0; k < 2; ++k) {
                const std::complex<double> lam = lambda[k];
                modal[k] = b[k] * integrate_gk(
                                      [&src, lam, t](double s) {
                                          return std::exp(lam * (t - s)) * src(s);
                                      },
                                      lo, hi, 1e-15);
            }
        }
        const Eigen::Vector2cd ui = vec * modal;
        u1[i] = ui[0];
        u2[i] = ui[1];
    }

    const SchemeSpec main = SchemeSpec::central_difference(dt);
    const SchemeSpec aux = SchemeSpec::leapfrog(dt);
    const TransformOperator fwd = build_operator(main, n, TransformDirection::forward);

    const Eigen::VectorXcd f = src.sample(dt, n).samples();
    const Eigen::VectorXd g = fwd.apply(f).real();
    const Eigen::VectorXd v1 = fwd.apply(Eigen::VectorXd(u1.real()));
    const Eigen::VectorXd v2 = fwd.apply(Eigen::VectorXd(u2.real()));

    // staggered derivative of v2 at integer nodes from half-grid samples
    Eigen::VectorXd half_times(n + 1);
    for (Eigen::Index j = 0; j <= n; ++j)
        half_times[j] = (static_cast<double>(j) - 0.5) * dt;
    const Eigen::VectorXd v2_half = fwd.evaluate_at(u2, half_times).real();

    const TimeSeries gk = g_kernel(main, aux, cfg.c, n);
    // (v1 * G)(t_i) = dt sum_j v1[j] G[(i-j) dt]
    Eigen::VectorXd conv = Eigen::VectorXd::Zero(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            acc += v1[j] * gk[(i - j) + (n - 1)].real();
        conv[i] = dt * acc;
    }

    NonmatchingReport rep;
    rep.signal_scale = v1.cwiseAbs().maxCoeff();
    const Eigen::Index margin = 5;
    for (Eigen::Index i = margin; i < n - margin; ++i) {
        const double dv1 = (v1[i + 1] - v1[i - 1]) / (2.0 * dt);
        rep.residual_main = std::max(
            rep.residual_main,
            std::abs(dv1 - cfg.l11 * v1[i] - cfg.l12 * v2[i] - g[i]));
        const double dv2 = (v2_half[i + 1] - v2_half[i]) / dt;
        rep.residual_aux_with_g =
            std::max(rep.residual_aux_with_g, std::abs(dv2 + cfg.c * v2[i] - cfg.l21 * conv[i]));
        rep.residual_aux_without_g =
            std::max(rep.residual_aux_without_g, std::abs(dv2 + cfg.c * v2[i] - cfg.l21 * v1[i]));
    }
    return rep;
}

}  // namespace dlab
