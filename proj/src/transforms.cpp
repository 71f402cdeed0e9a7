#include "dispersionlab/transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dlab {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Unnormalized inverse DFT of length len: out[n] = sum_m in[m] e^{+2 pi i m n / len}.
struct InverseFftPlan {
    explicit InverseFftPlan(Eigen::Index len) : len_(len) {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        in_ = fftw_alloc_complex(static_cast<size_t>(len));
        out_ = fftw_alloc_complex(static_cast<size_t>(len));
        plan_ = fftw_plan_dft_1d(static_cast<int>(len), in_, out_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~InverseFftPlan() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    InverseFftPlan(const InverseFftPlan&) = delete;
    InverseFftPlan& operator=(const InverseFftPlan&) = delete;

    // thread-safe with caller-owned buffers of matching alignment
    void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }

    Eigen::Index len_;
    fftw_complex* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

struct FftwBuffer {
    explicit FftwBuffer(Eigen::Index len) : data(fftw_alloc_complex(static_cast<size_t>(len))) {}
    ~FftwBuffer() { fftw_free(data); }
    fftw_complex* data;
};

// sum_n x_n e^{i n theta} with periodic resynchronization of the rotation
// recurrence; exact enough for 1e-13-level comparisons at any n.
std::complex<double> phased_sum(const Eigen::VectorXcd& x, double theta) {
    constexpr Eigen::Index kResync = 256;
    std::complex<double> acc(0.0, 0.0);
    const std::complex<double> step(std::cos(theta), std::sin(theta));
    std::complex<double> rot(1.0, 0.0);
    for (Eigen::Index n = 0; n < x.size(); ++n) {
        if (n % kResync == 0) {
            const double a = theta * static_cast<double>(n);
            rot = {std::cos(a), std::sin(a)};
        }
        acc += x[n] * rot;
        rot *= step;
    }
    return acc;
}

}  // namespace

const Eigen::MatrixXd& TransformOperator::matrix() const {
    if (!dense_) throw std::logic_error("TransformOperator: matrix-free operator has no dense matrix");
    return matrix_;
}

void TransformOperator::build_grids() {
    const double dt = scheme_.dt();
    const Eigen::Index n = n_;
    std::vector<double> omega;

    if (direction_ == TransformDirection::inverse_alt) {
        // regular grid on q(Omega): xi_m = m/(2 N dt), |m| <= floor(N/pi)
        const Eigen::Index m_max = static_cast<Eigen::Index>(static_cast<double>(n) / M_PI);
        domega_ = 1.0 / (2.0 * static_cast<double>(n) * dt);
        for (Eigen::Index m = -m_max; m <= m_max; ++m)
            omega.push_back(static_cast<double>(m) * domega_);
        omega_ = Eigen::Map<Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
        freq_out_ = omega_;
        freq_in_.resize(omega_.size());
        weight_.resize(omega_.size());
        for (Eigen::Index i = 0; i < omega_.size(); ++i) {
            freq_in_[i] = scheme_.q_inv(omega_[i]);
            weight_[i] = domega_ * dt;
        }
        return;
    }

    switch (scheme_.kind()) {
        case SchemeSpec::Kind::central:
            // omega_m = m/(2 N dt), m = -N/2..N/2
            domega_ = 1.0 / (2.0 * static_cast<double>(n) * dt);
            for (Eigen::Index m = -n / 2; m <= n / 2; ++m)
                omega.push_back(static_cast<double>(m) * domega_);
            break;
        case SchemeSpec::Kind::leapfrog:
            // omega_m = m/(2 N dt); m = -N+1..N for the inverse sum and
            // m = -N..N-1 for the forward one (shifted one index)
            domega_ = 1.0 / (2.0 * static_cast<double>(n) * dt);
            if (direction_ == TransformDirection::inverse) {
                for (Eigen::Index m = -n + 1; m <= n; ++m)
                    omega.push_back(static_cast<double>(m) * domega_);
            } else {
                for (Eigen::Index m = -n; m <= n - 1; ++m)
                    omega.push_back(static_cast<double>(m) * domega_);
            }
            break;
        case SchemeSpec::Kind::custom:
            // uniform 2N-point grid over Omega; a quadrature choice, not a
            // scheme property
            domega_ = scheme_.omega_max() / static_cast<double>(n);
            for (Eigen::Index m = -n; m <= n; ++m)
                omega.push_back(static_cast<double>(m) * domega_);
            break;
    }
    omega_ = Eigen::Map<Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
    freq_in_.resize(omega_.size());
    freq_out_.resize(omega_.size());
    weight_.resize(omega_.size());
    for (Eigen::Index i = 0; i < omega_.size(); ++i) {
        const double w = omega_[i];
        const double q = scheme_.q(w);
        if (direction_ == TransformDirection::forward) {
            freq_in_[i] = q;
            freq_out_[i] = w;
            weight_[i] = domega_ * dt;
        } else {
            freq_in_[i] = w;
            freq_out_[i] = q;
            weight_[i] = domega_ * dt * scheme_.q_prime(w);
        }
    }
}

void TransformOperator::build_dense() {
    const Eigen::Index n = n_;
    matrix_.resize(n, n);

    const bool fft_aligned = scheme_.kind() != SchemeSpec::Kind::custom;
    if (!fft_aligned) {
        // P[k][m] = w_m e^{2 pi i out_m k dt}; Q[m][j] = e^{-2 pi i in_m j dt}
        const Eigen::Index nm = omega_.size();
        Eigen::MatrixXcd synth(n, nm), anal(nm, n);
        const double dt = scheme_.dt();
        for (Eigen::Index m = 0; m < nm; ++m) {
            for (Eigen::Index k = 0; k < n; ++k) {
                const double a = kTwoPi * freq_out_[m] * static_cast<double>(k) * dt;
                synth(k, m) = weight_[m] * std::complex<double>(std::cos(a), std::sin(a));
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                const double a = -kTwoPi * freq_in_[m] * static_cast<double>(j) * dt;
                anal(m, j) = std::complex<double>(std::cos(a), std::sin(a));
            }
        }
        matrix_ = (synth * anal).real();
        return;
    }

    // Appendix-style construction: length-2N inverse FFT per column (forward,
    // alternative inverse) or per row (inverse), then the real part, then
    // truncation to N x N.
    const Eigen::Index len = 2 * n;
    const double dt = scheme_.dt();
    InverseFftPlan plan(len);
    const bool row_wise = direction_ == TransformDirection::inverse;

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        FftwBuffer in(len), out(len);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < len; ++i) in.data[i][0] = in.data[i][1] = 0.0;
            for (Eigen::Index m = 0; m < omega_.size(); ++m) {
                // FFT bin index: the inverse build places mode -m, the forward
                // build mode +m, both reduced mod 2N
                const long bin_raw = std::lround(omega_[m] / domega_);
                const long bin = ((row_wise ? -bin_raw : bin_raw) % len + len) % len;
                const double phase = row_wise
                                         ? kTwoPi * freq_out_[m] * static_cast<double>(j) * dt
                                         : -kTwoPi * freq_in_[m] * static_cast<double>(j) * dt;
                in.data[bin][0] += weight_[m] * std::cos(phase);
                in.data[bin][1] += weight_[m] * std::sin(phase);
            }
            plan.execute(in.data, out.data);
            if (row_wise) {
                for (Eigen::Index i = 0; i < n; ++i) matrix_(j, i) = out.data[i][0];
            } else {
                for (Eigen::Index i = 0; i < n; ++i) matrix_(i, j) = out.data[i][0];
            }
        }
    }
}

Eigen::VectorXcd TransformOperator::apply_matrix_free(const Eigen::VectorXcd& x) const {
    const Eigen::Index nm = omega_.size();
    const double dt = scheme_.dt();
    Eigen::VectorXcd modes(nm);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index m = 0; m < nm; ++m)
        modes[m] = weight_[m] * phased_sum(x, -kTwoPi * freq_in_[m] * dt);

    Eigen::VectorXcd y(n_);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index k = 0; k < n_; ++k) {
        std::complex<double> acc(0.0, 0.0);
        const double t = static_cast<double>(k) * dt;
        for (Eigen::Index m = 0; m < nm; ++m) {
            const double a = kTwoPi * freq_out_[m] * t;
            acc += modes[m] * std::complex<double>(std::cos(a), std::sin(a));
        }
        y[k] = acc;
    }
    // the grids are symmetric: the exact operator is real
    for (Eigen::Index k = 0; k < n_; ++k) y[k].imag(0.0);
    return y;
}

Eigen::VectorXcd TransformOperator::apply(const Eigen::VectorXcd& x) const {
    if (x.size() != n_) throw std::invalid_argument("TransformOperator: length mismatch");
    if (dense_) {
        Eigen::VectorXcd y(n_);
        y.real() = matrix_ * x.real();
        y.imag() = matrix_ * x.imag();
        return y;
    }
    // real matrix acting on complex data: transform real and imaginary parts
    Eigen::VectorXcd xr(n_), xi(n_);
    xr.real() = x.real();
    xr.imag().setZero();
    xi.real() = x.imag();
    xi.imag().setZero();
    const Eigen::VectorXcd yr = apply_matrix_free(xr);
    const Eigen::VectorXcd yi = apply_matrix_free(xi);
    Eigen::VectorXcd y(n_);
    y.real() = yr.real();
    y.imag() = yi.real();
    return y;
}

Eigen::VectorXd TransformOperator::apply(const Eigen::VectorXd& x) const {
    if (x.size() != n_) throw std::invalid_argument("TransformOperator: length mismatch");
    if (dense_) return matrix_ * x;
    Eigen::VectorXcd xc = x.cast<std::complex<double>>();
    return apply_matrix_free(xc).real();
}

TimeSeries TransformOperator::apply(const TimeSeries& x) const {
    if (x.size() != n_) throw std::invalid_argument("TransformOperator: length mismatch");
    if (x.dt() != scheme_.dt()) throw std::invalid_argument("TransformOperator: dt mismatch");
    return TimeSeries(apply(x.samples()), x.dt(), x.t0());
}

Eigen::VectorXcd TransformOperator::evaluate_at(const Eigen::VectorXcd& x,
                                                const Eigen::VectorXd& times) const {
    if (x.size() != n_) throw std::invalid_argument("TransformOperator: length mismatch");
    const Eigen::Index nm = omega_.size();
    const double dt = scheme_.dt();
    Eigen::VectorXcd modes(nm);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index m = 0; m < nm; ++m)
        modes[m] = weight_[m] * phased_sum(x, -kTwoPi * freq_in_[m] * dt);

    Eigen::VectorXcd y(times.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        std::complex<double> acc(0.0, 0.0);
        for (Eigen::Index m = 0; m < nm; ++m) {
            const double a = kTwoPi * freq_out_[m] * times[j];
            acc += modes[m] * std::complex<double>(std::cos(a), std::sin(a));
        }
        y[j] = acc;
    }
    return y;
}

TransformOperator build_operator(const SchemeSpec& scheme, Eigen::Index n,
                                 TransformDirection direction, Eigen::Index dense_limit) {
    if (n < 2) throw std::invalid_argument("build_operator: n must be at least 2");
    if (scheme.kind() == SchemeSpec::Kind::central && n % 2 != 0)
        throw std::invalid_argument("build_operator: central scheme requires even n");
    if (direction == TransformDirection::inverse_alt)
        return build_alt_inverse(scheme, n, dense_limit);

    TransformOperator op;
    op.direction_ = direction;
    op.scheme_ = scheme;
    op.n_ = n;
    op.build_grids();
    op.dense_ = n <= dense_limit;
    if (op.dense_) op.build_dense();
    return op;
}

TransformOperator build_alt_inverse(const SchemeSpec& scheme, Eigen::Index n,
                                    Eigen::Index dense_limit) {
    if (scheme.kind() != SchemeSpec::Kind::central)
        throw std::invalid_argument("build_alt_inverse: supported for the central scheme only");
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("build_alt_inverse: n must be even and at least 2");
    TransformOperator op;
    op.direction_ = TransformDirection::inverse_alt;
    op.scheme_ = scheme;
    op.n_ = n;
    op.build_grids();
    op.dense_ = n <= dense_limit;
    if (op.dense_) op.build_dense();
    return op;
}

TimeSeries taper(const TimeSeries& x, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw std::invalid_argument("taper: fraction must lie in (0,1)");
    const Eigen::Index n = x.size();
    const Eigen::Index span = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(n)));
    Eigen::VectorXcd y = x.samples();
    if (span > 0) {
        const Eigen::Index n0 = n - span;
        for (Eigen::Index i = n0; i < n; ++i) {
            const double s = static_cast<double>(i - n0) / static_cast<double>(span);
            y[i] *= 0.5 * (1.0 + std::cos(M_PI * s));
        }
    }
    return x.with_samples(std::move(y));
}

namespace {

TimeSeries g_kernel_impl(const SchemeSpec& main, const SchemeSpec& aux, Eigen::Index n,
                         const std::function<std::complex<double>(double, double)>& ratio) {
    if (main.dt() != aux.dt()) throw std::invalid_argument("g_kernel: schemes must share dt");
    if (n < 2) throw std::invalid_argument("g_kernel: n must be at least 2");
    if (main.kind() == SchemeSpec::Kind::central && n % 2 != 0)
        throw std::invalid_argument("g_kernel: central scheme requires even n");

    // quadrature on scheme_main's inverse-operator grid
    const TransformOperator op = build_operator(main, n, TransformDirection::inverse, 0);
    const Eigen::VectorXd& omega = op.grid_omega();
    const double domega = op.grid_domega();
    const double dt = main.dt();

    Eigen::VectorXcd vals(omega.size());
    for (Eigen::Index m = 0; m < omega.size(); ++m) vals[m] = ratio(main.q(omega[m]), omega[m]);

    const Eigen::Index nk = 2 * n - 1;
    Eigen::VectorXcd g(nk);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index j = 0; j < nk; ++j) {
        const double t = static_cast<double>(j - (n - 1)) * dt;
        std::complex<double> acc(0.0, 0.0);
        for (Eigen::Index m = 0; m < omega.size(); ++m) {
            const double a = kTwoPi * omega[m] * t;
            acc += vals[m] * std::complex<double>(std::cos(a), std::sin(a));
        }
        g[j] = domega * acc.real();
    }
    return TimeSeries(std::move(g), dt, -static_cast<double>(n - 1) * dt);
}

}  // namespace

TimeSeries g_kernel(const SchemeSpec& scheme_main, const SchemeSpec& scheme_aux, double c,
                    Eigen::Index n) {
    const SchemeSpec aux = scheme_aux;
    return g_kernel_impl(scheme_main, scheme_aux, n, [&aux, c](double q, double omega) {
        const std::complex<double> num(c, kTwoPi * aux.q(omega));
        const std::complex<double> den(c, kTwoPi * q);
        return num / den;
    });
}

TimeSeries g_kernel_ratio(const SchemeSpec& scheme_main, const SchemeSpec& scheme_aux,
                          Eigen::Index n) {
    const SchemeSpec aux = scheme_aux;
    const SchemeSpec main = scheme_main;
    return g_kernel_impl(scheme_main, scheme_aux, n, [&aux, &main](double q, double omega) {
        if (std::abs(q) < 1e-300)
            return std::complex<double>(aux.q_prime(omega) / main.q_prime(omega), 0.0);
        return std::complex<double>(aux.q(omega) / q, 0.0);
    });
}

std::complex<double> fourier_sum(const TimeSeries& x, double omega) {
    std::complex<double> acc(0.0, 0.0);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double a = -kTwoPi * omega * x.time(k);
        acc += x[k] * std::complex<double>(std::cos(a), std::sin(a));
    }
    return acc * x.dt();
}

}  // namespace dlab
