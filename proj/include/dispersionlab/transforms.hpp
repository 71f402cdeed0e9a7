#pragma once

#include <Eigen/Dense>
#include <complex>

#include "dispersionlab/scheme.hpp"
#include "dispersionlab/time_series.hpp"

namespace dlab {

enum class TransformDirection { forward, inverse, inverse_alt };

/// Discrete time dispersion transform for fixed (scheme, N), realized as a
/// dense real N-by-N matrix up to kDenseLimit samples and as a matrix-free
/// two-stage summation above that. Both paths evaluate the same frequency
/// sums:
///
///   forward:  y_k = dw  sum_m exp(2 pi i w_m k dt)   sum_n f_n exp(-2 pi i q(w_m) n dt) dt
///   inverse:  y_k = dw  sum_m q'(w_m) exp(2 pi i q(w_m) k dt)  sum_n f_n exp(-2 pi i w_m n dt) dt
///
/// over the scheme's frequency grid on Omega. The matrix is real: the grids
/// are symmetric, so taking the real part after the inverse-FFT construction
/// only removes roundoff (and, for the staggered grid's unpaired endpoint,
/// amounts to the symmetric trapezoid rule).
///
/// Immutable after construction; apply() is safe to call concurrently.
class TransformOperator {
public:
    static constexpr Eigen::Index kDenseLimit = 8192;

    TransformDirection direction() const { return direction_; }
    const SchemeSpec& scheme() const { return scheme_; }
    Eigen::Index size() const { return n_; }
    bool is_dense() const { return dense_; }
    /// Dense realization; throws std::logic_error on the matrix-free path.
    const Eigen::MatrixXd& matrix() const;

    /// y = M x with y.dt = x.dt and y.t0 = x.t0. Requires x.size() == size()
    /// and an exact dt match with the scheme.
    TimeSeries apply(const TimeSeries& x) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;

    /// Evaluates the transform of x at arbitrary times (seconds, relative to
    /// sample 0 of the input grid). This is the continuous-variable synthesis
    /// the discrete formulas sample at t = k dt.
    Eigen::VectorXcd evaluate_at(const Eigen::VectorXcd& x, const Eigen::VectorXd& times) const;

    /// Frequency grid (omega_m) and the quadrature weights used by this
    /// operator; exposed for residual checks and kernels.
    const Eigen::VectorXd& grid_omega() const { return omega_; }
    double grid_domega() const { return domega_; }

private:
    friend TransformOperator build_operator(const SchemeSpec&, Eigen::Index, TransformDirection,
                                            Eigen::Index);
    TransformOperator() = default;

    void build_grids();
    void build_dense();
    Eigen::VectorXcd apply_matrix_free(const Eigen::VectorXcd& x) const;

    TransformDirection direction_ = TransformDirection::forward;
    SchemeSpec scheme_ = SchemeSpec::central_difference(1.0);
    Eigen::Index n_ = 0;
    bool dense_ = true;
    Eigen::MatrixXd matrix_;

    // per-mode tables: inner (analysis) and outer (synthesis) frequencies plus
    // quadrature weight, already including domega*dt and any q' factor
    Eigen::VectorXd omega_;
    Eigen::VectorXd freq_in_;
    Eigen::VectorXd freq_out_;
    Eigen::VectorXd weight_;
    double domega_ = 0.0;
};

/// Builds the discrete FTDT/ITDT. Preconditions: n >= 2; the central scheme
/// requires even n (callers pad explicitly). dense_limit is an implementation
/// knob for tests; the default matches the documented dense/matrix-free
/// cutover.
TransformOperator build_operator(const SchemeSpec& scheme, Eigen::Index n,
                                 TransformDirection direction,
                                 Eigen::Index dense_limit = TransformOperator::kDenseLimit);

/// The alternative inverse transform built from the regular grid on q(Omega)
/// with arcsin phases; central scheme only, M = floor(N/pi) retained modes.
TransformOperator build_alt_inverse(const SchemeSpec& scheme, Eigen::Index n,
                                    Eigen::Index dense_limit = TransformOperator::kDenseLimit);

/// Raised-cosine roll-off over the final `fraction` of the record:
/// sample n in the tapered span is scaled by (1 + cos(pi s))/2 with s running
/// linearly over the span. Earlier samples are untouched.
TimeSeries taper(const TimeSeries& x, double fraction);

/// Convolution kernel for non-matching schemes:
///   G(t) = integral over Omega of (2 pi i q~(w) + c) / (2 pi i q(w) + c) e^{2 pi i t w} dw
/// sampled at t = k dt for k = -(n-1)..(n-1), quadrature on scheme_main's
/// operator grid. Both schemes must share dt.
TimeSeries g_kernel(const SchemeSpec& scheme_main, const SchemeSpec& scheme_aux, double c,
                    Eigen::Index n);

/// Variant with the c-independent ratio q~(w)/q(w) (spatially varying
/// zero-order term); the removable singularity at w = 0 takes the limit
/// q~'(0)/q'(0).
TimeSeries g_kernel_ratio(const SchemeSpec& scheme_main, const SchemeSpec& scheme_aux,
                          Eigen::Index n);

/// Windowed Fourier sum dt * sum_k x_k exp(-2 pi i omega (t0 + k dt)); the
/// Riemann approximation of the transform of a [t0, t0+T)-supported signal.
std::complex<double> fourier_sum(const TimeSeries& x, double omega);

}  // namespace dlab
