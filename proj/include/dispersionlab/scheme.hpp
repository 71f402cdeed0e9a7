#pragma once

#include <string>
#include <vector>

namespace dlab {

/// One stencil tap of a first-order time-derivative approximation:
/// D f(t) = sum_n weight_n * f(t + offset_n * dt). Offsets are integers or
/// half-integers; weights carry units of 1/s.
struct SchemeCoefficient {
    double offset = 0.0;
    double weight = 0.0;
};

/// A finite-difference approximation of d/dt together with its phase shift
/// function q, the derivative q', the inverse q^-1, and the symmetric
/// invertibility window Omega = [-omega_max, omega_max].
///
/// q(omega) = (1/2·pi·i) * sum_n c_n exp(2·pi·i·n·omega·dt)
///
/// Only real-valued, odd phase functions that are strictly increasing on
/// Omega are supported. The two built-in schemes use closed forms for q,
/// q' and q^-1; custom schemes evaluate the trigonometric sum and invert
/// by bisection.
class SchemeSpec {
public:
    enum class Kind { central, leapfrog, custom };

    /// Central difference: D f(t) = (f(t+dt) - f(t-dt)) / (2 dt).
    /// q(omega) = sin(2 pi omega dt) / (2 pi dt), Omega = [-1/(4 dt), 1/(4 dt)].
    static SchemeSpec central_difference(double dt);

    /// Staggered (leapfrog) difference: D f(t) = (f(t+dt/2) - f(t-dt/2)) / dt.
    /// q(omega) = sin(pi omega dt) / (pi dt), Omega = [-1/(2 dt), 1/(2 dt)].
    static SchemeSpec leapfrog(double dt);

    /// Builds a scheme from arbitrary taps. Validates numerically on a
    /// 4096-point grid that q is real on Omega, odd, q(0) = 0 and strictly
    /// increasing; throws std::invalid_argument otherwise.
    static SchemeSpec from_coefficients(std::string name, double dt,
                                        std::vector<SchemeCoefficient> coefficients,
                                        double omega_max);

    double q(double omega) const;        ///< phase shift, Hz; omega must lie in Omega
    double q_prime(double omega) const;  ///< dq/domega, dimensionless
    double q_inv(double xi) const;       ///< inverse on q(Omega), Hz

    /// Normalized phase polynomial q0(eta) = q(eta/dt)·dt, independent of dt.
    double q0(double eta) const { return q(eta / dt_) * dt_; }
    double q0_prime(double eta) const { return q_prime(eta / dt_); }
    double q0_inv(double xi) const { return q_inv(xi / dt_) * dt_; }

    double dt() const { return dt_; }
    double omega_max() const { return omega_max_; }
    /// Upper edge of q(Omega).
    double q_omega_max() const { return q_omega_max_; }
    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const std::vector<SchemeCoefficient>& coefficients() const { return coefficients_; }

private:
    SchemeSpec() = default;

    double q_raw(double omega) const;        // trig sum, no domain check
    double q_prime_raw(double omega) const;
    void check_in_omega(double omega) const;
    void check_in_q_omega(double xi) const;
    void validate_custom() const;

    std::string name_;
    Kind kind_ = Kind::custom;
    double dt_ = 0.0;
    double omega_max_ = 0.0;
    double q_omega_max_ = 0.0;
    std::vector<SchemeCoefficient> coefficients_;
};

}  // namespace dlab
