#include "dispersionlab/scheme.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace dlab {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;
// Slack for endpoint evaluation: q' vanishes at the central-scheme edge, so
// domain checks accept a whisker of roundoff beyond Omega.
constexpr double kDomainSlack = 1.0 + 1e-12;

}  // namespace

SchemeSpec SchemeSpec::central_difference(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("SchemeSpec: dt must be positive");
    SchemeSpec s;
    s.name_ = "central";
    s.kind_ = Kind::central;
    s.dt_ = dt;
    s.coefficients_ = {{+1.0, +1.0 / (2.0 * dt)}, {-1.0, -1.0 / (2.0 * dt)}};
    s.omega_max_ = 1.0 / (4.0 * dt);
    s.q_omega_max_ = 1.0 / (kTwoPi * dt);
    return s;
}

SchemeSpec SchemeSpec::leapfrog(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("SchemeSpec: dt must be positive");
    SchemeSpec s;
    s.name_ = "leapfrog";
    s.kind_ = Kind::leapfrog;
    s.dt_ = dt;
    s.coefficients_ = {{+0.5, +1.0 / dt}, {-0.5, -1.0 / dt}};
    s.omega_max_ = 1.0 / (2.0 * dt);
    s.q_omega_max_ = 1.0 / (M_PI * dt);
    return s;
}

SchemeSpec SchemeSpec::from_coefficients(std::string name, double dt,
                                         std::vector<SchemeCoefficient> coefficients,
                                         double omega_max) {
    if (!(dt > 0.0)) throw std::invalid_argument("SchemeSpec: dt must be positive");
    if (!(omega_max > 0.0)) throw std::invalid_argument("SchemeSpec: omega_max must be positive");
    if (coefficients.empty()) throw std::invalid_argument("SchemeSpec: empty coefficient list");
    SchemeSpec s;
    s.name_ = std::move(name);
    s.kind_ = Kind::custom;
    s.dt_ = dt;
    s.coefficients_ = std::move(coefficients);
    s.omega_max_ = omega_max;
    s.validate_custom();
    s.q_omega_max_ = s.q_raw(omega_max);
    return s;
}

double SchemeSpec::q_raw(double omega) const {
    switch (kind_) {
        case Kind::central:
            return std::sin(kTwoPi * omega * dt_) / (kTwoPi * dt_);
        case Kind::leapfrog:
            return std::sin(M_PI * omega * dt_) / (M_PI * dt_);
        case Kind::custom: {
            // (1/2 pi i) sum_n c_n exp(2 pi i n omega dt); imaginary part of the
            // sum carries the value for an antisymmetric tap pattern.
            std::complex<double> acc(0.0, 0.0);
            for (const auto& c : coefficients_) {
                const double phase = kTwoPi * c.offset * omega * dt_;
                acc += c.weight * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            return acc.imag() / kTwoPi;
        }
    }
    return 0.0;
}

double SchemeSpec::q_prime_raw(double omega) const {
    switch (kind_) {
        case Kind::central:
            return std::cos(kTwoPi * omega * dt_);
        case Kind::leapfrog:
            return std::cos(M_PI * omega * dt_);
        case Kind::custom: {
            double acc = 0.0;
            for (const auto& c : coefficients_) {
                const double phase = kTwoPi * c.offset * omega * dt_;
                acc += c.weight * c.offset * dt_ * std::cos(phase);
            }
            return acc;
        }
    }
    return 0.0;
}

void SchemeSpec::check_in_omega(double omega) const {
    if (!std::isfinite(omega) || std::abs(omega) > omega_max_ * kDomainSlack)
        throw std::domain_error("SchemeSpec: omega outside Omega");
}

void SchemeSpec::check_in_q_omega(double xi) const {
    if (!std::isfinite(xi) || std::abs(xi) > q_omega_max_ * kDomainSlack)
        throw std::domain_error("SchemeSpec: xi outside q(Omega)");
}

double SchemeSpec::q(double omega) const {
    check_in_omega(omega);
    return q_raw(omega);
}

double SchemeSpec::q_prime(double omega) const {
    check_in_omega(omega);
    return q_prime_raw(omega);
}

double SchemeSpec::q_inv(double xi) const {
    check_in_q_omega(xi);
    switch (kind_) {
        case Kind::central:
            return std::asin(std::clamp(kTwoPi * xi * dt_, -1.0, 1.0)) / (kTwoPi * dt_);
        case Kind::leapfrog:
            return std::asin(std::clamp(M_PI * xi * dt_, -1.0, 1.0)) / (M_PI * dt_);
        case Kind::custom: {
            // q is strictly increasing and odd on Omega; bisect to 1e-14 relative.
            if (xi == 0.0) return 0.0;
            double lo = 0.0, hi = omega_max_;
            const double target = std::abs(xi);
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (q_raw(mid) < target)
                    lo = mid;
                else
                    hi = mid;
                if (hi - lo <= 1e-14 * omega_max_) break;
            }
            const double r = 0.5 * (lo + hi);
            return xi > 0.0 ? r : -r;
        }
    }
    return 0.0;
}

void SchemeSpec::validate_custom() const {
    constexpr int kGrid = 4096;
    double prev = -q_raw(omega_max_) * kDomainSlack;  // placeholder below q(-omega_max)
    bool first = true;
    double scale = 0.0;
    for (int i = 0; i <= kGrid; ++i) {
        const double omega = -omega_max_ + (2.0 * omega_max_ * i) / kGrid;
        std::complex<double> acc(0.0, 0.0);
        for (const auto& c : coefficients_) {
            const double phase = kTwoPi * c.offset * omega * dt_;
            acc += c.weight * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        // purely imaginary sum <=> real-valued q
        scale = std::max(scale, std::abs(acc));
        if (std::abs(acc.real()) > 1e-10 * std::max(scale, 1.0))
            throw std::invalid_argument("SchemeSpec: q is not real-valued on Omega");
        const double qv = acc.imag() / kTwoPi;
        const double qneg = [&] {
            std::complex<double> a2(0.0, 0.0);
            for (const auto& c : coefficients_) {
                const double phase = -kTwoPi * c.offset * omega * dt_;
                a2 += c.weight * std::complex<double>(std::cos(phase), std::sin(phase));
            }
            return a2.imag() / kTwoPi;
        }();
        if (std::abs(qv + qneg) > 1e-10 * std::max(std::abs(qv), 1.0 / dt_) * 1e-2 + 1e-12 / dt_)
            throw std::invalid_argument("SchemeSpec: q is not odd");
        if (!first && !(qv > prev))
            throw std::invalid_argument("SchemeSpec: q is not strictly increasing on Omega");
        prev = qv;
        first = false;
    }
    if (std::abs(q_raw(0.0)) > 1e-12 / dt_)
        throw std::invalid_argument("SchemeSpec: q(0) != 0");
}

}  // namespace dlab
