#pragma once

#include <array>
#include <utility>
#include <vector>

#include "dispersionlab/ode_lab.hpp"
#include "dispersionlab/time_series.hpp"

namespace dlab {

/// Gaussian wave packet centered at (t0, eta0) in normalized phase space with
/// semiclassical parameter h (identified with the sampling step):
///   phi(t) = (2/h)^{1/4} exp(2 pi i (t - t0) eta0 / h) exp(-pi (t - t0)^2 / h).
/// L2-normalized; eta0 is frequency in cycles per sample (omega = eta0/h Hz).
struct WavePacket {
    double t0 = 1.0;
    double eta0 = 0.1;
    double h = 5e-4;

    WavePacket(double t0_, double eta0_, double h_);
};

/// Samples the packet on an n-point grid starting at grid_t0 with step dt.
/// The grid must cover [t0 - 8 sqrt(h), t0 + 8 sqrt(h)].
TimeSeries sample_packet(const WavePacket& p, Eigen::Index n, double dt, double grid_t0 = 0.0);

/// Scaled Fourier transform F_h(f)(eta) = h^{-1/2} F(f)(eta/h), realized as a
/// DFT with dt quadrature weights. Requires h == x.dt. The output grid is
/// eta_j = j/N for j = -floor(N/2) .. N-1-floor(N/2), stored ascending
/// (series step 1/N, origin -floor(N/2)/N).
TimeSeries scaled_fourier(const TimeSeries& x, double h);

/// Phase-space center estimate: modulus-squared centroids in t and (via the
/// scaled Fourier transform) in eta. Throws on an all-zero signal.
std::pair<double, double> estimate_center(const TimeSeries& x, double h);

/// Canonical-map experiment: transforms the packet for each step size and
/// compares the estimated phase-space centers against the analytic images
///   inverse: (t0 / q0'(eta0), q0(eta0))
///   forward: (t0 * q0'(q0^-1(eta0)), q0^-1(eta0))
/// for the central scheme's normalized phase function.
struct WavePacketMapResult {
    std::vector<double> dt;
    std::vector<std::array<double, 2>> itdt_center, ftdt_center;
    std::array<double, 2> itdt_target{}, ftdt_target{};
    std::vector<double> itdt_error, ftdt_error;  ///< combined relative center error
};

WavePacketMapResult run_wavepacket_experiment(double t0, double eta0,
                                              const std::vector<double>& dt_list, double t_max);

struct LemmaInitResult {
    std::vector<double> dt;
    std::vector<double> sup;  ///< sup over t <= 0 of |forward transform of u|
};

/// Initial-condition error probe: samples the analytic model-equation
/// solution on a grid extended by half a record of zeros before t = 0,
/// applies the forward transform rebuilt at the extended length, and reports
/// the sup of the modulus over t <= 0 for each step size.
LemmaInitResult lemma_init_check(const GaussianSource& src, const std::vector<double>& dt_list,
                                 double t_max);

}  // namespace dlab
