#include "dispersionlab/wave_lab.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "dispersionlab/scheme.hpp"
#include "dispersionlab/transforms.hpp"

namespace dlab {
namespace {

constexpr Eigen::Index kHalo = 6;
constexpr double kSpongeRate = 0.0053;

double harmonic4(double a, double b, double c, double d) {
    if (a <= 0.0 || b <= 0.0 || c <= 0.0 || d <= 0.0) return 0.0;
    return 4.0 / (1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
}

void write_f64(const std::filesystem::path& p, const Eigen::ArrayXd& a) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("GridModel: cannot open " + p.string());
    out.write(reinterpret_cast<const char*>(a.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(a.size())));
    if (!out) throw std::runtime_error("GridModel: write failed for " + p.string());
}

Eigen::ArrayXd read_f64(const std::filesystem::path& p, Eigen::Index n) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("GridModel: cannot open " + p.string());
    Eigen::ArrayXd a(n);
    in.read(reinterpret_cast<char*>(a.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(n)));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * static_cast<size_t>(n)))
        throw std::runtime_error("GridModel: short read from " + p.string());
    return a;
}

}  // namespace

double cfl_max_dt(double vmax, double dx, double dz, const StencilWeights& w) {
    const double s = w.abs_sum();
    const double tx = std::isinf(dx) ? 0.0 : s / dx;
    const double tz = std::isinf(dz) ? 0.0 : s / dz;
    return 1.0 / (vmax * std::sqrt(tx * tx + tz * tz));
}

double ricker(double fpeak, double delay, double t) {
    if (!(fpeak > 0.0)) throw std::invalid_argument("ricker: fpeak must be positive");
    const double x = M_PI * fpeak * (t - delay);
    return (1.0 - 2.0 * x * x) * std::exp(-x * x);
}

TimeSeries ricker_wavelet(double fpeak, double delay, double dt, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = ricker(fpeak, delay, static_cast<double>(i) * dt);
    return TimeSeries(v, dt, 0.0);
}

GridModel GridModel::uniform(Eigen::Index nx, Eigen::Index nz, double dx, double dz, double rho,
                             double vp, double vs, double qp, double qs,
                             std::vector<double> tau_sigma) {
    GridModel m;
    m.nx = nx;
    m.nz = nz;
    m.dx = dx;
    m.dz = dz;
    const Eigen::Index n = nx * nz;
    m.rho = Eigen::ArrayXd::Constant(n, rho);
    m.vp = Eigen::ArrayXd::Constant(n, vp);
    m.vs = Eigen::ArrayXd::Constant(n, vs);
    m.qp = Eigen::ArrayXd::Constant(n, qp);
    m.qs = Eigen::ArrayXd::Constant(n, qs);
    m.tau_sigma = std::move(tau_sigma);
    m.validate();
    return m;
}

void GridModel::validate() const {
    if (nx < 1 || nz < 1) throw std::invalid_argument("GridModel: empty grid");
    if (!(dx > 0.0) || !(dz > 0.0)) throw std::invalid_argument("GridModel: bad spacing");
    const Eigen::Index n = nx * nz;
    if (rho.size() != n || vp.size() != n || vs.size() != n || qp.size() != n || qs.size() != n)
        throw std::invalid_argument("GridModel: field size mismatch");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(rho[i] > 0.0) || !(vp[i] > 0.0)) throw std::invalid_argument("GridModel: rho and vp must be positive");
        if (!(vs[i] >= 0.0) || vs[i] > vp[i]) throw std::invalid_argument("GridModel: need 0 <= vs <= vp");
        if (nz > 1 && !(vs[i] > 0.0)) throw std::invalid_argument("GridModel: vs must be positive on 2D grids");
        if (!(qp[i] > 0.0) || !(qs[i] > 0.0)) throw std::invalid_argument("GridModel: quality factors must be positive");
    }
    for (double t : tau_sigma)
        if (!(t > 0.0)) throw std::invalid_argument("GridModel: relaxation times must be positive");
}

std::vector<double> GridModel::log_spaced_relaxation(double fpeak, int n) {
    if (n < 1 || !(fpeak > 0.0)) throw std::invalid_argument("log_spaced_relaxation: bad arguments");
    std::vector<double> tau(static_cast<size_t>(n));
    const double lo = std::log(fpeak / 4.0), hi = std::log(4.0 * fpeak);
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? fpeak : std::exp(lo + (hi - lo) * i / (n - 1));
        tau[static_cast<size_t>(i)] = 1.0 / (2.0 * M_PI * f);
    }
    return tau;
}

void GridModel::save(const std::filesystem::path& dir) const {
    validate();
    std::filesystem::create_directories(dir);
    nlohmann::json desc;
    desc["nx"] = nx;
    desc["nz"] = nz;
    desc["dx"] = dx;
    desc["dz"] = dz;
    desc["tau_sigma"] = tau_sigma;
    desc["fields"] = {{"rho", "rho.f64"}, {"vp", "vp.f64"}, {"vs", "vs.f64"},
                      {"qp", "qp.f64"},   {"qs", "qs.f64"}};
    std::ofstream out(dir / "model.json");
    out << desc.dump(2) << '\n';
    write_f64(dir / "rho.f64", rho);
    write_f64(dir / "vp.f64", vp);
    write_f64(dir / "vs.f64", vs);
    write_f64(dir / "qp.f64", qp);
    write_f64(dir / "qs.f64", qs);
}

GridModel GridModel::load(const std::filesystem::path& dir) {
    std::ifstream in(dir / "model.json");
    if (!in) throw std::runtime_error("GridModel: cannot open " + (dir / "model.json").string());
    nlohmann::json desc = nlohmann::json::parse(in);
    GridModel m;
    m.nx = desc.at("nx").get<Eigen::Index>();
    m.nz = desc.at("nz").get<Eigen::Index>();
    m.dx = desc.at("dx").get<double>();
    m.dz = desc.at("dz").get<double>();
    m.tau_sigma = desc.at("tau_sigma").get<std::vector<double>>();
    const auto& fields = desc.at("fields");
    const Eigen::Index n = m.nx * m.nz;
    m.rho = read_f64(dir / fields.at("rho").get<std::string>(), n);
    m.vp = read_f64(dir / fields.at("vp").get<std::string>(), n);
    m.vs = read_f64(dir / fields.at("vs").get<std::string>(), n);
    m.qp = read_f64(dir / fields.at("qp").get<std::string>(), n);
    m.qs = read_f64(dir / fields.at("qs").get<std::string>(), n);
    m.validate();
    return m;
}

SimState::SimState(const GridModel& model)
    : nx_(model.nx),
      nz_(model.nz),
      px_(model.nx + 2 * kHalo),
      pz_(model.is_1d() ? 1 : model.nz + 2 * kHalo) {
    const Eigen::Index n = px_ * pz_;
    vx_ = Eigen::ArrayXd::Zero(n);
    sxx_ = Eigen::ArrayXd::Zero(n);
    if (!model.is_1d()) {
        vz_ = Eigen::ArrayXd::Zero(n);
        szz_ = Eigen::ArrayXd::Zero(n);
        sxz_ = Eigen::ArrayXd::Zero(n);
    }
    const Eigen::Index nm = model.n_mechanisms();
    rxx_.assign(static_cast<size_t>(nm), Eigen::ArrayXd::Zero(n));
    if (!model.is_1d()) {
        rzz_.assign(static_cast<size_t>(nm), Eigen::ArrayXd::Zero(n));
        rxz_.assign(static_cast<size_t>(nm), Eigen::ArrayXd::Zero(n));
    }
}

double SimState::pressure_at(Eigen::Index ix, Eigen::Index iz) const {
    const Eigen::Index p = (ix + kHalo) + px_ * (nz_ == 1 ? 0 : iz + kHalo);
    return nz_ == 1 ? sxx_[p] : sxx_[p] + szz_[p];
}

double SimState::max_abs_field() const {
    double m = vx_.abs().maxCoeff();
    m = std::max(m, sxx_.abs().maxCoeff());
    if (vz_.size() > 0) {
        m = std::max(m, vz_.abs().maxCoeff());
        m = std::max(m, szz_.abs().maxCoeff());
        m = std::max(m, sxz_.abs().maxCoeff());
    }
    return m;
}

bool SimState::finite() const {
    auto ok = [](const Eigen::ArrayXd& a) { return a.allFinite(); };
    if (!ok(vx_) || !ok(sxx_)) return false;
    if (vz_.size() > 0 && (!ok(vz_) || !ok(szz_) || !ok(sxz_))) return false;
    for (const auto& r : rxx_)
        if (!ok(r)) return false;
    for (const auto& r : rzz_)
        if (!ok(r)) return false;
    for (const auto& r : rxz_)
        if (!ok(r)) return false;
    return true;
}

Stepper::Stepper(const GridModel& model, const StencilWeights& weights, double dt,
                 const SimOptions& options)
    : model_(model), weights_(weights), dt_(dt), options_(options) {
    model.validate();
    if (!(dt > 0.0)) throw std::invalid_argument("Stepper: dt must be positive");
    const double dt_max =
        cfl_max_dt(model.vmax(), model.dx,
                   model.is_1d() ? std::numeric_limits<double>::infinity() : model.dz, weights);
    if (!options.allow_unstable && dt > dt_max * (1.0 + 1e-9))
        throw std::invalid_argument("Stepper: dt exceeds the stability bound");

    const Eigen::Index px = model.nx + 2 * kHalo;
    const Eigen::Index pz = model.is_1d() ? 1 : model.nz + 2 * kHalo;
    const Eigen::Index n = px * pz;
    pi_ = Eigen::ArrayXd::Zero(n);
    mu_ = Eigen::ArrayXd::Zero(n);
    taup_ = Eigen::ArrayXd::Zero(n);
    taus_ = Eigen::ArrayXd::Zero(n);
    rho_x_ = Eigen::ArrayXd::Constant(n, 1.0);
    rho_z_ = Eigen::ArrayXd::Constant(n, 1.0);
    mu_xz_ = Eigen::ArrayXd::Zero(n);
    taus_xz_ = Eigen::ArrayXd::Zero(n);

    auto node = [&](Eigen::Index ix, Eigen::Index iz) {
        ix = std::clamp<Eigen::Index>(ix, 0, model.nx - 1);
        iz = std::clamp<Eigen::Index>(iz, 0, model.nz - 1);
        return ix + model.nx * iz;
    };
    for (Eigen::Index j = 0; j < (model.is_1d() ? 1 : model.nz); ++j) {
        for (Eigen::Index i = 0; i < model.nx; ++i) {
            const Eigen::Index p = (i + kHalo) + px * (model.is_1d() ? 0 : j + kHalo);
            const Eigen::Index c = node(i, j);
            pi_[p] = model.rho[c] * model.vp[c] * model.vp[c];
            mu_[p] = model.rho[c] * model.vs[c] * model.vs[c];
            taup_[p] = std::isinf(model.qp[c]) ? 0.0 : 2.0 / model.qp[c];
            taus_[p] = std::isinf(model.qs[c]) ? 0.0 : 2.0 / model.qs[c];
            rho_x_[p] = 0.5 * (model.rho[c] + model.rho[node(i + 1, j)]);
            rho_z_[p] = 0.5 * (model.rho[c] + model.rho[node(i, j + 1)]);
            const double m00 = model.rho[c] * model.vs[c] * model.vs[c];
            const double m10 = model.rho[node(i + 1, j)] * model.vs[node(i + 1, j)] * model.vs[node(i + 1, j)];
            const double m01 = model.rho[node(i, j + 1)] * model.vs[node(i, j + 1)] * model.vs[node(i, j + 1)];
            const double m11 = model.rho[node(i + 1, j + 1)] * model.vs[node(i + 1, j + 1)] * model.vs[node(i + 1, j + 1)];
            mu_xz_[p] = harmonic4(m00, m10, m01, m11);
            auto ts = [&](Eigen::Index cc) { return std::isinf(model.qs[cc]) ? 0.0 : 2.0 / model.qs[cc]; };
            taus_xz_[p] = 0.25 * (ts(c) + ts(node(i + 1, j)) + ts(node(i, j + 1)) + ts(node(i + 1, j + 1)));
        }
    }

    sponge_x_ = Eigen::ArrayXd::Constant(model.nx, 1.0);
    sponge_z_ = Eigen::ArrayXd::Constant(model.is_1d() ? 1 : model.nz, 1.0);
    if (options.sponge) {
        const Eigen::Index sc = options.sponge_cells;
        for (Eigen::Index i = 0; i < model.nx; ++i) {
            const Eigen::Index d = std::min(i, model.nx - 1 - i);
            if (d < sc) {
                const double depth = static_cast<double>(sc - d);
                sponge_x_[i] = std::exp(-(kSpongeRate * depth) * (kSpongeRate * depth));
            }
        }
        if (!model.is_1d()) {
            for (Eigen::Index j = 0; j < model.nz; ++j) {
                const Eigen::Index d = std::min(j, model.nz - 1 - j);
                if (d < sc) {
                    const double depth = static_cast<double>(sc - d);
                    sponge_z_[j] = std::exp(-(kSpongeRate * depth) * (kSpongeRate * depth));
                }
            }
        }
    }
}

void Stepper::step(SimState& s, const SourceSpec& src, double wavelet_value) const {
    if (model_.is_1d())
        step_1d(s, src, wavelet_value);
    else
        step_2d(s, src, wavelet_value);
    if (options_.sponge) apply_sponge(s);
    ++s.step_;
}

void Stepper::step_1d(SimState& s, const SourceSpec& src, double w) const {
    const Eigen::Index nx = model_.nx;
    const double inv_dx = 1.0 / model_.dx;
    const double dt = dt_;
    const Eigen::Index nm = model_.n_mechanisms();
    const double inv_nm = nm > 0 ? 1.0 / static_cast<double>(nm) : 0.0;
    const auto& al = weights_.alpha;
    double* sig = s.sxx_.data();
    double* v = s.vx_.data();

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index i = 0; i < nx; ++i) {
        const Eigen::Index p = i + kHalo;
        double dv = 0.0;
        for (int l = 1; l <= 6; ++l) dv += al[l - 1] * (v[p + l - 1] - v[p - l]);
        dv *= inv_dx;
        double mr = 0.0;
        if (nm > 0) {
            const double e = pi_[p] * taup_[p] * dv;
            for (Eigen::Index m = 0; m < nm; ++m) {
                const double ts = model_.tau_sigma[static_cast<size_t>(m)];
                double& r = s.rxx_[static_cast<size_t>(m)][p];
                const double r_new =
                    ((1.0 - dt / (2.0 * ts)) * r - (dt / ts) * e) / (1.0 + dt / (2.0 * ts));
                mr += 0.5 * (r_new + r);
                r = r_new;
            }
        }
        sig[p] += dt * (pi_[p] * (1.0 + taup_[p]) * dv + inv_nm * mr);
    }
    sig[src.ix + kHalo] += dt * w;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index i = 0; i < nx; ++i) {
        const Eigen::Index p = i + kHalo;
        double ds = 0.0;
        for (int l = 1; l <= 6; ++l) ds += al[l - 1] * (sig[p + l] - sig[p + 1 - l]);
        v[p] += dt / rho_x_[p] * ds * inv_dx;
    }
}

void Stepper::step_2d(SimState& s, const SourceSpec& src, double w) const {
    const Eigen::Index nx = model_.nx, nz = model_.nz;
    const Eigen::Index px = s.px_;
    const double inv_dx = 1.0 / model_.dx, inv_dz = 1.0 / model_.dz;
    const double dt = dt_;
    const Eigen::Index nm = model_.n_mechanisms();
    const double inv_nm = nm > 0 ? 1.0 / static_cast<double>(nm) : 0.0;
    const auto& al = weights_.alpha;

    double* vx = s.vx_.data();
    double* vz = s.vz_.data();
    double* sxx = s.sxx_.data();
    double* szz = s.szz_.data();
    double* sxz = s.sxz_.data();

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index j = 0; j < nz; ++j) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            const Eigen::Index p = (i + kHalo) + px * (j + kHalo);
            double dvx_dx = 0.0, dvz_dz = 0.0;
            for (int l = 1; l <= 6; ++l) {
                dvx_dx += al[l - 1] * (vx[p + l - 1] - vx[p - l]);
                dvz_dz += al[l - 1] * (vz[p + (l - 1) * px] - vz[p - l * px]);
            }
            dvx_dx *= inv_dx;
            dvz_dz *= inv_dz;
            const double theta = dvx_dx + dvz_dz;

            double mr_xx = 0.0, mr_zz = 0.0;
            if (nm > 0) {
                const double common = (pi_[p] * taup_[p] - 2.0 * mu_[p] * taus_[p]) * theta;
                const double e_xx = common + 2.0 * mu_[p] * taus_[p] * dvx_dx;
                const double e_zz = common + 2.0 * mu_[p] * taus_[p] * dvz_dz;
                for (Eigen::Index m = 0; m < nm; ++m) {
                    const double ts = model_.tau_sigma[static_cast<size_t>(m)];
                    const double a0 = 1.0 - dt / (2.0 * ts), a1 = 1.0 + dt / (2.0 * ts);
                    double& rxx = s.rxx_[static_cast<size_t>(m)][p];
                    double rn = (a0 * rxx - (dt / ts) * e_xx) / a1;
                    mr_xx += 0.5 * (rn + rxx);
                    rxx = rn;
                    double& rzz = s.rzz_[static_cast<size_t>(m)][p];
                    rn = (a0 * rzz - (dt / ts) * e_zz) / a1;
                    mr_zz += 0.5 * (rn + rzz);
                    rzz = rn;
                }
            }
            sxx[p] += dt * (pi_[p] * (1.0 + taup_[p]) * theta -
                            2.0 * mu_[p] * (1.0 + taus_[p]) * dvz_dz + inv_nm * mr_xx);
            szz[p] += dt * (pi_[p] * (1.0 + taup_[p]) * theta -
                            2.0 * mu_[p] * (1.0 + taus_[p]) * dvx_dx + inv_nm * mr_zz);

            // shear stress point (i+1/2, j+1/2)
            double dvx_dz = 0.0, dvz_dx = 0.0;
            for (int l = 1; l <= 6; ++l) {
                dvx_dz += al[l - 1] * (vx[p + l * px] - vx[p + (1 - l) * px]);
                dvz_dx += al[l - 1] * (vz[p + l] - vz[p + 1 - l]);
            }
            dvx_dz *= inv_dz;
            dvz_dx *= inv_dx;
            double mr_xz = 0.0;
            if (nm > 0) {
                const double e_xz = mu_xz_[p] * taus_xz_[p] * (dvx_dz + dvz_dx);
                for (Eigen::Index m = 0; m < nm; ++m) {
                    const double ts = model_.tau_sigma[static_cast<size_t>(m)];
                    const double a0 = 1.0 - dt / (2.0 * ts), a1 = 1.0 + dt / (2.0 * ts);
                    double& rxz = s.rxz_[static_cast<size_t>(m)][p];
                    const double rn = (a0 * rxz - (dt / ts) * e_xz) / a1;
                    mr_xz += 0.5 * (rn + rxz);
                    rxz = rn;
                }
            }
            sxz[p] += dt * (mu_xz_[p] * (1.0 + taus_xz_[p]) * (dvx_dz + dvz_dx) + inv_nm * mr_xz);
        }
    }

    const Eigen::Index psrc = (src.ix + kHalo) + px * (src.iz + kHalo);
    sxx[psrc] += dt * w;
    szz[psrc] += dt * w;

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (Eigen::Index j = 0; j < nz; ++j) {
        for (Eigen::Index i = 0; i < nx; ++i) {
            const Eigen::Index p = (i + kHalo) + px * (j + kHalo);
            double dsxx_dx = 0.0, dsxz_dz = 0.0, dsxz_dx = 0.0, dszz_dz = 0.0;
            for (int l = 1; l <= 6; ++l) {
                dsxx_dx += al[l - 1] * (sxx[p + l] - sxx[p + 1 - l]);
                dsxz_dz += al[l - 1] * (sxz[p + (l - 1) * px] - sxz[p - l * px]);
                dsxz_dx += al[l - 1] * (sxz[p + l - 1] - sxz[p - l]);
                dszz_dz += al[l - 1] * (szz[p + l * px] - szz[p + (1 - l) * px]);
            }
            vx[p] += dt / rho_x_[p] * (dsxx_dx * inv_dx + dsxz_dz * inv_dz);
            vz[p] += dt / rho_z_[p] * (dsxz_dx * inv_dx + dszz_dz * inv_dz);
        }
    }
}

void Stepper::apply_sponge(SimState& s) const {
    const Eigen::Index nx = model_.nx, nz = model_.is_1d() ? 1 : model_.nz;
    const Eigen::Index px = s.px_;
    auto damp = [&](Eigen::ArrayXd& field) {
        double* f = field.data();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (Eigen::Index j = 0; j < nz; ++j) {
            const double fz = sponge_z_[j];
            for (Eigen::Index i = 0; i < nx; ++i) {
                const double g = sponge_x_[i] * fz;
                if (g != 1.0) f[(i + kHalo) + px * (model_.is_1d() ? 0 : j + kHalo)] *= g;
            }
        }
    };
    damp(s.vx_);
    damp(s.sxx_);
    if (!model_.is_1d()) {
        damp(s.vz_);
        damp(s.szz_);
        damp(s.sxz_);
    }
    for (auto& r : s.rxx_) damp(r);
    for (auto& r : s.rzz_) damp(r);
    for (auto& r : s.rxz_) damp(r);
}

double Stepper::strain_forcing_xx(const SimState& s, Eigen::Index ix, Eigen::Index iz) const {
    const Eigen::Index px = s.px_;
    const Eigen::Index p = (ix + kHalo) + px * (model_.is_1d() ? 0 : iz + kHalo);
    const auto& al = weights_.alpha;
    const double* vx = s.vx_.data();
    double dvx_dx = 0.0;
    for (int l = 1; l <= 6; ++l) dvx_dx += al[l - 1] * (vx[p + l - 1] - vx[p - l]);
    dvx_dx /= model_.dx;
    if (model_.is_1d()) return pi_[p] * taup_[p] * dvx_dx;
    const double* vz = s.vz_.data();
    double dvz_dz = 0.0;
    for (int l = 1; l <= 6; ++l) dvz_dz += al[l - 1] * (vz[p + (l - 1) * px] - vz[p - l * px]);
    dvz_dz /= model_.dz;
    const double theta = dvx_dx + dvz_dz;
    return (pi_[p] * taup_[p] - 2.0 * mu_[p] * taus_[p]) * theta +
           2.0 * mu_[p] * taus_[p] * dvx_dx;
}

double Stepper::memory_xx(const SimState& s, int mechanism, Eigen::Index ix, Eigen::Index iz) const {
    const Eigen::Index p = (ix + kHalo) + s.px_ * (model_.is_1d() ? 0 : iz + kHalo);
    return s.rxx_[static_cast<size_t>(mechanism)][p];
}

std::vector<TimeSeries> run_simulation(const GridModel& model, const SourceSpec& src,
                                       const TimeSeries& wavelet,
                                       const std::vector<Receiver>& receivers,
                                       Eigen::Index n_steps, const SimOptions& options) {
    if (n_steps < 2 || n_steps > wavelet.size())
        throw std::invalid_argument("run_simulation: need 2 <= n_steps <= wavelet length");
    if (!wavelet.is_real())
        throw std::invalid_argument("run_simulation: wavelet must be real");
    auto in_grid = [&](Eigen::Index ix, Eigen::Index iz) {
        return ix >= 0 && ix < model.nx && iz >= 0 && (model.is_1d() ? iz == 0 : iz < model.nz);
    };
    if (!in_grid(src.ix, src.iz)) throw std::invalid_argument("run_simulation: source off grid");
    for (const auto& r : receivers)
        if (!in_grid(r.ix, r.iz)) throw std::invalid_argument("run_simulation: receiver off grid");

    const double dt = wavelet.dt();
    const Stepper stepper(model, StencilWeights::table1(), dt, options);
    SimState state(model);

    Eigen::MatrixXd traces(static_cast<Eigen::Index>(receivers.size()), n_steps);
    for (Eigen::Index k = 0; k < n_steps; ++k) {
        stepper.step(state, src, wavelet[k].real());
        for (size_t r = 0; r < receivers.size(); ++r)
            traces(static_cast<Eigen::Index>(r), k) =
                state.pressure_at(receivers[r].ix, receivers[r].iz);
        if ((k + 1) % options.nan_check_interval == 0 || k + 1 == n_steps) {
            if (!state.finite())
                throw std::runtime_error("run_simulation: non-finite field at step " +
                                         std::to_string(k));
        }
    }
    std::vector<TimeSeries> out;
    out.reserve(receivers.size());
    for (size_t r = 0; r < receivers.size(); ++r)
        out.emplace_back(Eigen::VectorXd(traces.row(static_cast<Eigen::Index>(r))), dt, dt / 2.0);
    return out;
}

WaveCorrectionResult run_wave_correction_experiment(const GridModel& model, const SourceSpec& src,
                                                    const std::vector<Receiver>& receivers,
                                                    double fpeak, double delay, double dt,
                                                    Eigen::Index n_steps, Eigen::Index fine_ratio,
                                                    const SimOptions& options) {
    if (fine_ratio < 2) throw std::invalid_argument("run_wave_correction_experiment: fine_ratio >= 2");
    const auto clock_start = std::chrono::steady_clock::now();

    const TimeSeries wavelet = ricker_wavelet(fpeak, delay, dt, n_steps);
    const auto traces_unc = run_simulation(model, src, wavelet, receivers, n_steps, options);

    const SchemeSpec scheme = SchemeSpec::leapfrog(dt);
    const TransformOperator fwd = build_operator(scheme, n_steps, TransformDirection::forward);
    const TransformOperator inv = build_operator(scheme, n_steps, TransformDirection::inverse);
    const TimeSeries wavelet_corr(fwd.apply(wavelet.real()), dt, 0.0);
    auto traces_cor = run_simulation(model, src, wavelet_corr, receivers, n_steps, options);
    for (auto& tr : traces_cor) tr = inv.apply(tr);

    const double dt_fine = dt / static_cast<double>(fine_ratio);
    const Eigen::Index n_fine = n_steps * fine_ratio;
    const TimeSeries wavelet_fine = ricker_wavelet(fpeak, delay, dt_fine, n_fine);
    const auto traces_fine = run_simulation(model, src, wavelet_fine, receivers, n_fine, options);

    // reference at the coarse trace times (k + 1/2) dt
    WaveCorrectionResult res;
    double sum_unc = 0.0, sum_cor = 0.0, sum_ref = 0.0;
    Eigen::Index count = 0;
    for (size_t r = 0; r < receivers.size(); ++r) {
        Eigen::VectorXd ref_trace(n_steps);
        for (Eigen::Index k = 0; k < n_steps; ++k) {
            double ref;
            if (fine_ratio % 2 == 0) {
                const Eigen::Index j = fine_ratio * k + fine_ratio / 2;
                ref = 0.5 * (traces_fine[r][j - 1].real() + traces_fine[r][j].real());
            } else {
                const Eigen::Index j = fine_ratio * k + (fine_ratio - 1) / 2;
                ref = traces_fine[r][j].real();
            }
            ref_trace[k] = ref;
            const double eu = traces_unc[r][k].real() - ref;
            const double ec = traces_cor[r][k].real() - ref;
            sum_unc += eu * eu;
            sum_cor += ec * ec;
            sum_ref += ref * ref;
            ++count;
        }
        res.traces_reference.emplace_back(ref_trace, dt, dt / 2.0);
    }
    res.traces_uncorrected = traces_unc;
    res.traces_corrected = traces_cor;
    res.rms_uncorrected = std::sqrt(sum_unc / static_cast<double>(count));
    res.rms_corrected = std::sqrt(sum_cor / static_cast<double>(count));
    res.reference_rms = std::sqrt(sum_ref / static_cast<double>(count));
    res.reduction = res.rms_uncorrected / res.rms_corrected;
    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    return res;
}

MemoryScanResult memory_residual_scan(const GridModel& model, const SourceSpec& src,
                                      const Receiver& probe, double fpeak,
                                      const std::vector<double>& dt_list, double t_max,
                                      const SimOptions& options) {
    if (dt_list.empty()) throw std::invalid_argument("memory_residual_scan: empty dt list");
    for (size_t i = 1; i < dt_list.size(); ++i)
        if (!(dt_list[i] < dt_list[i - 1]))
            throw std::invalid_argument("memory_residual_scan: dt list must be descending");

    MemoryScanResult result;
    const Eigen::Index nm = model.n_mechanisms();
    if (nm == 0) {
        result.dt = dt_list;
        result.max_residual.assign(dt_list.size(), 0.0);
        return result;
    }

    // evaluation band around the source spectrum
    const int n_freq = 40;
    Eigen::VectorXd freqs(n_freq);
    for (int i = 0; i < n_freq; ++i)
        freqs[i] = fpeak / 8.0 + (2.0 * fpeak - fpeak / 8.0) * i / (n_freq - 1);

    for (const double dt : dt_list) {
        const Eigen::Index n = static_cast<Eigen::Index>(std::llround(t_max / dt));
        const TimeSeries wavelet = ricker_wavelet(fpeak, 1.5 / fpeak, dt, n);
        const Stepper stepper(model, StencilWeights::table1(), dt, options);
        SimState state(model);

        Eigen::VectorXd e_trace(n);
        Eigen::MatrixXd r_trace(nm, n);
        for (Eigen::Index k = 0; k < n; ++k) {
            e_trace[k] = stepper.strain_forcing_xx(state, probe.ix, probe.iz);
            stepper.step(state, src, wavelet[k].real());
            for (Eigen::Index m = 0; m < nm; ++m)
                r_trace(m, k) = stepper.memory_xx(state, static_cast<int>(m), probe.ix, probe.iz);
            if ((k + 1) % options.nan_check_interval == 0 && !state.finite())
                throw std::runtime_error("memory_residual_scan: non-finite field at step " +
                                         std::to_string(k));
        }

        const TimeSeries e_series(e_trace, dt, 0.0);
        const SchemeSpec scheme = SchemeSpec::leapfrog(dt);
        double max_resid = 0.0;
        for (Eigen::Index m = 0; m < nm; ++m) {
            const TimeSeries r_series(Eigen::VectorXd(r_trace.row(m)), dt, dt / 2.0);
            const double ts = model.tau_sigma[static_cast<size_t>(m)];
            for (int i = 0; i < n_freq; ++i) {
                const double f = freqs[i];
                const std::complex<double> r_hat = fourier_sum(r_series, f);
                const std::complex<double> e_hat = fourier_sum(e_series, f);
                const std::complex<double> denom(1.0, 2.0 * M_PI * scheme.q(f) * ts);
                const double resid = std::abs(r_hat * std::cos(M_PI * f * dt) + e_hat / denom);
                max_resid = std::max(max_resid, resid);
            }
        }
        result.dt.push_back(dt);
        result.max_residual.push_back(max_resid);
    }
    return result;
}

}  // namespace dlab
