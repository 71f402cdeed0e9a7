#include "dispersionlab/presets.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "dispersionlab/microlocal.hpp"
#include "dispersionlab/ode_lab.hpp"
#include "dispersionlab/transforms.hpp"
#include "dispersionlab/wave_lab.hpp"

namespace dlab {
namespace {

using nlohmann::json;

void require_keys(const json& params, const std::set<std::string>& required,
                  const std::set<std::string>& optional) {
    for (const auto& item : params.items()) {
        if (!required.count(item.key()) && !optional.count(item.key()))
            throw std::invalid_argument("config: unknown key '" + item.key() + "'");
    }
    for (const auto& key : required) {
        if (!params.contains(key))
            throw std::invalid_argument("config: missing key '" + key + "'");
    }
}

double num(const json& params, const std::string& key) {
    if (!params.at(key).is_number())
        throw std::invalid_argument("config: '" + key + "' must be a number");
    return params.at(key).get<double>();
}

std::vector<double> num_list(const json& params, const std::string& key) {
    if (!params.at(key).is_array() || params.at(key).empty())
        throw std::invalid_argument("config: '" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : params.at(key)) {
        if (!v.is_number()) throw std::invalid_argument("config: '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

void write_report(const ExperimentConfig& cfg, json results, double runtime) {
    json report;
    report["kind"] = cfg.kind;
    report["preset"] = cfg.preset_name.empty() ? json(nullptr) : json(cfg.preset_name);
    report["params"] = cfg.params;
    report["results"] = std::move(results);
    report["runtime_seconds"] = runtime;
    std::ofstream out(cfg.out_dir / "report.json");
    if (!out) throw std::runtime_error("cannot write report.json");
    out << report.dump(2) << '\n';
}

json run_ode(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    OdeExperimentConfig oc;
    oc.mu = num(p, "mu");
    oc.sigma2 = num(p, "sigma2");
    oc.a = num(p, "a");
    oc.dt = num(p, "dt");
    oc.t_max = num(p, "t_max");
    if (p.contains("taper_fraction")) oc.taper_fraction = num(p, "taper_fraction");
    const ErrorReport rep = run_ode_experiment(oc);

    std::filesystem::create_directories(cfg.out_dir);
    json errors;
    for (const auto& [name, series] : rep.solutions) {
        series.write_csv(cfg.out_dir / ("solution_" + name + ".csv"));
        if (name == "analytic") continue;
        const TimeSeries err(rep.error_series.at(name), oc.dt, 0.0);
        err.write_csv(cfg.out_dir / ("error_" + name + ".csv"));
        errors[name] = {{"max_abs_report_window", rep.report_window.at(name).max_abs},
                        {"rms_report_window", rep.report_window.at(name).rms},
                        {"max_abs_full_window", rep.full_window.at(name).max_abs},
                        {"rms_full_window", rep.full_window.at(name).rms}};
    }
    json results;
    results["ode"] = {{"report_window_end", rep.report_window_end},
                      {"errors", errors},
                      {"corrected_max_error", rep.report_window.at("corrected").max_abs},
                      {"theorem_residual", rep.theorem_residual}};
    write_report(cfg, results, rep.runtime_seconds);
    return results;
}

GridModel model_from_wave_params(const json& p, bool two_d, double fpeak) {
    const auto nx = static_cast<Eigen::Index>(num(p, "nx"));
    const auto nz = two_d ? static_cast<Eigen::Index>(num(p, "nz")) : 1;
    const double dx = num(p, "dx");
    const double dz = two_d ? num(p, "dz") : dx;
    const double inf = std::numeric_limits<double>::infinity();
    const int nm = p.contains("n_mechanisms") ? static_cast<int>(num(p, "n_mechanisms")) : 0;
    const double qp = p.contains("qp") ? num(p, "qp") : inf;
    const double qs = p.contains("qs") ? num(p, "qs") : inf;
    std::vector<double> tau;
    if (nm > 0) tau = GridModel::log_spaced_relaxation(fpeak, nm);
    const double vs = two_d ? num(p, "vs") : 0.0;
    return GridModel::uniform(nx, nz, dx, dz, num(p, "rho"), num(p, "vp"), vs, qp, qs, tau);
}

json run_wave(const ExperimentConfig& cfg, bool two_d) {
    const json& p = cfg.params;
    const double fpeak = num(p, "fpeak");
    const GridModel model = model_from_wave_params(p, two_d, fpeak);

    SourceSpec src;
    std::vector<Receiver> receivers;
    if (two_d) {
        const auto s = p.at("src");
        src = {s.at(0).get<Eigen::Index>(), s.at(1).get<Eigen::Index>()};
        for (const auto& r : p.at("receivers"))
            receivers.push_back({r.at(0).get<Eigen::Index>(), r.at(1).get<Eigen::Index>()});
    } else {
        src = {static_cast<Eigen::Index>(num(p, "src_ix")), 0};
        for (const auto& r : p.at("receivers"))
            receivers.push_back({r.get<Eigen::Index>(), 0});
    }

    const StencilWeights w = StencilWeights::table1();
    const double dt_max = cfl_max_dt(
        model.vmax(), model.dx,
        two_d ? model.dz : std::numeric_limits<double>::infinity(), w);
    const double dt = num(p, "dt_factor") * dt_max;
    const auto n_steps = static_cast<Eigen::Index>(std::llround(num(p, "t_max") / dt));
    const auto fine_ratio = static_cast<Eigen::Index>(num(p, "fine_ratio"));
    SimOptions options;
    if (p.contains("sponge_cells"))
        options.sponge_cells = static_cast<Eigen::Index>(num(p, "sponge_cells"));

    const WaveCorrectionResult res = run_wave_correction_experiment(
        model, src, receivers, fpeak, num(p, "delay"), dt, n_steps, fine_ratio, options);

    std::filesystem::create_directories(cfg.out_dir);
    json manifest;
    manifest["dt"] = dt;
    manifest["t0"] = dt / 2.0;
    manifest["n_steps"] = n_steps;
    manifest["receivers"] = json::array();
    for (size_t r = 0; r < receivers.size(); ++r) {
        const std::string tag = std::to_string(r);
        res.traces_uncorrected[r].write_csv(cfg.out_dir / ("trace_uncorrected_" + tag + ".csv"));
        res.traces_corrected[r].write_csv(cfg.out_dir / ("trace_corrected_" + tag + ".csv"));
        res.traces_reference[r].write_csv(cfg.out_dir / ("trace_reference_" + tag + ".csv"));
        manifest["receivers"].push_back(
            {{"ix", receivers[r].ix},
             {"iz", receivers[r].iz},
             {"files",
              {{"uncorrected", "trace_uncorrected_" + tag + ".csv"},
               {"corrected", "trace_corrected_" + tag + ".csv"},
               {"reference", "trace_reference_" + tag + ".csv"}}}});
    }
    std::ofstream mf(cfg.out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';

    json results;
    results[two_d ? "wave2d" : "wave1d"] = {{"dt", dt},
                                            {"n_steps", n_steps},
                                            {"rms_uncorrected", res.rms_uncorrected},
                                            {"rms_corrected", res.rms_corrected},
                                            {"reduction", res.reduction},
                                            {"reference_rms", res.reference_rms}};
    write_report(cfg, results, res.runtime_seconds);
    return results;
}

json run_wavepacket(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    const auto t_start = std::chrono::steady_clock::now();
    const WavePacketMapResult res = run_wavepacket_experiment(
        num(p, "t0"), num(p, "eta0"), num_list(p, "dt_list"), num(p, "t_max"));

    std::filesystem::create_directories(cfg.out_dir);
    json rows = json::array();
    std::ofstream csv(cfg.out_dir / "centers.csv");
    csv << "dt,itdt_t,itdt_eta,ftdt_t,ftdt_eta,itdt_error,ftdt_error\n";
    for (size_t i = 0; i < res.dt.size(); ++i) {
        rows.push_back({{"dt", res.dt[i]},
                        {"itdt_center", res.itdt_center[i]},
                        {"ftdt_center", res.ftdt_center[i]},
                        {"itdt_error", res.itdt_error[i]},
                        {"ftdt_error", res.ftdt_error[i]}});
        csv << res.dt[i] << ',' << res.itdt_center[i][0] << ',' << res.itdt_center[i][1] << ','
            << res.ftdt_center[i][0] << ',' << res.ftdt_center[i][1] << ',' << res.itdt_error[i]
            << ',' << res.ftdt_error[i] << '\n';
    }
    json results;
    results["wavepacket"] = {{"itdt_target", res.itdt_target},
                             {"ftdt_target", res.ftdt_target},
                             {"rows", rows}};
    write_report(cfg, results,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    return results;
}

json run_lemma_init(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    const auto t_start = std::chrono::steady_clock::now();
    const GaussianSource src(num(p, "mu"), num(p, "sigma2"), num(p, "a"));
    const LemmaInitResult res = lemma_init_check(src, num_list(p, "dt_list"), num(p, "t_max"));

    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream csv(cfg.out_dir / "sup_table.csv");
    csv << "dt,sup\n";
    bool decreasing = true;
    json rows = json::array();
    for (size_t i = 0; i < res.dt.size(); ++i) {
        csv << res.dt[i] << ',' << res.sup[i] << '\n';
        rows.push_back({{"dt", res.dt[i]}, {"sup", res.sup[i]}});
        if (i > 0 && !(res.sup[i] < res.sup[i - 1])) decreasing = false;
    }
    json results;
    results["lemma_init"] = {{"rows", rows}, {"strictly_decreasing", decreasing}};
    write_report(cfg, results,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    return results;
}

json run_nonmatching(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    const auto t_start = std::chrono::steady_clock::now();
    NonmatchingConfig nc;
    nc.l11 = num(p, "l11");
    nc.l12 = num(p, "l12");
    nc.l21 = num(p, "l21");
    nc.c = num(p, "c");
    nc.n = static_cast<Eigen::Index>(num(p, "n"));
    nc.dt = num(p, "dt");
    const NonmatchingReport rep = verify_nonmatching(nc);

    std::filesystem::create_directories(cfg.out_dir);
    json results;
    results["nonmatching"] = {
        {"residual_main", rep.residual_main},
        {"residual_aux_with_g", rep.residual_aux_with_g},
        {"residual_aux_without_g", rep.residual_aux_without_g},
        {"ratio", rep.residual_aux_without_g / rep.residual_aux_with_g},
        {"signal_scale", rep.signal_scale}};
    write_report(cfg, results,
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    return results;
}

json run_transform(const ExperimentConfig& cfg) {
    const json& p = cfg.params;
    const auto t_start = std::chrono::steady_clock::now();
    const std::string direction = p.at("direction").get<std::string>();
    const std::string scheme_name = p.at("scheme").get<std::string>();
    const double dt = num(p, "dt");

    const TimeSeries input = TimeSeries::read_csv(p.at("input").get<std::string>());
    if (std::abs(input.dt() - dt) > 1e-12 * dt)
        throw std::invalid_argument("transform: input sampling step does not match --dt");
    const SchemeSpec scheme = scheme_name == "central" ? SchemeSpec::central_difference(dt)
                              : scheme_name == "leapfrog"
                                  ? SchemeSpec::leapfrog(dt)
                                  : throw std::invalid_argument("transform: unknown scheme");
    TransformDirection dir;
    if (direction == "forward")
        dir = TransformDirection::forward;
    else if (direction == "inverse")
        dir = TransformDirection::inverse;
    else if (direction == "inverse-alt" || direction == "inverse_alt")
        dir = TransformDirection::inverse_alt;
    else
        throw std::invalid_argument("transform: unknown direction");

    // dt mismatch between TimeSeries grid and operator scheme is an error;
    // rebuild the series on the scheme step to absorb CSV rounding.
    const TimeSeries aligned(input.samples(), dt, input.t0());
    const TransformOperator op = build_operator(scheme, input.size(), dir);
    const TimeSeries output = op.apply(aligned);
    output.write_csv(p.at("output").get<std::string>());

    json results;
    results["transform"] = {{"rows", output.size()}};
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_report(cfg, results,
                     std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count());
    }
    return results;
}

}  // namespace

void validate_params(const std::string& kind, const json& params) {
    if (!params.is_object()) throw std::invalid_argument("config: params must be an object");
    if (kind == "ode") {
        require_keys(params, {"mu", "sigma2", "a", "dt", "t_max"}, {"taper_fraction"});
        if (!(num(params, "dt") > 0.0) || !(num(params, "t_max") > 0.0) ||
            !(num(params, "sigma2") > 0.0))
            throw std::invalid_argument("config: ode parameters out of range");
    } else if (kind == "wave1d" || kind == "wave2d") {
        std::set<std::string> req = {"nx", "dx", "vp", "rho", "fpeak", "delay",
                                     "dt_factor", "t_max", "fine_ratio", "receivers"};
        std::set<std::string> opt = {"qp", "qs", "n_mechanisms", "sponge_cells"};
        if (kind == "wave2d") {
            req.insert({"nz", "dz", "vs", "src"});
        } else {
            req.insert("src_ix");
        }
        require_keys(params, req, opt);
        if (!(num(params, "dt_factor") > 0.0) || !(num(params, "t_max") > 0.0))
            throw std::invalid_argument("config: wave parameters out of range");
        if (!params.at("receivers").is_array() || params.at("receivers").empty())
            throw std::invalid_argument("config: receivers must be a non-empty array");
    } else if (kind == "wavepacket") {
        require_keys(params, {"t0", "eta0", "dt_list", "t_max"}, {});
        num_list(params, "dt_list");
    } else if (kind == "lemma-init") {
        require_keys(params, {"mu", "sigma2", "a", "dt_list", "t_max"}, {});
        num_list(params, "dt_list");
    } else if (kind == "nonmatching") {
        require_keys(params, {"l11", "l12", "l21", "c", "n", "dt"}, {});
    } else if (kind == "transform") {
        require_keys(params, {"direction", "scheme", "dt", "input", "output"}, {});
    } else {
        throw std::invalid_argument("config: unknown experiment kind '" + kind + "'");
    }
}

std::vector<std::pair<std::string, json>> presets() {
    std::vector<std::pair<std::string, json>> out;
    auto ode = [](double a, double dt) {
        return json{{"kind", "ode"},
                    {"params",
                     {{"mu", 5.0},
                      {"sigma2", 0.1},
                      {"a", a},
                      {"dt", dt},
                      {"t_max", 20.0},
                      {"taper_fraction", 0.05}}}};
    };
    out.emplace_back("fig1a", ode(0.0, 0.02));
    out.emplace_back("fig1b", ode(4.0, 0.02));
    out.emplace_back("fig2a", ode(7.5, 0.02));
    out.emplace_back("fig2b", ode(7.5, 0.01));
    out.emplace_back("wave1d-elastic",
                     json{{"kind", "wave1d"},
                          {"params",
                           {{"nx", 1200},
                            {"dx", 5.0},
                            {"vp", 2000.0},
                            {"rho", 2000.0},
                            {"fpeak", 25.0},
                            {"delay", 0.06},
                            {"dt_factor", 0.95},
                            {"t_max", 1.8},
                            {"src_ix", 240},
                            {"receivers", {500, 800}},
                            {"fine_ratio", 50}}}});
    out.emplace_back("wave2d-visco",
                     json{{"kind", "wave2d"},
                          {"params",
                           {{"nx", 160},
                            {"nz", 160},
                            {"dx", 10.0},
                            {"dz", 10.0},
                            {"vp", 2000.0},
                            {"vs", 1200.0},
                            {"rho", 2200.0},
                            {"qp", 50.0},
                            {"qs", 50.0},
                            {"n_mechanisms", 3},
                            {"fpeak", 15.0},
                            {"delay", 0.1},
                            {"dt_factor", 0.95},
                            {"t_max", 0.5},
                            {"src", {80, 80}},
                            {"receivers", {{110, 80}, {80, 112}}},
                            {"fine_ratio", 50}}}});
    out.emplace_back("wavepacket",
                     json{{"kind", "wavepacket"},
                          {"params",
                           {{"t0", 1.0},
                            {"eta0", 0.1},
                            {"dt_list", {0.004, 0.002, 0.001, 0.0005}},
                            {"t_max", 2.4}}}});
    return out;
}

json preset_config(const std::string& name) {
    for (const auto& [n, cfg] : presets())
        if (n == name) return cfg;
    throw std::invalid_argument("unknown preset '" + name + "'");
}

json run_experiment(const ExperimentConfig& cfg) {
    validate_params(cfg.kind, cfg.params);
    if (cfg.kind == "ode") return run_ode(cfg);
    if (cfg.kind == "wave1d") return run_wave(cfg, false);
    if (cfg.kind == "wave2d") return run_wave(cfg, true);
    if (cfg.kind == "wavepacket") return run_wavepacket(cfg);
    if (cfg.kind == "lemma-init") return run_lemma_init(cfg);
    if (cfg.kind == "nonmatching") return run_nonmatching(cfg);
    if (cfg.kind == "transform") return run_transform(cfg);
    throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
}

}  // namespace dlab
