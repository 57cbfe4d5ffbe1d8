#include "gradgeom/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gradgeom/canonical.hpp"
#include "gradgeom/geometry.hpp"
#include "gradgeom/network.hpp"
#include "gradgeom/numerics.hpp"
#include "gradgeom/optlab.hpp"
#include "gradgeom/theory.hpp"

namespace gradgeom {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

void write_csv(const std::string& path, const Csv& csv) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (size_t i = 0; i < csv.header.size(); ++i) out << (i ? "," : "") << csv.header[i];
    out << "\n";
    for (const auto& row : csv.rows) {
        for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    }
}

Json csv_to_json(const Csv& csv) {
    Json rows = Json::array();
    for (const auto& row : csv.rows) {
        Json r = Json::object();
        for (size_t i = 0; i < csv.header.size(); ++i) r[csv.header[i]] = row[i];
        rows.push_back(r);
    }
    return rows;
}

// Emits a data table either as its own CSV or inline in result.json,
// depending on output.format.
struct ResultWriter {
    std::string outdir;
    bool csv_format = true;
    Json metrics = Json::object();
    Json tables = Json::object();

    void table(const std::string& name, const Csv& csv) {
        if (csv_format)
            write_csv(outdir + "/" + name + ".csv", csv);
        else
            tables[name] = csv_to_json(csv);
    }

    void finish(const std::string& subcommand, const Json& config, double wall_sec) {
        Json rec;
        rec["subcommand"] = subcommand;
        rec["config"] = config;
        rec["metrics"] = metrics;
        if (!csv_format) rec["tables"] = tables;
        rec["provenance"] = Json{{"version", kVersion}, {"seed", config.at("seed").get<long>()}};
        rec["wall_clock_sec"] = wall_sec;
        std::ofstream out(outdir + "/result.json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write result.json");
        out << rec.dump(2) << "\n";
    }
};

NetworkConfig network_from_config(const Json& s) {
    NetworkConfig cfg;
    cfg.arch = s.at("arch").get<std::string>() == "resnet" ? Arch::resnet : Arch::ffn;
    cfg.depth = s.at("depth").get<int>();
    cfg.widths = s.at("widths").get<std::vector<int>>();
    cfg.input_dim = s.at("input_dim").get<int>();
    cfg.sigma1 = s.at("sigma1").get<double>();
    cfg.activation = s.value("activation", "tanh") == std::string("relu") ? Activation::relu : Activation::tanh;
    cfg.validate();
    return cfg;
}

InnerBudget budget_from_config(const Json& s) {
    InnerBudget b;
    b.restarts = s.value("restarts", 8);
    b.steps = s.value("steps", 50);
    b.step_factor = s.value("step_size", 0.1);
    return b;
}

// Network-backed gradient set: ball center from the main seed, samples from
// a teacher network drawn with its own seed.
GradientSetSpec spec_from_config(const Json& config) {
    const NetworkConfig cfg = network_from_config(config.at("network"));
    const Json& data = config.at("data");
    const long seed = config.at("seed").get<long>();
    const long teacher_seed = data.value("teacher_seed", seed + 1);
    const double noise = data.value("noise_std", 0.0);
    const int n = data.at("n").get<int>();

    RngStream init_rng = RngStream(static_cast<std::uint64_t>(seed)).substream("init");
    GradientSetSpec spec;
    spec.cfg = cfg;
    spec.ball.center = init_network(cfg, init_rng);
    spec.ball.rho = config.at("ball").at("rho").get<double>();
    spec.ball.rho1 = config.at("ball").at("rho1").get<double>();

    RngStream teacher_rng = RngStream(static_cast<std::uint64_t>(teacher_seed)).substream("teacher-init");
    const NetworkParams teacher = init_network(cfg, teacher_rng);
    RngStream data_rng = RngStream(static_cast<std::uint64_t>(seed)).substream("data");
    for (int i = 0; i < n; ++i) {
        Vec x = data_rng.unit_sphere_vector(cfg.input_dim);
        const ForwardCache cache = forward(cfg, teacher, x);
        spec.inputs.push_back(std::move(x));
        spec.targets.push_back(cache.output + noise * data_rng.gaussian());
    }
    spec.validate();
    return spec;
}

TeacherDistribution teacher_from_config(const Json& config) {
    const Json& data = config.at("data");
    const std::string model = data.at("model").get<std::string>();
    const long seed = config.at("seed").get<long>();
    const long teacher_seed = data.value("teacher_seed", seed + 1);
    TeacherDistribution dist;
    dist.noise_std = data.value("noise_std", 0.0);
    RngStream teacher_rng = RngStream(static_cast<std::uint64_t>(teacher_seed)).substream("teacher-init");
    if (model == "quadratic1d") {
        dist.kind = TeacherDistribution::Kind::quadratic1d;
        dist.quad_mean = teacher_rng.gaussian();
    } else if (model == "linear") {
        dist.kind = TeacherDistribution::Kind::linear;
        dist.linear_weights = teacher_rng.gaussian_vector(data.at("d").get<int>());
    } else {
        dist.kind = TeacherDistribution::Kind::network;
        dist.net_cfg = network_from_config(config.at("network"));
        dist.net_params = init_network(dist.net_cfg, teacher_rng);
    }
    return dist;
}

PopulationOracle oracle_for(const TeacherDistribution& dist, const Json& config, long n) {
    if (dist.has_analytic_population()) return PopulationOracle::analytic();
    const long factor = config.at("reuse").value("oracle_factor", 64L);
    return PopulationOracle::fresh_mc(std::max<long>(2, factor * n));
}

Vec student_start(const TeacherDistribution& dist, const Json& config) {
    const long seed = config.at("seed").get<long>();
    RngStream rng = RngStream(static_cast<std::uint64_t>(seed)).substream("student-init");
    if (dist.kind == TeacherDistribution::Kind::network)
        return init_network(dist.net_cfg, rng).flatten();
    return rng.gaussian_vector(dist.student_dim());
}

void append_estimate_row(Csv& csv, const std::string& name, const WidthEstimate& e) {
    const double win = e.inner ? e.inner->win_fraction() : 0.0;
    csv.add_row({name, fmt(e.value), fmt(e.std_error), std::to_string(e.outer_samples), fmt(win)});
}

Json estimate_json(const WidthEstimate& e) {
    Json j;
    j["value"] = e.value;
    j["std_error"] = e.std_error;
    j["outer_samples"] = e.outer_samples;
    if (e.inner) j["ascent_win_fraction"] = e.inner->win_fraction();
    return j;
}

// ---------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------

void run_width(const Json& config, ResultWriter& out) {
    const GradientSetSpec spec = spec_from_config(config);
    const InnerBudget budget = budget_from_config(config.at("width"));
    const int outer = config.at("width").at("outer").get<int>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    Csv csv;
    csv.header = {"quantity", "value", "std_error", "outer_samples", "ascent_win_fraction"};

    NetworkGradientFamily family(spec);
    RngStream lggw_rng = base.substream("lggw");
    const WidthEstimate lggw = lggw_estimate(family, lggw_rng, outer, budget);
    append_estimate_row(csv, "lggw", lggw);
    out.metrics["lggw"] = estimate_json(lggw);
    out.metrics["n"] = spec.n();
    out.metrics["constants_convention"] = "all symbolic constants = 1";

    // Single-sample scope: featurizer width and the architecture bound.
    GradientSetSpec single = spec;
    single.inputs.resize(1);
    single.targets.resize(1);
    RngStream wvb_rng = base.substream("width-vs-bound");
    const WidthVsBoundResult wvb = width_vs_bound_check(single, wvb_rng, outer, budget);
    append_estimate_row(csv, "lggw_single_sample", wvb.lggw);
    append_estimate_row(csv, "featurizer_width", wvb.featurizer_width);
    csv.add_row({"bound_featurizer_term", fmt(wvb.bound.featurizer_term), "0", "0", "0"});
    csv.add_row({"bound_second_term", fmt(wvb.bound.second_term), "0", "0", "0"});
    csv.add_row({"bound_total", fmt(wvb.bound.bound_value), "0", "0", "0"});
    csv.add_row({"c_star", fmt(wvb.c_star), "0", "0", "0"});
    out.metrics["lggw_single_sample"] = estimate_json(wvb.lggw);
    out.metrics["featurizer_width"] = estimate_json(wvb.featurizer_width);
    out.metrics["bound_total"] = wvb.bound.bound_value;
    out.metrics["bound_second_term"] = wvb.bound.second_term;
    out.metrics["c_star"] = wvb.c_star;
    out.table("width", csv);
}

void run_nerc(const Json& config, ResultWriter& out) {
    const GradientSetSpec spec = spec_from_config(config);
    const InnerBudget budget = budget_from_config(config.at("width"));
    const int outer = config.at("width").at("outer").get<int>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    NetworkGradientFamily family(spec);
    RngStream nerc_rng = base.substream("nerc");
    const RademacherOuter mode = spec.n() <= 12 ? RademacherOuter::exhaustive : RademacherOuter::monte_carlo;
    const WidthEstimate nerc = nerc_estimate(family, nerc_rng, outer, budget, mode);
    Csv csv;
    csv.header = {"quantity", "value", "std_error", "outer_samples", "ascent_win_fraction"};
    append_estimate_row(csv, "nerc", nerc);
    out.metrics["nerc"] = estimate_json(nerc);
    out.metrics["n"] = spec.n();
    out.table("nerc", csv);

    // Khintchine sweep: identical unit gradients, expected decay n^(-1/2).
    Csv sweep;
    sweep.header = {"n", "nerc", "std_error", "outer_mode"};
    Vec log_n, log_v;
    RngStream kh_rng = base.substream("khintchine");
    for (const int n : {4, 16, 64, 256}) {
        std::vector<Vec> grads(static_cast<size_t>(n), Vec{1.0, 0.0, 0.0});
        FixedGradientFamily fixed(std::move(grads));
        RngStream sub = kh_rng.substream(static_cast<std::uint64_t>(n));
        const RademacherOuter m = n <= 16 ? RademacherOuter::exhaustive : RademacherOuter::monte_carlo;
        const WidthEstimate e = nerc_estimate(fixed, sub, 32768, budget, m);
        sweep.add_row({std::to_string(n), fmt(e.value), fmt(e.std_error),
                       m == RademacherOuter::exhaustive ? "exhaustive" : "monte_carlo"});
        log_n.push_back(std::log(static_cast<double>(n)));
        log_v.push_back(std::log(e.value));
    }
    out.metrics["khintchine_slope"] = ls_slope(log_n, log_v);
    out.table("khintchine", sweep);
}

void run_canonical(const Json& config, ResultWriter& out) {
    const Json& section = config.at("canonical");
    const long samples = section.at("samples").get<long>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    std::vector<CanonicalSet> sets;
    if (section.contains("sets")) {
        for (const auto& js : section.at("sets")) sets.push_back(CanonicalSet::from_json(js));
    } else {
        for (const int d : {1, 2, 8, 64}) sets.push_back(CanonicalSet::l2_ball(d, 1.0));
        Vec axes(8);
        for (int j = 0; j < 8; ++j) axes[static_cast<size_t>(j)] = 1.0 / std::sqrt(static_cast<double>(j + 1));
        sets.push_back(CanonicalSet::ellipsoid(axes));
        sets.push_back(CanonicalSet::k_support_ball(6, 2, 1.0));
        sets.push_back(CanonicalSet::finite_cloud({{1, 0}, {-1, 0}}));
        sets.push_back(CanonicalSet::finite_cloud({{5, 5}}));
        sets.push_back(CanonicalSet::union_of(
            {CanonicalSet::finite_cloud({{1, 0}, {0, 1}}), CanonicalSet::finite_cloud({{-1, 0}, {0, -1}})}));
        sets.push_back(CanonicalSet::minkowski_sum(
            {CanonicalSet::l2_ball(2, 1.0), CanonicalSet::finite_cloud({{1, 0}, {-1, 0}})}));
    }

    Csv csv;
    csv.header = {"set", "dim", "mc_width", "std_error", "samples", "analytic_bound", "closed_form", "fitted_constant"};
    for (size_t i = 0; i < sets.size(); ++i) {
        const CanonicalSet& s = sets[i];
        RngStream sub = base.substream("canonical").substream(i);
        const WidthEstimate e = mc_width(s, sub, samples);
        double bound = std::nan("");
        try {
            bound = analytic_width_bound(s);
        } catch (const std::invalid_argument&) {
        }
        double closed = std::nan("");
        if (s.kind == CanonicalSet::Kind::l2_ball) closed = s.radius * expected_gaussian_norm(s.dim);
        if (s.kind == CanonicalSet::Kind::finite_cloud && s.points.size() == 1) closed = 0.0;
        const double fitted = std::isnan(bound) || bound <= 0.0 ? std::nan("") : e.value / bound;
        csv.add_row({s.describe(), std::to_string(s.dim), fmt(e.value), fmt(e.std_error), std::to_string(samples),
                     fmt(bound), fmt(closed), fmt(fitted)});
    }
    out.table("canonical", csv);

    // structural identities on fixed instances
    {
        const CanonicalSet a = CanonicalSet::l2_ball(4, 0.5);
        const CanonicalSet b = CanonicalSet::finite_cloud({{1, 0, 0, 0}, {0, 1, 0, 0}, {-1, 0, 0, 1}});
        const CanonicalSet sum = CanonicalSet::minkowski_sum({a, b});
        RngStream r1 = base.substream("mink");
        RngStream r2 = base.substream("mink");
        RngStream r3 = base.substream("mink");
        const WidthEstimate wsum = mc_width(sum, r1, samples);
        const WidthEstimate wa = mc_width(a, r2, samples);
        const WidthEstimate wb = mc_width(b, r3, samples);
        out.metrics["minkowski_gap"] = wsum.value - wa.value - wb.value;  // 0 under shared draws

        const CanonicalSet u = CanonicalSet::union_of({b, CanonicalSet::finite_cloud({{0, 0, 1, 0}, {0, 0, -1, 0}})});
        RngStream r4 = base.substream("mink");
        const WidthEstimate wu = mc_width(u, r4, samples);
        out.metrics["union_monotonicity_margin"] = wu.value - std::max(wa.value, wb.value);

        RngStream r5 = base.substream("proj");
        const CanonicalSet cloud = CanonicalSet::finite_cloud({{1, 0, 0, 1}, {-1, 0, 0, -1}});
        const ProjectionWidthCheck pc = projection_width_check(cloud, 2, r5, samples);
        out.metrics["projection_subadditive"] = pc.subadditive();
        out.metrics["projection_whole"] = pc.whole.value;
        out.metrics["projection_part_sum"] = pc.part1.value + pc.part2.value;
    }
}

int run_verify_lemmas(const Json& config, ResultWriter& out) {
    const Json& lemmas = config.at("lemmas");
    const int trials = lemmas.at("trials").get<int>();
    const int sic_n = lemmas.value("sic_n", 8);
    const long sweep_points = lemmas.value("sweep_points", 10000L);
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    GradientSetSpec spec = spec_from_config(config);
    const NetworkConfig& cfg = spec.cfg;
    const double rho = spec.ball.rho, rho1 = spec.ball.rho1;

    Csv csv;
    csv.header = {"check", "layer", "frequency", "threshold", "pass"};
    bool all_ok = true;
    auto emit = [&](const std::string& name, const FrequencyCheck& fc, int first_layer) {
        for (size_t i = 0; i < fc.frequency.size(); ++i) {
            const bool ok = fc.frequency[i] >= fc.threshold[i];
            all_ok = all_ok && ok;
            csv.add_row({name, std::to_string(first_layer + static_cast<int>(i)), fmt(fc.frequency[i]),
                         fmt(fc.threshold[i]), ok ? "1" : "0"});
        }
    };

    RngStream init_rng = base.substream("init-check");
    emit("init_spectral", init_spectral_check(cfg, rho, trials, init_rng), 1);
    RngStream layer_rng = base.substream("layer-check");
    const LayerBoundReport rep = layer_bound_checks(cfg, rho, rho1, trials, layer_rng);
    emit("layer_output", rep.layer_output, 1);
    emit("jacobian", rep.jacobian, 2);
    emit("param_gradient", rep.param_gradient, 1);
    out.table("lemmas", csv);

    // SIC from two random ball points on a sic_n-sample spec.
    GradientSetSpec sic_spec = spec;
    {
        Json cfg2 = config;
        cfg2["data"]["n"] = sic_n;
        sic_spec = spec_from_config(cfg2);
    }
    NetworkGradientFamily family(sic_spec);
    RngStream pa_rng = base.substream("sic-a"), pb_rng = base.substream("sic-b");
    const NetworkParams pa = NetworkParams::unflatten(cfg, family.random_point(pa_rng));
    const NetworkParams pb = NetworkParams::unflatten(cfg, family.random_point(pb_rng));
    RngStream sic_rng = base.substream("sic-mc");
    const TailCheckReport sic = sic_from_gradients(sic_spec, pa, pb, 100000, sic_rng);
    out.metrics["sic_mu_hat"] = sic.mu_hat;
    out.metrics["sic_pass"] = sic.passed();
    out.metrics["sic_exhaustive"] = sic.exhaustive;
    all_ok = all_ok && sic.passed();

    Csv sic_csv;
    sic_csv.header = {"u", "empirical_tail", "bound"};
    for (size_t i = 0; i < sic.u_grid.size(); ++i)
        sic_csv.add_row({fmt(sic.u_grid[i]), fmt(sic.empirical_tail[i]), fmt(sic.bound[i])});
    out.table("sic", sic_csv);

    // bounded-gradient probe over the ball
    RngStream sweep_rng = base.substream("grad-sweep");
    const double max_norm = max_gradient_norm_sweep(family, sweep_points, sweep_rng);
    out.metrics["max_sample_gradient_norm"] = max_norm;
    all_ok = all_ok && std::isfinite(max_norm);

    out.metrics["all_pass"] = all_ok;
    return all_ok ? kExitOk : kExitVerifyFailed;
}

Csv trace_csv(const GdTrace& trace) {
    Csv csv;
    csv.header = {"t", "loss", "emp_grad_norm", "pop_grad_norm", "delta", "ratio_a1", "ratio_a2", "flags"};
    for (const GdStep& s : trace.steps) {
        csv.add_row({std::to_string(s.t), fmt(s.loss), fmt(s.emp_grad_norm), fmt(s.pop_grad_norm), fmt(s.delta),
                     s.ratio_defined ? fmt(s.ratio_a1) : "", s.ratio_defined ? fmt(s.ratio_a2) : "",
                     s.ratio_defined ? "" : "UNDEFINED"});
    }
    return csv;
}

void run_gd_ratio(const Json& config, ResultWriter& out) {
    const TeacherDistribution dist = teacher_from_config(config);
    const StudentModel model = StudentModel::for_teacher(dist);
    const long n = config.at("data").at("n").get<long>();
    const double eta = config.at("reuse").at("eta").get<double>();
    const int T = config.at("reuse").at("T").get<int>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    RngStream run_rng = base.substream("gd");
    const GdTrace trace =
        gd_with_reuse(dist, model, student_start(dist, config), eta, T, n, run_rng, oracle_for(dist, config, n));
    out.table("trace", trace_csv(trace));

    for (const int alpha : {1, 2}) {
        try {
            const RatioSequence seq = gd_ratio_trace(trace, alpha);
            out.metrics["ratio_a" + std::to_string(alpha) + "_max"] = seq.max_value;
            out.metrics["ratio_a" + std::to_string(alpha) + "_defined_steps"] = seq.values.size();
        } catch (const std::runtime_error&) {
            out.metrics["ratio_a" + std::to_string(alpha) + "_max"] = nullptr;
        }
    }
    out.metrics["max_delta"] = trace.max_delta;
}

void run_profile(const Json& config, ResultWriter& out) {
    const GradientSetSpec spec = spec_from_config(config);
    const NetworkParams params = spec.ball.center;

    const Vec profile = sorted_gradient_profile(spec, params);
    Csv pcsv;
    pcsv.header = {"rank", "abs_gradient"};
    for (size_t i = 0; i < profile.size(); ++i) pcsv.add_row({std::to_string(i), fmt(profile[i])});
    out.table("profile_gradient", pcsv);

    const SparsityReport rep = featurizer_sparsity(spec, params, 1e-6);
    Csv fcsv;
    fcsv.header = {"sample", "l0", "l1"};
    for (size_t i = 0; i < rep.l0.size(); ++i)
        fcsv.add_row({std::to_string(i), std::to_string(rep.l0[i]), fmt(rep.l1[i])});
    out.table("profile_featurizer", fcsv);
    out.metrics["l0_mean"] = rep.l0_mean;
    out.metrics["l0_max"] = rep.l0_max;
    out.metrics["l1_mean"] = rep.l1_mean;
    out.metrics["l1_max"] = rep.l1_max;
    out.metrics["gradient_dim"] = profile.size();
}

void run_reuse(const Json& config, ResultWriter& out) {
    const TeacherDistribution dist = teacher_from_config(config);
    const StudentModel model = StudentModel::for_teacher(dist);
    const Json& reuse = config.at("reuse");
    const double eta = reuse.at("eta").get<double>();
    const int T = reuse.at("T").get<int>();
    const std::vector<long> n_grid = reuse.at("n_grid").get<std::vector<long>>();
    const int trials = reuse.at("trials").get<int>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    RngStream run_rng = base.substream("reuse");
    const ReuseScalingResult res = reuse_scaling_experiment(dist, model, eta, T, n_grid, trials, run_rng,
                                                            oracle_for(dist, config, n_grid.back()));
    Csv csv;
    csv.header = {"n", "max_delta_mean", "max_delta_se", "trials"};
    for (size_t i = 0; i < res.n_grid.size(); ++i)
        csv.add_row({std::to_string(res.n_grid[i]), fmt(res.max_delta_mean[i]), fmt(res.max_delta_se[i]),
                     std::to_string(trials)});
    out.table("reuse", csv);

    Csv tcsv;
    tcsv.header = {"T", "max_delta_mean"};
    for (size_t i = 0; i < res.t_grid.size(); ++i)
        tcsv.add_row({std::to_string(res.t_grid[i]), fmt(res.max_delta_by_t[i])});
    out.table("reuse_t_sweep", tcsv);

    out.metrics["slope_log_n"] = res.slope_log_n;
    out.metrics["exponent_log_t"] = res.exponent_log_t;
}

void run_converge(const Json& config, ResultWriter& out) {
    const TeacherDistribution dist = teacher_from_config(config);
    const StudentModel model = StudentModel::for_teacher(dist);
    const long n = config.at("data").at("n").get<long>();
    const int T = config.at("reuse").at("T").get<int>();
    RngStream base(static_cast<std::uint64_t>(config.at("seed").get<long>()));

    RngStream run_rng = base.substream("converge");
    const ConvergenceResult res = population_convergence_experiment(dist, model, student_start(dist, config), T, n,
                                                                    run_rng, oracle_for(dist, config, n));
    Csv csv;
    csv.header = {"t", "pop_grad_sq"};
    for (size_t i = 0; i < res.pop_grad_sq_by_step.size(); ++i)
        csv.add_row({std::to_string(i + 1), fmt(res.pop_grad_sq_by_step[i])});
    out.table("converge", csv);

    // prefix means expose the ~1/T decay without a second run
    double acc = 0.0;
    for (int t = 1; t <= T; ++t) {
        acc += res.pop_grad_sq_by_step[static_cast<size_t>(t - 1)];
        if (t == T / 4) out.metrics["metric_T_quarter"] = acc / t;
        if (t == T / 2) out.metrics["metric_T_half"] = acc / t;
    }
    out.metrics["metric"] = res.metric;
    out.metrics["tau_hat"] = res.tau_hat;
    out.metrics["eta"] = res.eta;
}

}  // namespace

int run_subcommand(const std::string& subcommand, const Json& config, const std::string& outdir) {
    const auto start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(outdir);
    ResultWriter out;
    out.outdir = outdir;
    out.csv_format = !config.contains("output") || config.at("output").value("format", "csv") == "csv";

    int code = kExitOk;
    try {
        if (subcommand == "width") run_width(config, out);
        else if (subcommand == "nerc") run_nerc(config, out);
        else if (subcommand == "canonical") run_canonical(config, out);
        else if (subcommand == "verify-lemmas") code = run_verify_lemmas(config, out);
        else if (subcommand == "gd-ratio") run_gd_ratio(config, out);
        else if (subcommand == "profile") run_profile(config, out);
        else if (subcommand == "reuse") run_reuse(config, out);
        else if (subcommand == "converge") run_converge(config, out);
        else throw ConfigError("unknown subcommand '" + subcommand + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        // diagnostic record, nonzero exit
        Json diag;
        diag["subcommand"] = subcommand;
        diag["error"] = e.what();
        std::ofstream f(outdir + "/error.json", std::ios::binary);
        if (f) f << diag.dump(2) << "\n";
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kExitRuntimeError;
    }

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.finish(subcommand, config, wall);
    return code;
}

}  // namespace gradgeom
