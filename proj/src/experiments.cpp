#include "nsmc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>

#include "nsmc/io.hpp"
#include "nsmc/metrics.hpp"
#include "nsmc/parallel.hpp"
#include "nsmc/random.hpp"

namespace nsmc {

Method parse_method(const std::string& name) {
    if (name == "NSMC") return Method::Nsmc;
    if (name == "SMC") return Method::Smc;
    if (name == "NIMC") return Method::Nimc;
    if (name == "IMC") return Method::Imc;
    throw ConfigError("methods", "unknown method '" + name + "' (expected NSMC, SMC, NIMC or IMC)");
}

std::string to_string(Method m) {
    switch (m) {
    case Method::Nsmc: return "NSMC";
    case Method::Smc: return "SMC";
    case Method::Nimc: return "NIMC";
    case Method::Imc: return "IMC";
    }
    return "?";
}

std::pair<ActivationKind, ActivationKind> method_activations(Method m, const FitProblem& p) {
    if (m == Method::Smc || m == Method::Imc) return {ActivationKind::Identity, ActivationKind::Identity};
    return {p.a1, p.a2};
}

Objective make_objective(Method m, const FitProblem& p) {
    LossOptions lo;
    std::tie(lo.a1, lo.a2) = method_activations(m, p);
    lo.tied = p.tied;
    lo.fix_first_row = p.fix_first_row;
    if (m == Method::Nsmc || m == Method::Smc) {
        auto om = std::make_shared<const SampleBatch>(p.omega);
        auto op = std::make_shared<const SampleBatch>(p.omega_prime);
        if (m == Method::Nsmc) return [om, op, lo](const WeightPair& w) { return loss_grad(w, *om, *op, lo); };
        return [om, op, lo](const WeightPair& w) { return smc_loss_grad(w, *om, *op, lo); };
    }
    auto un = std::make_shared<const SampleBatch>(variance_stabilize(p.transform, p.union_batch));
    if (m == Method::Nimc) return [un, lo](const WeightPair& w) { return nimc_loss_grad(w, *un, lo); };
    return [un, lo](const WeightPair& w) { return imc_loss_grad(w, *un, lo); };
}

GdResult fit_method(Method m, const FitProblem& p, const WeightPair& start, const GdConfig& gd) {
    return gd_minimize(make_objective(m, p), start, gd);
}

GdConfig gd_config_from(const Config& c) {
    GdConfig gd;
    const std::string step = c.get_string("step");
    if (step != "auto") {
        gd.step = c.get_double("step");
        if (!(*gd.step > 0.0)) throw ConfigError("step", "field 'step': must be positive or auto");
    }
    gd.max_iters = static_cast<int>(c.get_int("max_iters"));
    if (gd.max_iters < 1) throw ConfigError("max_iters", "field 'max_iters': must be >= 1");
    gd.grad_tol = c.get_double("grad_tol");
    if (c.schema().find("step_scale")) {
        gd.step_scale = c.get_double("step_scale");
        if (!(gd.step_scale > 0.0)) throw ConfigError("step_scale", "field 'step_scale': must be positive");
    }
    return gd;
}

bool resolve_fix_first_row(const Config& c, ActivationKind a1, ActivationKind a2) {
    const std::string v = c.get_string("fix_first_row");
    if (v == "auto") return a1 == ActivationKind::ReLU || a2 == ActivationKind::ReLU;
    return c.get_bool("fix_first_row");
}

namespace {

// Everything one grid cell contributes, merged in grid order afterwards.
struct CellOutput {
    std::vector<ResultRow> rows;
    std::vector<McCheckResult> checks;
    std::vector<std::string> notes;
};

template <class Fn>
void run_cells(ExperimentReport& report, std::size_t n, Fn&& cell) {
    std::vector<CellOutput> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = cell(i); });
    for (auto& o : out) {
        report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
        report.checks.insert(report.checks.end(), o.checks.begin(), o.checks.end());
        report.notes.insert(report.notes.end(), o.notes.begin(), o.notes.end());
    }
    add_aggregates(report);
}

ActivationKind activation_field(const Config&, const std::string& key, const std::string& value) {
    try {
        return parse_activation(value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(key, "field '" + key + "': unknown activation '" + value + "'");
    }
}

int positive_int(const Config& c, const std::string& key) {
    const long long v = c.get_int(key);
    if (v < 1 || v > 100000000) throw ConfigError(key, "field '" + key + "': must be a positive integer");
    return static_cast<int>(v);
}

std::vector<std::uint64_t> seeds_of(const Config& c) {
    std::vector<std::uint64_t> out;
    for (long long s : c.get_int_list("seeds")) {
        if (s < 0) throw ConfigError("seeds", "field 'seeds': seeds must be non-negative");
        out.push_back(static_cast<std::uint64_t>(s));
    }
    if (out.empty()) throw ConfigError("seeds", "field 'seeds': no seeds given");
    return out;
}

std::vector<Method> methods_of(const Config& c) {
    std::vector<Method> out;
    for (const auto& name : c.get_list("methods")) out.push_back(parse_method(name));
    if (out.empty()) throw ConfigError("methods", "field 'methods': no methods given");
    return out;
}

std::string fmt_value(double v) { return format_double(v); }

std::string error_note(const std::string& where, const std::exception& e) { return where + ": " + e.what(); }

void write_trace(const std::filesystem::path& path, const GdTrace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    write_text_file(path, out.str());
}

SampleBatch test_pairs(int n, int d1, int d2, std::uint64_t seed) {
    FeaturePool pool = gen_features(n, n, d1, d2, seed);
    SampleBatch b;
    b.x = std::move(pool.x);
    b.z = std::move(pool.z);
    b.y = Vector::Zero(n);
    return b;
}

ResponseLaw law_by_name(const Config& c, const std::string& key, const std::string& name) {
    if (name == "gaussian") return ResponseLaw::gaussian(c.get_double("sigma"));
    if (name == "binomial") return ResponseLaw::binomial(positive_int(c, "trials"));
    if (name == "poisson") return ResponseLaw::poisson();
    throw ConfigError(key, "field '" + key + "': unknown law '" + name + "' (expected gaussian, binomial or poisson)");
}

VarianceStabilizer transform_by_name(const std::string& key, const std::string& name, const ResponseLaw& law) {
    if (name == "auto") {
        if (law.kind == ResponseLaw::Kind::Binomial) return VarianceStabilizer::binomial_arcsin(law.trials);
        if (law.kind == ResponseLaw::Kind::Poisson) return VarianceStabilizer::poisson_sqrt();
        return VarianceStabilizer::none();
    }
    if (name == "none") return VarianceStabilizer::none();
    if (name == "arcsin") {
        if (law.kind != ResponseLaw::Kind::Binomial) {
            throw ConfigError(key, "field '" + key + "': arcsin needs binomial responses");
        }
        return VarianceStabilizer::binomial_arcsin(law.trials);
    }
    if (name == "sqrt") return VarianceStabilizer::poisson_sqrt();
    throw ConfigError(key, "field '" + key + "': unknown transform '" + name + "'");
}

// ---------------------------------------------------------------- converge

struct ConvergeCell {
    std::string law;
    ActivationKind a2;
    std::uint64_t seed;
};

} // namespace

ExperimentReport run_convergence(const Config& c, const std::filesystem::path& out_dir) {
    const int d1 = positive_int(c, "d1"), d2 = positive_int(c, "d2"), r = positive_int(c, "r");
    const int n1 = positive_int(c, "n1"), n2 = positive_int(c, "n2"), m = positive_int(c, "m");
    const ActivationKind a1 = activation_field(c, "a1", c.get_string("a1"));
    std::vector<ActivationKind> a2s;
    for (const auto& a : c.get_list("a2")) a2s.push_back(activation_field(c, "a2", a));
    const std::vector<std::string> laws = c.get_list("laws");
    for (const auto& l : laws) (void)law_by_name(c, "laws", l);
    const double radius_sq = c.get_double("radius_sq");
    const double plateau = c.get_double("plateau_factor");
    const double min_r2 = c.get_double("min_r_squared");
    const GdConfig gd_base = gd_config_from(c);
    const auto seeds = seeds_of(c);
    if (a2s.empty() || laws.empty()) throw ConfigError("laws", "field 'laws'/'a2': empty grid");
    std::filesystem::create_directories(out_dir);

    std::vector<ConvergeCell> cells;
    for (const auto& law : laws) {
        for (auto a2 : a2s) {
            for (auto s : seeds) cells.push_back({law, a2, s});
        }
    }

    ExperimentReport report;
    report.name = "converge";
    run_cells(report, cells.size(), [&](std::size_t i) {
        const ConvergeCell& cell = cells[i];
        const std::string pair = to_string(a1) + "-" + to_string(cell.a2);
        const std::string label = "converge/" + cell.law + "/" + pair;
        const std::string seed = std::to_string(cell.seed);
        CellOutput out;
        auto row = [&](const std::string& metric, double v) { out.rows.push_back({label, "NSMC", seed, metric, v}); };
        McCheckResult check;
        check.name = label + "/s" + seed;
        check.n_draws = 1;

        GdTrace trace;
        double step = 0.0;
        int iters = 0;
        try {
            const bool fix = resolve_fix_first_row(c, a1, cell.a2);
            GenerativeSpec spec;
            spec.weights = gen_ground_truth(d1, d2, r, fix, derive_seed(cell.seed, Stream::Weights)).weights;
            spec.a1 = a1;
            spec.a2 = cell.a2;
            spec.law = law_by_name(c, "laws", cell.law);
            spec.n1 = n1;
            spec.n2 = n2;
            spec.m = m;
            spec.seed = cell.seed;
            const SplitSample data = split_samples(spec);
            FitProblem p;
            p.omega = data.batch();
            p.omega_prime = data.batch_prime();
            p.a1 = a1;
            p.a2 = cell.a2;
            p.fix_first_row = fix;
            GdConfig gd = gd_base;
            gd.trace_truth = spec.weights;
            const WeightPair start =
                init_near_truth(spec.weights, radius_sq, fix, derive_seed(cell.seed, Stream::Init));
            try {
                GdResult res = fit_method(Method::Nsmc, p, start, gd);
                trace = std::move(res.trace);
                step = res.step;
                iters = res.iterations;
            } catch (const GdDiverged& e) {
                trace = e.trace;
                throw;
            }
        } catch (const std::exception& e) {
            out.notes.push_back(error_note(check.name, e));
            check.statistic = std::nan("");
            check.description = std::string("run failed: ") + e.what();
            row("failed", 1.0);
        }
        write_trace(out_dir / ("trace_" + cell.law + "_" + pair + "_s" + seed + ".csv"), trace);
        if (!check.description.empty()) {
            out.checks.push_back(check);
            return out;
        }

        double min_d = trace.records.front().dist_sq;
        for (const auto& rec : trace.records) min_d = std::min(min_d, rec.dist_sq);
        row("step", step);
        row("iterations", iters);
        row("final_dist_sq", trace.records.back().dist_sq);
        row("min_dist_sq", min_d);
        try {
            const ContractionFit fit = fit_contraction_rate(pre_plateau(trace, plateau));
            check.statistic = fit.rho;
            check.standard_error = fit.rho * fit.slope_se;
            check.pass = fit.rho < 1.0 && fit.r_squared > min_r2;
            check.description = "pass iff rho < 1 and R^2 > " + fmt_value(min_r2) + "; rho=" + fmt_value(fit.rho) +
                                " R^2=" + fmt_value(fit.r_squared) + " over " + std::to_string(fit.points) +
                                " pre-plateau iterations";
            row("rho", fit.rho);
            row("r_squared", fit.r_squared);
            row("fit_points", static_cast<double>(fit.points));
        } catch (const std::exception& e) {
            check.statistic = std::nan("");
            check.description = std::string("fit failed: ") + e.what();
        }
        row("pass", check.pass ? 1.0 : 0.0);
        if (!check.pass) out.notes.push_back(check.name + ": " + check.description);
        out.checks.push_back(check);
        return out;
    });
    return report;
}

// ---------------------------------------------------------------- misspec

namespace {

struct MisspecCell {
    std::string value; // grid entry as written
    std::uint64_t seed;
};

} // namespace

ExperimentReport run_misspec(const Config& c, const std::filesystem::path& out_dir) {
    const std::string law = c.get_string("law");
    if (law != "gaussian" && law != "binomial" && law != "poisson") {
        throw ConfigError("law", "field 'law': unknown law '" + law + "' (expected gaussian, binomial or poisson)");
    }
    const int d1 = positive_int(c, "d1"), d2 = positive_int(c, "d2"), r = positive_int(c, "r");
    const int n1 = positive_int(c, "n1"), n2 = positive_int(c, "n2"), m = positive_int(c, "m");
    const int test_size = positive_int(c, "test_size");
    const ActivationKind a1 = activation_field(c, "a1", c.get_string("a1"));
    const ActivationKind a2_fixed = activation_field(c, "a2", c.get_string("a2"));
    const auto methods = methods_of(c);
    const auto seeds = seeds_of(c);
    const double radius_sq = c.get_double("radius_sq");
    const GdConfig gd = gd_config_from(c);
    const std::string transform_name = c.get_string("nimc_transform");
    const std::vector<std::string> grid = c.get_list("grid");
    if (grid.empty()) throw ConfigError("grid", "field 'grid': empty grid");

    // Resolve every grid entry up front so a bad value fails before any fit.
    struct Resolved {
        ResponseLaw law;
        ActivationKind a2;
        std::string label;
    };
    std::vector<Resolved> resolved;
    for (const auto& g : grid) {
        Resolved rv{ResponseLaw::gaussian(), a2_fixed, "misspec/" + law + "/"};
        try {
            if (law == "gaussian") {
                const double tau = std::stod(g);
                if (!(tau >= 0.0 && tau < 1.0)) throw std::invalid_argument("tau outside [0, 1)");
                rv.law = ResponseLaw::gaussian_misspec(tau);
                rv.label += "tau=" + g;
            } else if (law == "binomial") {
                const int nb = std::stoi(g);
                if (nb < 1) throw std::invalid_argument("N_B < 1");
                rv.law = ResponseLaw::binomial(nb);
                rv.label += "N_B=" + g;
            } else {
                rv.law = ResponseLaw::poisson();
                rv.a2 = parse_activation(g);
                rv.label += "a2=" + g;
            }
        } catch (const std::exception&) {
            throw ConfigError("grid", "field 'grid': bad " + law + " grid value '" + g + "'");
        }
        (void)transform_by_name("nimc_transform", transform_name, rv.law);
        resolved.push_back(rv);
    }
    std::filesystem::create_directories(out_dir);

    std::vector<MisspecCell> cells;
    for (const auto& g : grid) {
        for (auto s : seeds) cells.push_back({g, s});
    }

    ExperimentReport report;
    report.name = "misspec";
    run_cells(report, cells.size(), [&](std::size_t i) {
        const Resolved& rv = resolved[i / seeds.size()];
        const std::uint64_t s = cells[i].seed;
        const std::string seed = std::to_string(s);
        CellOutput out;
        try {
            const bool fix = resolve_fix_first_row(c, a1, rv.a2);
            GenerativeSpec spec;
            spec.weights = gen_ground_truth(d1, d2, r, fix, derive_seed(s, Stream::Weights)).weights;
            spec.a1 = a1;
            spec.a2 = rv.a2;
            spec.law = rv.law;
            spec.n1 = n1;
            spec.n2 = n2;
            spec.m = m;
            spec.seed = s;
            const SplitSample data = split_samples(spec);
            FitProblem p;
            p.omega = data.batch();
            p.omega_prime = data.batch_prime();
            p.union_batch = concat(p.omega, p.omega_prime);
            p.a1 = a1;
            p.a2 = rv.a2;
            p.fix_first_row = fix;
            p.transform = transform_by_name("nimc_transform", transform_name, rv.law);
            const SampleBatch test = test_pairs(test_size, d1, d2, derive_seed(s, Stream::TestSet));
            const WeightPair start = init_near_truth(spec.weights, radius_sq, fix, derive_seed(s, Stream::Init));
            for (Method meth : methods) {
                const std::string name = to_string(meth);
                try {
                    const GdResult res = fit_method(meth, p, start, gd);
                    const auto [e1, e2] = method_activations(meth, p);
                    out.rows.push_back({rv.label, name, seed, "E_U", rel_error_matrix(res.weights.u, spec.weights.u)});
                    out.rows.push_back({rv.label, name, seed, "E_V", rel_error_matrix(res.weights.v, spec.weights.v)});
                    out.rows.push_back({rv.label, name, seed, "E_Theta",
                                        rel_error_theta(res.weights, e1, e2, spec.weights, a1, rv.a2, test)});
                    out.rows.push_back({rv.label, name, seed, "iterations", static_cast<double>(res.iterations)});
                } catch (const std::exception& e) {
                    out.notes.push_back(error_note(rv.label + "/" + name + "/s" + seed, e));
                    out.rows.push_back({rv.label, name, seed, "failed", 1.0});
                }
            }
        } catch (const std::exception& e) {
            out.notes.push_back(error_note(rv.label + "/s" + seed, e));
            out.rows.push_back({rv.label, "all", seed, "failed", 1.0});
        }
        return out;
    });
    return report;
}

// ---------------------------------------------------------------- cluster

namespace {

// Mixture centers whose pre-activations W^T c sit at the sign patterns
// (+-s, ..., +-s), so the K groups stay apart after the activation.
Matrix mixture_centers(const Matrix& w, int components, double scale) {
    const Eigen::Index r = w.cols();
    Matrix targets(components, r);
    for (int k = 0; k < components; ++k) {
        for (Eigen::Index p = 0; p < r; ++p) targets(k, p) = ((k >> (r - 1 - p)) & 1) ? -scale : scale;
    }
    const Matrix gram = w.transpose() * w;
    return (w * gram.ldlt().solve(targets.transpose())).transpose();
}

void write_coords(const std::filesystem::path& path, const Matrix& coords, const std::vector<int>& labels) {
    std::ostringstream out;
    out << "iota1,iota2,label\n";
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        out << format_double(coords(i, 0)) << ',' << format_double(coords.cols() > 1 ? coords(i, 1) : 0.0) << ','
            << labels[static_cast<std::size_t>(i)] << '\n';
    }
    write_text_file(path, out.str());
}

} // namespace

ExperimentReport run_cluster(const Config& c, const std::filesystem::path& out_dir) {
    const int d1 = positive_int(c, "d1"), d2 = positive_int(c, "d2"), r = positive_int(c, "r");
    const int n1 = positive_int(c, "n1"), n2 = positive_int(c, "n2"), m = positive_int(c, "m");
    const ActivationKind act = activation_field(c, "activation", c.get_string("activation"));
    const int trials = positive_int(c, "trials");
    const int components = positive_int(c, "components");
    if (r >= 30 || components > (1 << r)) {
        throw ConfigError("components", "field 'components': at most 2^r mixture components are supported");
    }
    if (components > std::min(n1, n2)) throw ConfigError("components", "field 'components': more than n1 or n2");
    const double scale = c.get_double("center_scale");
    const double spread = c.get_double("spread");
    if (!(spread >= 0.0)) throw ConfigError("spread", "field 'spread': must be >= 0");
    const auto methods = methods_of(c);
    const auto seeds = seeds_of(c);
    const double radius_sq = c.get_double("radius_sq");
    const GdConfig gd = gd_config_from(c);
    const ResponseLaw law = ResponseLaw::binomial(trials);
    const VarianceStabilizer transform = transform_by_name("nimc_transform", c.get_string("nimc_transform"), law);
    KMeansOptions km;
    km.restarts = positive_int(c, "kmeans_restarts");
    const bool fix = act == ActivationKind::ReLU;
    std::filesystem::create_directories(out_dir);

    const std::string label = "cluster/binomial/" + to_string(act);
    ExperimentReport report;
    report.name = "cluster";
    run_cells(report, seeds.size(), [&](std::size_t i) {
        const std::uint64_t s = seeds[i];
        const std::string seed = std::to_string(s);
        CellOutput out;
        try {
            const WeightPair truth = gen_ground_truth(d1, d2, r, fix, derive_seed(s, Stream::Weights)).weights;
            const Matrix cx = mixture_centers(truth.u, components, scale);
            const Matrix cz = mixture_centers(truth.v, components, scale);
            const std::uint64_t mix = derive_seed(s, Stream::Mixture);
            const MixtureSample mx = gen_mixture_features(n1, cx, spread, derive_seed(mix, 1));
            const MixtureSample mz = gen_mixture_features(n2, cz, spread, derive_seed(mix, 2));
            const MixtureSample mxp = gen_mixture_features(n1, cx, spread, derive_seed(mix, 3));
            const MixtureSample mzp = gen_mixture_features(n2, cz, spread, derive_seed(mix, 4));
            const FeaturePool pool{mx.features, mz.features};
            const FeaturePool pool_prime{mxp.features, mzp.features};
            const EdgeSampleSet om = sample_edges(pool, truth, act, act, law, m, derive_seed(s, Stream::Edges));
            const EdgeSampleSet op =
                sample_edges(pool_prime, truth, act, act, law, m, derive_seed(s, Stream::PrimedEdges));

            FitProblem p;
            p.omega = gather(pool, om);
            p.omega_prime = gather(pool_prime, op);
            p.union_batch = concat(p.omega, p.omega_prime);
            p.a1 = p.a2 = act;
            p.fix_first_row = fix;
            p.transform = transform;
            const WeightPair start = init_near_truth(truth, radius_sq, fix, derive_seed(s, Stream::Init));

            auto evaluate = [&](const std::string& name, const WeightPair& w) {
                const int keep = std::min(r, 2);
                const Matrix ix = top_r_left_singular(embed_rows(w.u, act, pool.x), keep);
                const Matrix iz = top_r_left_singular(embed_rows(w.v, act, pool.z), keep);
                const std::uint64_t ks = derive_seed(s, Stream::KMeans);
                const KMeansResult kx = kmeans(ix, components, derive_seed(ks, 1), km);
                const KMeansResult kz = kmeans(iz, components, derive_seed(ks, 2), km);
                out.rows.push_back({label, name, seed, "cluster_err_x", clustering_error(kx.labels, mx.labels)});
                out.rows.push_back({label, name, seed, "cluster_err_z", clustering_error(kz.labels, mz.labels)});
                out.rows.push_back({label, name, seed, "E_U", rel_error_matrix(w.u, truth.u)});
                out.rows.push_back({label, name, seed, "E_V", rel_error_matrix(w.v, truth.v)});
                write_coords(out_dir / ("coords_x_" + name + "_s" + seed + ".csv"), ix, mx.labels);
                write_coords(out_dir / ("coords_z_" + name + "_s" + seed + ".csv"), iz, mz.labels);
            };
            evaluate("truth", truth);
            for (Method meth : methods) {
                const std::string name = to_string(meth);
                try {
                    evaluate(name, fit_method(meth, p, start, gd).weights);
                } catch (const std::exception& e) {
                    out.notes.push_back(error_note(label + "/" + name + "/s" + seed, e));
                    out.rows.push_back({label, name, seed, "failed", 1.0});
                }
            }
        } catch (const std::exception& e) {
            out.notes.push_back(error_note(label + "/s" + seed, e));
            out.rows.push_back({label, "all", seed, "failed", 1.0});
        }
        return out;
    });
    return report;
}

// ---------------------------------------------------------------- semisup

namespace {

std::vector<int> sample_without_replacement(int n, int k, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(k));
    return idx;
}

// m uniform pairs (with replacement) inside one item set, y = same label.
SampleBatch similarity_batch(const LabeledData& data, const std::vector<int>& items, int m, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(items.size()) - 1);
    std::vector<std::pair<int, int>> pairs(static_cast<std::size_t>(m));
    for (auto& pr : pairs) {
        pr.first = items[static_cast<std::size_t>(pick(rng))];
        pr.second = items[static_cast<std::size_t>(pick(rng))];
    }
    const std::vector<double> y = gen_similarity_labels(data.labels, pairs);
    SampleBatch b;
    b.x.resize(m, data.features.cols());
    b.z.resize(m, data.features.cols());
    b.y.resize(m);
    for (int k = 0; k < m; ++k) {
        b.x.row(k) = data.features.row(pairs[static_cast<std::size_t>(k)].first);
        b.z.row(k) = data.features.row(pairs[static_cast<std::size_t>(k)].second);
        b.y(k) = y[static_cast<std::size_t>(k)];
    }
    return b;
}

} // namespace

ExperimentReport run_semisup(const Config& c, const std::filesystem::path& out_dir) {
    LoadOptions lo;
    lo.label_column = c.get_string("label_column");
    lo.one_hot_columns = c.has("one_hot_columns") ? c.get_list("one_hot_columns") : std::vector<std::string>{};
    lo.standardize = c.get_bool("standardize");
    const std::filesystem::path dataset = c.get_string("dataset");
    const long long cap = c.get_int("max_per_class");
    if (cap < 0) throw ConfigError("max_per_class", "field 'max_per_class': must be >= 0");
    const int n_items = positive_int(c, "n_items");
    const int m = positive_int(c, "m");
    const int r = positive_int(c, "r");
    const ActivationKind act = activation_field(c, "activation", c.get_string("activation"));
    const auto methods = methods_of(c);
    const auto seeds = seeds_of(c);
    const GdConfig gd = gd_config_from(c);
    KMeansOptions km;
    km.restarts = positive_int(c, "kmeans_restarts");
    if (!std::filesystem::exists(dataset)) {
        throw ConfigError("dataset", "field 'dataset': file not found: " + dataset.string());
    }
    const LabeledData full = load_labeled_csv(dataset, lo);
    std::filesystem::create_directories(out_dir);

    const std::string label = "semisup/" + dataset.stem().string();
    ExperimentReport report;
    report.name = "semisup";
    run_cells(report, seeds.size(), [&](std::size_t i) {
        const std::uint64_t s = seeds[i];
        const std::string seed = std::to_string(s);
        CellOutput out;
        const LabeledData data = cap_per_class(full, static_cast<int>(cap), derive_seed(s, Stream::Subsample));
        const int n = static_cast<int>(data.labels.size());
        if (n_items > n) {
            throw ConfigError("n_items", "field 'n_items': " + std::to_string(n_items) + " items requested but only " +
                                             std::to_string(n) + " available");
        }
        if (r > data.features.cols()) throw ConfigError("r", "field 'r': larger than the feature dimension");
        if (data.classes > n) throw ConfigError("label_column", "more classes than items");
        const std::uint64_t items = derive_seed(s, Stream::Items);
        const std::vector<int> set1 = sample_without_replacement(n, n_items, derive_seed(items, 1));
        const std::vector<int> set2 = sample_without_replacement(n, n_items, derive_seed(items, 2));
        FitProblem p;
        p.omega = similarity_batch(data, set1, m, derive_seed(s, Stream::Edges));
        p.omega_prime = similarity_batch(data, set2, m, derive_seed(s, Stream::PrimedEdges));
        p.union_batch = concat(p.omega, p.omega_prime);
        p.a1 = p.a2 = act;
        p.tied = true;

        const Eigen::Index d = data.features.cols();
        Rng init_rng(derive_seed(s, Stream::Init));
        const Matrix u0 = gaussian_matrix(d, r, init_rng) / std::sqrt(static_cast<double>(d));
        const WeightPair start(u0, u0);
        out.rows.push_back({label, "data", seed, "items", static_cast<double>(n)});
        out.rows.push_back({label, "data", seed, "features", static_cast<double>(d)});
        out.rows.push_back({label, "data", seed, "classes", static_cast<double>(data.classes)});
        for (Method meth : methods) {
            const std::string name = to_string(meth);
            try {
                const GdResult res = fit_method(meth, p, start, gd);
                const auto [e1, e2] = method_activations(meth, p);
                (void)e2;
                const Matrix coords = top_r_left_singular(embed_rows(res.weights.u, e1, data.features), r);
                const KMeansResult k = kmeans(coords, data.classes, derive_seed(s, Stream::KMeans), km);
                out.rows.push_back({label, name, seed, "cluster_err", clustering_error(k.labels, data.labels)});
                out.rows.push_back({label, name, seed, "iterations", static_cast<double>(res.iterations)});
            } catch (const std::exception& e) {
                out.notes.push_back(error_note(label + "/" + name + "/s" + seed, e));
                out.rows.push_back({label, name, seed, "failed", 1.0});
            }
        }
        return out;
    });
    return report;
}

// ---------------------------------------------------------------- verify

ExperimentReport run_verify(const Config& c, const std::filesystem::path& out_dir) {
    const int lemma_draws = positive_int(c, "lemma_draws");
    const int st_draws = positive_int(c, "stationarity_draws");
    const int st_m = positive_int(c, "stationarity_m");
    const int st_m_large = positive_int(c, "stationarity_m_large");
    const int cv_draws = positive_int(c, "curvature_draws");
    const int cv_m = positive_int(c, "curvature_m");
    const int fd_instances = positive_int(c, "fd_instances");
    const int conv_iters = positive_int(c, "convergence_iters");
    const double conv_scale = c.get_double("convergence_step_scale");
    if (!(conv_scale > 0.0)) throw ConfigError("convergence_step_scale", "field 'convergence_step_scale': must be positive");
    const bool flip = c.get_bool("inject_b_sign_flip");
    const std::uint64_t s = seeds_of(c).front();
    std::filesystem::create_directories(out_dir);

    using AK = ActivationKind;
    auto spec_for = [&](AK a1, AK a2, int d1, int d2, int r, int m, bool fix, const ResponseLaw& law,
                        std::uint64_t tag) {
        GenerativeSpec spec;
        spec.weights = gen_ground_truth(d1, d2, r, fix, derive_seed(derive_seed(s, Stream::Weights), tag)).weights;
        spec.a1 = a1;
        spec.a2 = a2;
        spec.law = law;
        spec.m = m;
        spec.seed = derive_seed(s, tag);
        return spec;
    };

    std::vector<std::function<McCheckResult()>> jobs;
    std::vector<std::string> labels;
    auto add = [&](std::string name, std::function<McCheckResult()> fn) {
        labels.push_back(std::move(name));
        jobs.push_back(std::move(fn));
    };
    const std::pair<const char*, ResponseLaw> lemma_laws[] = {
        {"gaussian", ResponseLaw::gaussian(1.0)}, {"binomial", ResponseLaw::binomial(20)}, {"poisson", ResponseLaw::poisson()}};
    std::uint64_t tag = 1;
    for (const auto& [name, law] : lemma_laws) {
        const GenerativeSpec spec = spec_for(AK::Sigmoid, AK::Tanh, 6, 5, 2, 2, false, law, tag++);
        add(std::string("lemma_b1/") + name, [spec, lemma_draws] { return check_lemma_b1(spec, lemma_draws); });
    }
    {
        const GenerativeSpec spec = spec_for(AK::Sigmoid, AK::Tanh, 6, 5, 2, st_m, false, ResponseLaw::gaussian(), tag++);
        StationarityOptions so;
        so.m_large = st_m_large;
        add("theorem1/sigmoid-tanh", [spec, st_draws, so] { return check_theorem1(spec, st_draws, so); });
    }
    {
        const GenerativeSpec spec = spec_for(AK::ReLU, AK::ReLU, 6, 5, 2, st_m, true, ResponseLaw::gaussian(), tag++);
        StationarityOptions so;
        so.fix_first_row = true;
        so.m_large = st_m_large;
        add("theorem1/relu-relu-fixed", [spec, st_draws, so] { return check_theorem1(spec, st_draws, so); });
    }
    {
        const GenerativeSpec spec = spec_for(AK::Sigmoid, AK::Tanh, 8, 8, 2, cv_m, false, ResponseLaw::gaussian(), tag++);
        add("theorem2/sigmoid-tanh", [spec, cv_draws] { return check_theorem2(spec, cv_draws, false); });
    }
    {
        const GenerativeSpec spec = spec_for(AK::ReLU, AK::Sigmoid, 8, 8, 2, cv_m, true, ResponseLaw::gaussian(), tag++);
        add("theorem2/relu-sigmoid-fixed", [spec, cv_draws] { return check_theorem2(spec, cv_draws, true); });
    }
    {
        const GenerativeSpec spec =
            spec_for(AK::Identity, AK::Identity, 8, 8, 2, cv_m, false, ResponseLaw::gaussian(), tag++);
        add("theorem2/identity-degenerate", [spec, cv_draws] { return check_identity_degeneracy(spec, cv_draws); });
    }
    {
        GenerativeSpec spec = spec_for(AK::ReLU, AK::ReLU, 10, 10, 3, 2000, true, ResponseLaw::gaussian(), tag++);
        ConvergenceCheckOptions co;
        co.gd.max_iters = conv_iters;
        co.gd.step_scale = conv_scale;
        co.fix_first_row = true;
        co.init_seed = derive_seed(s, Stream::Init);
        add("theorem4/gaussian-relu-relu", [spec, co] { return check_theorem4(spec, co); });
    }
    FdSuiteOptions fd;
    fd.instances_per_pair = fd_instances;
    fd.seed = derive_seed(s, tag++);
    fd.flip_b_sign = flip;
    add("fd_gradient", [fd] { return fd_gradient_suite(fd); });
    FdSuiteOptions fh = fd;
    fh.tolerance = 1e-3;
    add("fd_hessian", [fh] { return fd_hessian_suite(fh); });

    ExperimentReport report;
    report.name = "verify";
    run_cells(report, jobs.size(), [&](std::size_t i) {
        CellOutput out;
        McCheckResult res;
        try {
            res = jobs[i]();
        } catch (const std::exception& e) {
            res.statistic = std::nan("");
            res.description = std::string("run failed: ") + e.what();
        }
        res.name = labels[i];
        const std::string seed = std::to_string(s);
        out.rows.push_back({"verify", res.name, seed, "statistic", res.statistic});
        out.rows.push_back({"verify", res.name, seed, "standard_error", res.standard_error});
        out.rows.push_back({"verify", res.name, seed, "pass", res.pass ? 1.0 : 0.0});
        if (!res.pass) out.notes.push_back(res.name + ": " + res.description);
        out.checks.push_back(res);
        return out;
    });

    std::string csv = std::string(kCheckCsvHeader) + "\n";
    for (const auto& ch : report.checks) csv += to_csv_row(ch) + "\n";
    write_text_file(out_dir / "checks.csv", csv);
    return report;
}

} // namespace nsmc
