#include "nsmc/verification.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "nsmc/baselines.hpp"
#include "nsmc/parallel.hpp"

namespace nsmc {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

GenerativeSpec draw_spec(const GenerativeSpec& spec, int draw, int m) {
    GenerativeSpec s = spec;
    s.seed = derive_seed(spec.seed, 1000 + static_cast<std::uint64_t>(draw));
    s.m = m;
    return s;
}

struct MomentSummary {
    Vector mean;
    Vector se;
};

MomentSummary summarize(const std::vector<Vector>& draws) {
    const auto n = static_cast<double>(draws.size());
    Vector mean = Vector::Zero(draws.front().size());
    for (const auto& d : draws) mean += d;
    mean /= n;
    Vector var = Vector::Zero(mean.size());
    for (const auto& d : draws) var += (d - mean).cwiseAbs2();
    var /= (n - 1.0);
    return {mean, (var / n).cwiseSqrt()};
}

} // namespace

McCheckResult check_lemma_b1(const GenerativeSpec& spec, int n_draws, double theta_offset, bool same_covariates) {
    if (n_draws < 100) throw std::invalid_argument("check_lemma_b1: n_draws must be >= 100");
    const auto d1 = static_cast<int>(spec.weights.d1());
    const auto d2 = static_cast<int>(spec.weights.d2());
    const FeaturePool a = gen_features(1, 1, d1, d2, derive_seed(spec.seed, Stream::Features));
    const FeaturePool b =
        same_covariates ? a : gen_features(1, 1, d1, d2, derive_seed(spec.seed, Stream::PrimedFeatures));
    const double th = theta(spec.weights, spec.a1, spec.a2, a.x.row(0).transpose(), a.z.row(0).transpose());
    const double th_p = theta(spec.weights, spec.a1, spec.a2, b.x.row(0).transpose(), b.z.row(0).transpose());

    Rng rng(derive_seed(spec.seed, Stream::Responses));
    long double sum = 0.0L;
    long double sum_sq = 0.0L;
    for (int i = 0; i < n_draws; ++i) {
        const double y = spec.law.draw(th, rng);
        const double yp = spec.law.draw(th_p, rng);
        const double bstar = pair_scalars(y, yp, th + theta_offset, th_p).b;
        sum += bstar;
        sum_sq += static_cast<long double>(bstar) * bstar;
    }
    const double mean = static_cast<double>(sum / n_draws);
    const double var = static_cast<double>((sum_sq - sum * sum / n_draws) / (n_draws - 1));
    const double se = std::sqrt(std::max(var, 0.0) / n_draws);

    McCheckResult res;
    res.name = "lemma_b1";
    res.statistic = mean;
    res.standard_error = se;
    res.n_draws = n_draws;
    res.pass = std::abs(mean) < 3.0 * se || (mean == 0.0 && se == 0.0);
    res.description = "pass iff |mean B*| < 3 SE; law=" + spec.law.describe() + " theta=" + fmt(th) +
                      " theta'=" + fmt(th_p) + " offset=" + fmt(theta_offset);
    return res;
}

namespace {

Vector gradient_at_truth(const GenerativeSpec& s, const StationarityOptions& opts) {
    const SplitSample data = split_samples(s);
    LossOptions lo;
    lo.a1 = s.a1;
    lo.a2 = s.a2;
    lo.fix_first_row = opts.fix_first_row;
    if (opts.method == GradientMethod::Nsmc) {
        return loss_grad(s.weights, data.batch(), data.batch_prime(), lo).grad.flatten();
    }
    return nimc_loss_grad(s.weights, concat(data.batch(), data.batch_prime()), lo).grad.flatten();
}

std::vector<Vector> gradient_draws(const GenerativeSpec& spec, int n_draws, int m, const StationarityOptions& opts) {
    std::vector<Vector> draws(static_cast<std::size_t>(n_draws));
    parallel_for(draws.size(), [&](std::size_t j) {
        draws[j] = gradient_at_truth(draw_spec(spec, static_cast<int>(j), m), opts);
    });
    return draws;
}

} // namespace

McCheckResult check_theorem1(const GenerativeSpec& spec, int n_draws, const StationarityOptions& opts) {
    if (n_draws < 20) throw std::invalid_argument("check_theorem1: n_draws must be >= 20");
    const int m_large = opts.m_large > 0 ? opts.m_large : 2 * spec.m;

    const MomentSummary small = summarize(gradient_draws(spec, n_draws, spec.m, opts));
    const MomentSummary large = summarize(gradient_draws(spec, n_draws, m_large, opts));

    double worst_z = 0.0;
    int worst_index = -1;
    bool within = true;
    for (const MomentSummary* s : {&small, &large}) {
        for (Eigen::Index i = 0; i < s->mean.size(); ++i) {
            if (s->se(i) == 0.0 && s->mean(i) == 0.0) continue; // constrained coordinate
            const double z = std::abs(s->mean(i)) / s->se(i);
            if (!(z < 3.0)) within = false;
            if (z > worst_z) {
                worst_z = z;
                worst_index = static_cast<int>(i);
            }
        }
    }
    const double norm_small = small.mean.norm();
    const double norm_large = large.mean.norm();
    const bool shrinks = norm_large < norm_small;

    McCheckResult res;
    res.name = opts.method == GradientMethod::Nsmc ? "theorem1_stationarity" : "theorem1_stationarity_nimc";
    res.statistic = norm_small;
    res.standard_error = small.se.norm();
    res.n_draws = n_draws;
    res.pass = within && shrinks;
    res.description = "pass iff every coordinate |mean| < 3 SE at m=" + std::to_string(spec.m) + " and m=" +
                      std::to_string(m_large) + " and ||mean|| shrinks; worst z=" + fmt(worst_z) + " (coord " +
                      std::to_string(worst_index) + "), ||mean||: " + fmt(norm_small) + " -> " + fmt(norm_large);
    return res;
}

std::vector<Eigen::Index> first_row_indices(Eigen::Index d1, Eigen::Index r) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < r; ++i) idx.push_back(i * d1);
    return idx;
}

Matrix restrict_matrix(const Matrix& h, const std::vector<Eigen::Index>& drop) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        if (std::find(drop.begin(), drop.end(), i) == drop.end()) keep.push_back(i);
    }
    Matrix out(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a) {
        for (std::size_t b = 0; b < keep.size(); ++b) out(a, b) = h(keep[a], keep[b]);
    }
    return out;
}

CurvatureReport average_hessian_at_truth(const GenerativeSpec& spec, int n_draws, bool fix_first_row) {
    if (n_draws < 1) throw std::invalid_argument("average_hessian_at_truth: n_draws must be >= 1");
    LossOptions lo;
    lo.a1 = spec.a1;
    lo.a2 = spec.a2;
    std::vector<Matrix> hessians(static_cast<std::size_t>(n_draws));
    parallel_for(hessians.size(), [&](std::size_t j) {
        const SplitSample data = split_samples(draw_spec(spec, static_cast<int>(j), spec.m));
        // Unsymmetrized sum of the two parts so the asymmetry check is meaningful.
        const HessianParts parts = loss_hessian_parts(spec.weights, data.batch(), data.batch_prime(), lo);
        hessians[j] = parts.total();
    });
    Matrix mean = Matrix::Zero(spec.weights.dim(), spec.weights.dim());
    for (const auto& h : hessians) mean += h;
    mean /= n_draws;

    CurvatureReport rep;
    rep.asymmetry = (mean - mean.transpose()).norm() / std::max(mean.norm(), 1e-300);
    rep.mean_hessian = 0.5 * (mean + mean.transpose());
    const std::vector<Eigen::Index> drop =
        fix_first_row ? first_row_indices(spec.weights.d1(), spec.weights.rank()) : std::vector<Eigen::Index>{};
    const Matrix target = restrict_matrix(rep.mean_hessian, drop);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(target);
    rep.lambda_min = eig.eigenvalues()(0);
    rep.lambda_max = eig.eigenvalues()(eig.eigenvalues().size() - 1);

    // Spread of the Rayleigh quotient along the minimizing eigenvector.
    const Vector v = eig.eigenvectors().col(0);
    std::vector<double> q;
    for (const auto& h : hessians) {
        const Matrix hs = restrict_matrix(0.5 * (h + h.transpose()), drop);
        q.push_back(v.dot(hs * v));
    }
    double qm = 0.0;
    for (const double x : q) qm += x;
    qm /= static_cast<double>(q.size());
    double qv = 0.0;
    for (const double x : q) qv += (x - qm) * (x - qm);
    rep.lambda_min_se = q.size() > 1 ? std::sqrt(qv / static_cast<double>(q.size() - 1) / q.size()) : 0.0;
    return rep;
}

McCheckResult check_theorem2(const GenerativeSpec& spec, int n_draws, bool fix_first_row) {
    if (n_draws < 20) throw std::invalid_argument("check_theorem2: n_draws must be >= 20");
    if (spec.weights.dim() > 200) throw std::invalid_argument("check_theorem2: r(d1+d2) must be <= 200");
    const CurvatureReport rep = average_hessian_at_truth(spec, n_draws, fix_first_row);
    McCheckResult res;
    res.name = fix_first_row ? "theorem2_curvature_fixed_row" : "theorem2_curvature";
    res.statistic = rep.lambda_min;
    res.standard_error = rep.lambda_min_se;
    res.n_draws = n_draws;
    res.pass = rep.lambda_min > 0.0 && rep.asymmetry < 1e-9;
    res.description = "pass iff lambda_min of the averaged Hessian > 0 (asymmetry " + fmt(rep.asymmetry) +
                      " < 1e-9); " + to_string(spec.a1) + "/" + to_string(spec.a2) +
                      (fix_first_row ? ", first U-row removed" : "") + ", lambda_max=" + fmt(rep.lambda_max);
    return res;
}

Vector rotation_null_direction(const WeightPair& weights) {
    if (weights.rank() < 2) throw std::invalid_argument("rotation_null_direction: needs r >= 2");
    Matrix e = Matrix::Zero(weights.rank(), weights.rank());
    e(0, 1) = 1.0;
    // (U + tUE)(V - tVE^T)^T = UV^T exactly because E^2 = 0.
    const WeightPair dir(weights.u * e, -(weights.v * e.transpose()));
    Vector flat = dir.flatten();
    return flat / flat.norm();
}

McCheckResult check_identity_degeneracy(const GenerativeSpec& spec, int n_draws) {
    GenerativeSpec s = spec;
    s.a1 = ActivationKind::Identity;
    s.a2 = ActivationKind::Identity;
    const CurvatureReport rep = average_hessian_at_truth(s, n_draws, false);
    const Vector v = rotation_null_direction(s.weights);
    const double q = v.dot(rep.mean_hessian * v);
    McCheckResult res;
    res.name = "theorem2_identity_degenerate";
    res.statistic = q;
    res.standard_error = 0.0;
    res.n_draws = n_draws;
    res.pass = std::abs(q) < 1e-6 * rep.lambda_max;
    res.description = "pass iff the quadratic form along (UE; -VE^T) is below 1e-6 lambda_max = " +
                      fmt(1e-6 * rep.lambda_max) + "; lambda_min=" + fmt(rep.lambda_min);
    return res;
}

ConvergenceRun run_convergence_trial(const GenerativeSpec& spec, const ConvergenceCheckOptions& opts) {
    const SplitSample data = split_samples(spec);
    const SampleBatch omega = data.batch();
    const SampleBatch omega_prime = data.batch_prime();
    LossOptions lo;
    lo.a1 = spec.a1;
    lo.a2 = spec.a2;
    lo.fix_first_row = opts.fix_first_row;
    const Objective objective = [&](const WeightPair& w) { return loss_grad(w, omega, omega_prime, lo); };

    GdConfig gd = opts.gd;
    gd.trace_truth = spec.weights;
    const WeightPair start = init_near_truth(spec.weights, opts.radius_sq, opts.fix_first_row, opts.init_seed);
    ConvergenceRun run;
    run.gd = gd_minimize(objective, start, gd);
    run.fit = fit_contraction_rate(pre_plateau(run.gd.trace, opts.plateau_factor));
    return run;
}

McCheckResult check_theorem4(const GenerativeSpec& spec, const ConvergenceCheckOptions& opts) {
    McCheckResult res;
    res.name = "theorem4_linear_convergence";
    res.n_draws = 1;
    try {
        const ConvergenceRun run = run_convergence_trial(spec, opts);
        res.statistic = run.fit.rho;
        res.standard_error = run.fit.rho * run.fit.slope_se;
        res.pass = run.fit.rho < 1.0 && run.fit.r_squared > opts.min_r_squared;
        res.description = "pass iff rho < 1 and R^2 > " + fmt(opts.min_r_squared) + " over " +
                          std::to_string(run.fit.points) + " pre-plateau iterations; R^2=" +
                          fmt(run.fit.r_squared) + " final dist_sq=" + fmt(run.gd.trace.records.back().dist_sq);
    } catch (const GdDiverged& e) {
        res.statistic = std::numeric_limits<double>::infinity();
        res.pass = false;
        res.description = std::string("diverged: ") + e.what();
    } catch (const std::invalid_argument& e) {
        res.statistic = std::numeric_limits<double>::quiet_NaN();
        res.pass = false;
        res.description = std::string("no usable trace: ") + e.what();
    } catch (const std::exception& e) {
        res.statistic = std::numeric_limits<double>::quiet_NaN();
        res.pass = false;
        res.description = std::string("run failed: ") + e.what();
    }
    return res;
}

double kappa_bar(const Matrix& w) {
    const Vector sv = singular_values(w);
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 1e-10 * sv(0))) throw std::invalid_argument("kappa_bar: matrix is rank deficient");
    double prod = 1.0;
    for (Eigen::Index p = 0; p < sv.size(); ++p) prod *= sv(p) / smallest;
    return prod;
}

SmallInstance draw_small_instance(const FdSuiteOptions& opts, ActivationKind a1, ActivationKind a2, Rng& rng) {
    const bool has_relu = a1 == ActivationKind::ReLU || a2 == ActivationKind::ReLU;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        SmallInstance inst;
        inst.weights = WeightPair(gaussian_matrix(opts.d1, opts.r, rng), gaussian_matrix(opts.d2, opts.r, rng));
        auto batch = [&] {
            return SampleBatch{gaussian_matrix(opts.m, opts.d1, rng), gaussian_matrix(opts.m, opts.d2, rng),
                               2.0 * gaussian_matrix(opts.m, 1, rng).col(0)};
        };
        inst.omega = batch();
        inst.omega_prime = batch();
        if (!has_relu) return inst;
        double nearest = std::numeric_limits<double>::infinity();
        for (const SampleBatch* b : {&inst.omega, &inst.omega_prime}) {
            nearest = std::min(nearest, (b->x * inst.weights.u).cwiseAbs().minCoeff());
            nearest = std::min(nearest, (b->z * inst.weights.v).cwiseAbs().minCoeff());
        }
        if (nearest >= 1e-3) return inst;
    }
    throw std::runtime_error("draw_small_instance: could not avoid the ReLU kink");
}

WeightPair fd_gradient(const WeightPair& w, const SampleBatch& omega, const SampleBatch& omega_prime,
                       const LossOptions& opts, double step) {
    Vector flat = w.flatten();
    Vector grad(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        const double keep = flat(i);
        flat(i) = keep + step;
        const double up = loss_value(WeightPair::unflatten(flat, w.d1(), w.d2(), w.rank()), omega, omega_prime, opts);
        flat(i) = keep - step;
        const double down =
            loss_value(WeightPair::unflatten(flat, w.d1(), w.d2(), w.rank()), omega, omega_prime, opts);
        flat(i) = keep;
        grad(i) = (up - down) / (2.0 * step);
    }
    return WeightPair::unflatten(grad, w.d1(), w.d2(), w.rank());
}

Matrix fd_hessian(const WeightPair& w, const SampleBatch& omega, const SampleBatch& omega_prime,
                  const LossOptions& opts, double step) {
    Vector flat = w.flatten();
    Matrix h(flat.size(), flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        const double keep = flat(i);
        flat(i) = keep + step;
        const Vector up = loss_grad(WeightPair::unflatten(flat, w.d1(), w.d2(), w.rank()), omega, omega_prime, opts)
                              .grad.flatten();
        flat(i) = keep - step;
        const Vector down =
            loss_grad(WeightPair::unflatten(flat, w.d1(), w.d2(), w.rank()), omega, omega_prime, opts)
                .grad.flatten();
        flat(i) = keep;
        h.col(i) = (up - down) / (2.0 * step);
    }
    return h;
}

namespace {

constexpr std::array<ActivationKind, 3> kPaperActivations = {ActivationKind::Sigmoid, ActivationKind::Tanh,
                                                             ActivationKind::ReLU};

template <class ErrorFn>
McCheckResult fd_suite(const FdSuiteOptions& opts, const std::string& name, ErrorFn&& relative_error) {
    double worst = 0.0;
    std::string worst_case;
    int count = 0;
    Rng rng(opts.seed);
    for (const auto a1 : kPaperActivations) {
        for (const auto a2 : kPaperActivations) {
            for (int i = 0; i < opts.instances_per_pair; ++i) {
                const SmallInstance inst = draw_small_instance(opts, a1, a2, rng);
                LossOptions lo;
                lo.a1 = a1;
                lo.a2 = a2;
                lo.flip_b_sign = opts.flip_b_sign;
                const double err = relative_error(inst, lo);
                ++count;
                if (!(err <= worst)) {
                    worst = err;
                    worst_case = to_string(a1) + "/" + to_string(a2) + " #" + std::to_string(i);
                }
            }
        }
    }
    McCheckResult res;
    res.name = name;
    res.statistic = worst;
    res.n_draws = count;
    res.pass = worst < opts.tolerance;
    res.description = "pass iff max relative error < " + fmt(opts.tolerance) + "; worst " + worst_case;
    return res;
}

} // namespace

McCheckResult fd_gradient_suite(const FdSuiteOptions& opts) {
    return fd_suite(opts, "fd_gradient", [&](const SmallInstance& inst, const LossOptions& lo) {
        const Vector analytic = loss_grad(inst.weights, inst.omega, inst.omega_prime, lo).grad.flatten();
        const Vector numeric = fd_gradient(inst.weights, inst.omega, inst.omega_prime, lo, opts.fd_step).flatten();
        return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
    });
}

McCheckResult fd_hessian_suite(const FdSuiteOptions& opts) {
    return fd_suite(opts, "fd_hessian", [&](const SmallInstance& inst, const LossOptions& lo) {
        const Matrix analytic = loss_hessian(inst.weights, inst.omega, inst.omega_prime, lo);
        const Matrix numeric = fd_hessian(inst.weights, inst.omega, inst.omega_prime, lo, opts.fd_step);
        return (analytic - numeric).norm() / std::max(numeric.norm(), 1e-12);
    });
}

std::string to_csv_row(const McCheckResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << r.name << ',' << r.statistic << ',' << r.standard_error << ',' << r.n_draws << ',' << (r.pass ? 1 : 0);
    return os.str();
}

} // namespace nsmc
