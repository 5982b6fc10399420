#include "nsmc/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nsmc/random.hpp"

namespace nsmc {

WeightPair init_near_truth(const WeightPair& truth, double radius_sq, bool fix_first_row, std::uint64_t seed) {
    if (!(radius_sq >= 0.0)) throw std::invalid_argument("init_near_truth: radius_sq must be >= 0");
    if (radius_sq == 0.0) return truth;
    Rng rng(seed);
    WeightPair delta(gaussian_matrix(truth.d1(), truth.rank(), rng), gaussian_matrix(truth.d2(), truth.rank(), rng));
    if (fix_first_row) delta.u.row(0).setZero();
    delta *= std::sqrt(radius_sq / delta.squared_norm());
    return truth + delta;
}

namespace {

double grad_norm(const WeightPair& g) { return std::sqrt(g.squared_norm()); }

} // namespace

GdResult gd_minimize(const Objective& objective, const WeightPair& start, const GdConfig& cfg) {
    if (cfg.max_iters < 0) throw std::invalid_argument("gd_minimize: max_iters must be >= 0");
    if (cfg.step && !(*cfg.step > 0.0)) throw std::invalid_argument("gd_minimize: step must be > 0");

    GdResult result;
    if (!cfg.step && !(cfg.step_scale > 0.0)) throw std::invalid_argument("gd_minimize: step_scale must be > 0");
    result.step = cfg.step ? *cfg.step : cfg.step_scale * estimate_step(objective, start);
    result.weights = start;

    double initial_loss = 0.0;
    for (int t = 0;; ++t) {
        const LossReport rep = objective(result.weights);
        GdRecord rec;
        rec.iter = t;
        rec.loss = rep.value;
        rec.grad_norm = grad_norm(rep.grad);
        if (cfg.trace_truth) rec.dist_sq = squared_distance(result.weights, *cfg.trace_truth);
        result.trace.records.push_back(rec);

        if (!std::isfinite(rec.loss) || !std::isfinite(rec.grad_norm) || !result.weights.all_finite()) {
            throw GdDiverged("gd_minimize: non-finite loss or gradient at iteration " + std::to_string(t),
                             result.trace);
        }
        if (t == 0) initial_loss = std::abs(rec.loss);
        if (rec.loss > cfg.divergence_factor * std::max(initial_loss, 1e-12)) {
            throw GdDiverged("gd_minimize: loss grew from " + std::to_string(initial_loss) + " to " +
                                 std::to_string(rec.loss) + " by iteration " + std::to_string(t),
                             result.trace);
        }
        if (rec.grad_norm < cfg.grad_tol) {
            result.converged = true;
            break;
        }
        if (t == cfg.max_iters) break;
        result.weights.u.noalias() -= result.step * rep.grad.u;
        result.weights.v.noalias() -= result.step * rep.grad.v;
        result.iterations = t + 1;
    }
    return result;
}

double estimate_step(const Objective& objective, const WeightPair& start) {
    constexpr int kIters = 30;
    constexpr double kFdStep = 1e-5;
    const auto d1 = start.d1();
    const auto d2 = start.d2();
    const auto r = start.rank();

    Rng rng(0x5eed5eedULL);
    Vector dir = gaussian_matrix(start.dim(), 1, rng).col(0);
    dir.normalize();

    auto hvp = [&](const Vector& v) {
        const WeightPair step = WeightPair::unflatten(kFdStep * v, d1, d2, r);
        const Vector gp = objective(start + step).grad.flatten();
        const Vector gm = objective(start - step).grad.flatten();
        return Vector((gp - gm) / (2.0 * kFdStep));
    };

    double lambda = 0.0;
    double previous = 0.0;
    for (int it = 0; it < kIters; ++it) {
        const Vector hv = hvp(dir);
        previous = lambda;
        lambda = dir.dot(hv);
        const double norm = hv.norm();
        if (!std::isfinite(norm)) throw std::runtime_error("estimate_step: non-finite Hessian-vector product");
        if (norm == 0.0) throw std::runtime_error("estimate_step: Hessian vanishes along the search direction");
        dir = hv / norm;
    }
    const double rel_change = std::abs(lambda - previous) / std::max(std::abs(lambda), 1e-300);
    if (rel_change > 1e-2) {
        throw std::runtime_error("estimate_step: power iteration did not settle (relative change " +
                                 std::to_string(rel_change) + "); pass an explicit step");
    }
    return 1.0 / std::abs(lambda);
}

ContractionFit fit_contraction_rate(const GdTrace& trace) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& rec : trace.records) {
        if (!(rec.dist_sq > 0.0)) break;
        xs.push_back(rec.iter);
        ys.push_back(std::log(rec.dist_sq));
    }
    if (xs.size() < 10) {
        throw std::invalid_argument("fit_contraction_rate: need at least 10 positive distance records, have " +
                                    std::to_string(xs.size()));
    }
    const auto n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    ContractionFit fit;
    fit.rho = std::exp(slope);
    fit.points = xs.size();
    const double ss_res = std::max(syy - slope * sxy, 0.0);
    fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.slope_se = std::sqrt(ss_res / (n - 2.0) / sxx);
    return fit;
}

GdTrace pre_plateau(const GdTrace& trace, double factor) {
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& rec : trace.records) {
        if (rec.dist_sq > 0.0) floor = std::min(floor, rec.dist_sq);
    }
    GdTrace out;
    for (const auto& rec : trace.records) {
        if (!(rec.dist_sq >= factor * floor)) break;
        out.records.push_back(rec);
    }
    return out;
}

} // namespace nsmc
