#include "ssanova/inference.hpp"

#include <algorithm>
#include <cmath>

namespace ssanova {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ArgumentError("normal_quantile needs p in (0,1)");
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
             c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
             a[5]) *
            q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
              c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // one Halley step against erfc
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

namespace {

void check_factorization(const FittedModel& model) {
    if (model.p() == 0 || model.M.rows() != model.p())
        throw FitError("stale or absent factorization in FittedModel");
}

const TermLayout& layout_of(const FittedModel& model, const std::string& name) {
    const TermLayout* L = model.find_term(name);
    if (!L) throw ArgumentError("unknown term '" + name + "'");
    return *L;
}

TermKernel kernel_of(const FittedModel& model, const std::string& name) {
    const PlannedTerm* pt = model.plan.find(name);
    if (!pt) throw ArgumentError("unknown term '" + name + "'");
    return term_kernel(*pt, model.plan.factors);
}

// h(x) restricted to one term, accumulated into h.
void accumulate_h(const FittedModel& model, const TermLayout& L,
                  const TermKernel& k, const Point& x, Eigen::VectorXd& h) {
    const int m = model.m(), q = model.q();
    if (!L.penalized) {
        k.null_basis(x, h.data() + L.null_offset);
    } else if (L.theta_index >= 0) {
        double th = model.theta(L.theta_index);
        for (int j = 0; j < q; ++j) h[m + j] += th * k.eval(x, model.knots[j]);
    } else if (x.subject >= 0) {
        h[m + q + x.subject] = 1.0;
    }
}

double term_value(const FittedModel& model, const TermLayout& L,
                  const TermKernel& k, const Point& x) {
    if (!L.penalized) {
        double buf[8] = {0};
        k.null_basis(x, buf);
        double v = 0.0;
        for (int j = 0; j < L.null_dim; ++j)
            v += buf[j] * model.d[L.null_offset + j];
        return v;
    }
    if (L.theta_index >= 0) {
        double th = model.theta(L.theta_index);
        double v = 0.0;
        for (int j = 0; j < model.q(); ++j)
            v += model.c[j] * k.eval(x, model.knots[j]);
        return th * v;
    }
    return x.subject >= 0 ? model.b_hat[x.subject] : 0.0;
}

std::vector<double> se_from_h(const FittedModel& model,
                              const Eigen::MatrixXd& H) {
    Eigen::MatrixXd W = model.llt.matrixL().solve(H);
    std::vector<double> se(H.cols());
    double s = std::sqrt(std::max(model.sigma2_eps, 0.0));
    for (int j = 0; j < W.cols(); ++j) se[j] = s * W.col(j).norm();
    return se;
}

Point time_point(const FittedModel& model, double minute) {
    Point p;
    p.t = rescale_time(minute);
    p.levels.assign(model.plan.factors.size(), 0);
    return p;
}

void finish_bands(CurveEstimate& ce) {
    double z = normal_quantile(0.5 * (1.0 + ce.level));
    ce.lower.resize(ce.value.size());
    ce.upper.resize(ce.value.size());
    for (std::size_t i = 0; i < ce.value.size(); ++i) {
        ce.lower[i] = ce.value[i] - z * ce.se[i];
        ce.upper[i] = ce.value[i] + z * ce.se[i];
    }
}

}  // namespace

std::vector<double> posterior_variance(const FittedModel& model,
                                       const std::vector<Point>& targets,
                                       const std::vector<std::string>& mask) {
    check_factorization(model);
    if (mask.empty()) throw ArgumentError("empty component mask");
    std::vector<const TermLayout*> Ls;
    std::vector<TermKernel> ks;
    for (const auto& name : mask) {
        Ls.push_back(&layout_of(model, name));
        ks.push_back(kernel_of(model, name));
    }
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(model.p(), targets.size());
    Eigen::VectorXd h(model.p());
    for (std::size_t t = 0; t < targets.size(); ++t) {
        h.setZero();
        for (std::size_t i = 0; i < Ls.size(); ++i)
            accumulate_h(model, *Ls[i], ks[i], targets[t], h);
        H.col(t) = h;
    }
    Eigen::MatrixXd W = model.llt.matrixL().solve(H);
    std::vector<double> var(targets.size());
    for (std::size_t t = 0; t < targets.size(); ++t)
        var[t] = model.sigma2_eps * W.col(t).squaredNorm();
    return var;
}

CurveEstimate eval_component(const FittedModel& model, const std::string& term,
                             const std::vector<double>& grid_minutes,
                             double level, const std::string& at_level) {
    check_factorization(model);
    const TermLayout& L = layout_of(model, term);
    if (L.kind == TermKind::random_intercept)
        throw ArgumentError("random intercept has no component curve");
    TermKernel k = kernel_of(model, term);

    CurveEstimate ce;
    ce.level = level;
    ce.target = term;

    std::vector<Point> targets;
    if (L.kind == TermKind::nominal_main) {
        const FactorDef& fd = model.plan.factors.at(L.factor_index);
        for (int g = 0; g < L.K; ++g) {
            Point p = time_point(model, 0.0);
            p.levels[L.factor_index] = g;
            targets.push_back(std::move(p));
            ce.grid.push_back(g);
            ce.labels.push_back(fd.levels[g]);
        }
    } else {
        int gidx = -1;
        if (L.kind == TermKind::time_by_nominal_linear ||
            L.kind == TermKind::time_by_nominal_smooth) {
            if (at_level.empty())
                throw ArgumentError("term '" + term +
                                    "' needs at_level (factor slice)");
            const FactorDef& fd = model.plan.factors.at(L.factor_index);
            gidx = fd.level_index(at_level);
            if (gidx < 0)
                throw ArgumentError("unknown level '" + at_level +
                                    "' for factor '" + fd.name + "'");
            ce.target = term + "@" + at_level;
        }
        for (double mnt : grid_minutes) {
            Point p = time_point(model, mnt);
            if (gidx >= 0) p.levels[L.factor_index] = gidx;
            targets.push_back(std::move(p));
            ce.grid.push_back(mnt);
        }
    }

    ce.value.reserve(targets.size());
    for (const auto& p : targets) ce.value.push_back(term_value(model, L, k, p));
    auto var = posterior_variance(model, targets, {term});
    ce.se.resize(var.size());
    for (std::size_t i = 0; i < var.size(); ++i)
        ce.se[i] = std::sqrt(std::max(var[i], 0.0));
    finish_bands(ce);
    return ce;
}

CurveEstimate predict(const FittedModel& model,
                      const std::vector<double>& grid_minutes,
                      const std::map<std::string, std::string>& at,
                      double level) {
    check_factorization(model);

    std::vector<std::string> mask;
    for (const auto& L : model.layout)
        if (L.kind != TermKind::random_intercept) mask.push_back(L.name);

    // resolve factor levels for every factor some masked term reads
    std::vector<int> level_idx(model.plan.factors.size(), 0);
    for (const auto& L : model.layout) {
        if (L.factor_index < 0 || L.kind == TermKind::random_intercept) continue;
        const FactorDef& fd = model.plan.factors.at(L.factor_index);
        auto it = at.find(fd.name);
        if (it == at.end())
            throw ArgumentError("predict needs a level for factor '" + fd.name +
                                "'");
        int g = fd.level_index(it->second);
        if (g < 0)
            throw ArgumentError("unknown level '" + it->second +
                                "' for factor '" + fd.name + "'");
        level_idx[L.factor_index] = g;
    }

    std::vector<Point> targets;
    targets.reserve(grid_minutes.size());
    for (double mnt : grid_minutes) {
        Point p = time_point(model, mnt);
        p.levels = level_idx;
        targets.push_back(std::move(p));
    }

    CurveEstimate ce;
    ce.level = level;
    ce.grid = grid_minutes;
    ce.target = "prediction";
    ce.value.assign(targets.size(), 0.0);
    for (const auto& name : mask) {
        const TermLayout& L = layout_of(model, name);
        TermKernel k = kernel_of(model, name);
        for (std::size_t i = 0; i < targets.size(); ++i)
            ce.value[i] += term_value(model, L, k, targets[i]);
    }
    auto var = posterior_variance(model, targets, mask);
    ce.se.resize(var.size());
    for (std::size_t i = 0; i < var.size(); ++i)
        ce.se[i] = std::sqrt(std::max(var[i], 0.0));
    finish_bands(ce);
    return ce;
}

CurveEstimate difference_curve(const FittedModel& model, const std::string& g,
                               const std::string& g_star,
                               const std::vector<double>& grid_minutes,
                               double level) {
    check_factorization(model);

    int fidx = -1;
    for (std::size_t f = 0; f < model.plan.factors.size(); ++f) {
        const FactorDef& fd = model.plan.factors[f];
        if (fd.level_index(g) >= 0 && fd.level_index(g_star) >= 0) {
            fidx = static_cast<int>(f);
            break;
        }
    }
    if (fidx < 0)
        throw ArgumentError("unknown group level '" + g + "' / '" + g_star +
                            "'");
    const FactorDef& fd = model.plan.factors[fidx];
    int gi = fd.level_index(g), gj = fd.level_index(g_star);

    // group-dependent terms only: nominal main + both interaction parts
    std::vector<const TermLayout*> Ls;
    std::vector<TermKernel> ks;
    for (const auto& L : model.layout) {
        if (L.factor_index != fidx) continue;
        if (L.kind == TermKind::nominal_main ||
            L.kind == TermKind::time_by_nominal_linear ||
            L.kind == TermKind::time_by_nominal_smooth) {
            Ls.push_back(&L);
            ks.push_back(kernel_of(model, L.name));
        }
    }

    CurveEstimate ce;
    ce.level = level;
    ce.grid = grid_minutes;
    ce.target = "delta(" + g + " vs " + g_star + ")";
    ce.value.assign(grid_minutes.size(), 0.0);

    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(model.p(), grid_minutes.size());
    Eigen::VectorXd ha(model.p()), hb(model.p());
    for (std::size_t i = 0; i < grid_minutes.size(); ++i) {
        Point pa = time_point(model, grid_minutes[i]);
        Point pb = pa;
        pa.levels[fidx] = gi;
        pb.levels[fidx] = gj;
        ha.setZero();
        hb.setZero();
        for (std::size_t t = 0; t < Ls.size(); ++t) {
            ce.value[i] += term_value(model, *Ls[t], ks[t], pa) -
                           term_value(model, *Ls[t], ks[t], pb);
            accumulate_h(model, *Ls[t], ks[t], pa, ha);
            accumulate_h(model, *Ls[t], ks[t], pb, hb);
        }
        H.col(i) = ha - hb;
    }
    auto se = se_from_h(model, H);
    ce.se = std::move(se);
    finish_bands(ce);
    return ce;
}

RegionSet significant_regions(const CurveEstimate& curve) {
    RegionSet rs;
    rs.level = curve.level;
    const std::size_t N = curve.grid.size();
    double step = N >= 2 ? curve.grid[1] - curve.grid[0] : 1.0;
    auto clamp_minute = [&](double v) {
        return v >= 1440.0 ? 1440.0 - step : v;
    };
    std::size_t i = 0;
    while (i < N) {
        bool sig = curve.lower[i] > 0.0 || curve.upper[i] < 0.0;
        if (!sig) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < N && (curve.lower[j + 1] > 0.0 || curve.upper[j + 1] < 0.0))
            ++j;
        double a = clamp_minute(curve.grid[i]);
        double b = clamp_minute(curve.grid[j]);
        if (a <= b) rs.intervals.emplace_back(a, b);
        i = j + 1;
    }
    return rs;
}

FitReport summarize_fit(const FittedModel& model) {
    FitReport r;
    r.n = model.n;
    r.knots = model.q();
    r.null_dim = model.m();
    r.subjects = model.n_subj();
    r.r_squared = model.r_squared;
    r.sigma_eps = std::sqrt(std::max(model.sigma2_eps, 0.0));
    r.sigma_b = std::sqrt(std::max(model.sigma2_b, 0.0));
    r.trace_A = model.trace_A;
    r.criterion = criterion_name(model.plan.spec.criterion);
    r.criterion_value = model.criterion_value;
    r.lambda = std::pow(10.0, model.params.log_lambda);
    r.lambda_b = model.plan.has_random_intercept()
                     ? std::pow(10.0, model.params.log_lambda_b)
                     : 0.0;
    for (const auto& L : model.layout)
        if (L.theta_index >= 0)
            r.theta.emplace_back(L.name, model.theta(L.theta_index));
    r.transform = transform_name(model.plan.spec.transform);
    return r;
}

std::vector<double> uniform_grid_minutes(double step_minutes) {
    if (!(step_minutes > 0.0))
        throw ArgumentError("grid step must be positive");
    std::vector<double> g;
    long k_max = static_cast<long>(std::floor(1440.0 / step_minutes + 1e-9));
    g.reserve(k_max + 1);
    for (long k = 0; k <= k_max; ++k)
        g.push_back(std::min(k * step_minutes, 1440.0));
    return g;
}

}  // namespace ssanova
