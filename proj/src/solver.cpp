#include "ssanova/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace ssanova {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pow10(double x) { return std::pow(10.0, x); }

std::vector<double> thetas_of(const SmoothingParams& par, int B) {
    if (static_cast<int>(par.log_theta.size()) != B)
        throw ArgumentError("SmoothingParams has " +
                            std::to_string(par.log_theta.size()) +
                            " theta values, system needs " + std::to_string(B));
    std::vector<double> th(B);
    for (int b = 0; b < B; ++b) {
        if (!std::isfinite(par.log_theta[b]))
            throw ArgumentError("non-finite log_theta");
        th[b] = pow10(par.log_theta[b]);
    }
    return th;
}

}  // namespace

void PenalizedSystem::finalize() {
    const int B = b_terms();
    const int nn = n(), mm = m(), qq = q();
    if (S.rows() != nn)
        throw ArgumentError("null design rows do not match y length");
    StS = S.transpose() * S;
    Sty = S.transpose() * y;
    StR.resize(B);
    Rty.resize(B);
    RtR.assign(B, std::vector<Eigen::MatrixXd>(B));
    for (int b = 0; b < B; ++b) {
        if (R[b].rows() != nn || R[b].cols() != qq)
            throw ArgumentError("kernel design shape mismatch");
        StR[b] = S.transpose() * R[b];
        Rty[b] = R[b].transpose() * y;
    }
    for (int b = 0; b < B; ++b)
        for (int g = b; g < B; ++g) {
            RtR[b][g] = R[b].transpose() * R[g];
            if (g != b) RtR[g][b] = RtR[b][g].transpose();
        }
    if (has_random()) {
        if (static_cast<int>(subject_of.size()) != nn)
            throw ArgumentError("subject index length mismatch");
        StZ = Eigen::MatrixXd::Zero(mm, n_subjects);
        RtZ.assign(B, Eigen::MatrixXd::Zero(qq, n_subjects));
        Zty = Eigen::VectorXd::Zero(n_subjects);
        z_counts = Eigen::VectorXd::Zero(n_subjects);
        for (int i = 0; i < nn; ++i) {
            int s = subject_of[i];
            if (s < 0 || s >= n_subjects)
                throw ArgumentError("subject index out of range");
            StZ.col(s) += S.row(i).transpose();
            for (int b = 0; b < B; ++b) RtZ[b].col(s) += R[b].row(i).transpose();
            Zty[s] += y[i];
            z_counts[s] += 1.0;
        }
    }
    yty = y.squaredNorm();
    finalized_ = true;
}

namespace {

// Everything one criterion evaluation needs, with no O(n) work unless the
// residual identity loses precision.
struct Assembled {
    Eigen::MatrixXd M;     // p x p, jitter included
    Eigen::MatrixXd G;     // X'X
    Eigen::VectorXd rhs;   // X'y
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd u;
    double rss = 0.0;
    double trace_A = 0.0;
    double jitter = 0.0;
};

void diagnose_rank(const PenalizedSystem& sys) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.S);
    qr.setThreshold(1e-10);
    int rank = static_cast<int>(qr.rank());
    if (rank < sys.m()) {
        auto perm = qr.colsPermutation().indices();
        std::string cols;
        for (int i = rank; i < sys.m(); ++i) {
            if (!cols.empty()) cols += ", ";
            cols += sys.null_names.empty() ? std::to_string(perm[i])
                                           : sys.null_names[perm[i]];
        }
        throw FitError(
            "singular fit: null design is rank deficient; offending columns: " +
            cols);
    }
    throw FitError(
        "singular fit: penalized system not positive definite after jitter "
        "escalation");
}

// tr(A) = tr(M^-1 G) = ||L^-1 F||_F^2 for any F with F F' = G. Going through
// a pivoted LDLT factor of G keeps the result nonnegative even when M is
// barely positive definite, where solving for G column-wise produces noise
// of either sign. The exact value lies in [0, min(p, n)]; clamp to that.
double trace_smoother(const Eigen::LLT<Eigen::MatrixXd>& llt,
                      const Eigen::MatrixXd& G, int n) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    Eigen::VectorXd sd = ldlt.vectorD().array().max(0.0).sqrt();
    Eigen::MatrixXd F = ldlt.matrixL();
    F = F * sd.asDiagonal();
    F = ldlt.transpositionsP().transpose() * F;
    double tr = llt.matrixL().solve(F).squaredNorm();
    return std::min(tr, static_cast<double>(std::min<Eigen::Index>(G.rows(), n)));
}

Eigen::VectorXd fitted_values(const PenalizedSystem& sys,
                              const std::vector<double>& th,
                              const Eigen::VectorXd& u) {
    const int m = sys.m(), q = sys.q(), B = sys.b_terms();
    Eigen::VectorXd f = sys.S * u.head(m);
    for (int b = 0; b < B; ++b) f.noalias() += th[b] * (sys.R[b] * u.segment(m, q));
    if (sys.has_random())
        for (int i = 0; i < sys.n(); ++i)
            f[i] += u[m + q + sys.subject_of[i]];
    return f;
}

Assembled assemble_solve(const PenalizedSystem& sys, const SmoothingParams& par,
                         bool need_trace) {
    if (!sys.finalized())
        throw ArgumentError("PenalizedSystem::finalize() not called");
    if (!std::isfinite(par.log_lambda) || !std::isfinite(par.log_lambda_b))
        throw ArgumentError("non-finite smoothing parameters");

    const int n = sys.n(), m = sys.m(), q = sys.q(), B = sys.b_terms();
    const int S = sys.n_subjects, p = sys.p();
    const double lambda = pow10(par.log_lambda);
    const double lambda_b = pow10(par.log_lambda_b);
    const std::vector<double> th = thetas_of(par, B);

    Assembled out;
    Eigen::MatrixXd& G = out.G;
    G.setZero(p, p);
    G.block(0, 0, m, m) = sys.StS;
    Eigen::MatrixXd G12 = Eigen::MatrixXd::Zero(m, q);
    Eigen::MatrixXd G22 = Eigen::MatrixXd::Zero(q, q);
    for (int b = 0; b < B; ++b) {
        G12.noalias() += th[b] * sys.StR[b];
        for (int g = 0; g < B; ++g)
            G22.noalias() += (th[b] * th[g]) * sys.RtR[b][g];
    }
    G.block(0, m, m, q) = G12;
    G.block(m, 0, q, m) = G12.transpose();
    G.block(m, m, q, q) = G22;
    if (S > 0) {
        Eigen::MatrixXd G23 = Eigen::MatrixXd::Zero(q, S);
        for (int b = 0; b < B; ++b) G23.noalias() += th[b] * sys.RtZ[b];
        G.block(0, m + q, m, S) = sys.StZ;
        G.block(m + q, 0, S, m) = sys.StZ.transpose();
        G.block(m, m + q, q, S) = G23;
        G.block(m + q, m, S, q) = G23.transpose();
        G.block(m + q, m + q, S, S).diagonal() = sys.z_counts;
    }

    out.rhs.setZero(p);
    out.rhs.head(m) = sys.Sty;
    for (int b = 0; b < B; ++b) out.rhs.segment(m, q).noalias() += th[b] * sys.Rty[b];
    if (S > 0) out.rhs.tail(S) = sys.Zty;

    out.M = G;
    if (q > 0) {
        Eigen::MatrixXd Qth = Eigen::MatrixXd::Zero(q, q);
        for (int b = 0; b < B; ++b) Qth.noalias() += th[b] * sys.Q[b];
        out.M.block(m, m, q, q).noalias() += (n * lambda) * Qth;
    }
    if (S > 0)
        out.M.diagonal().tail(S).array() += n * lambda_b;

    // Cholesky with escalating diagonal jitter; bare attempt first.
    const double scale = out.M.trace() / p;
    double jit = 0.0;
    for (;;) {
        Eigen::MatrixXd Mj = out.M;
        if (jit > 0.0) Mj.diagonal().array() += jit;
        out.llt.compute(Mj);
        if (out.llt.info() == Eigen::Success) {
            out.M = std::move(Mj);
            out.jitter = jit;
            break;
        }
        if (jit == 0.0)
            jit = 1e-10 * scale;
        else
            jit *= 10.0;
        if (jit > 1e-6 * scale) diagnose_rank(sys);
    }

    out.u = out.llt.solve(out.rhs);

    double rss_id = sys.yty - 2.0 * out.u.dot(out.rhs) + out.u.dot(G * out.u);
    if (!(rss_id > 1e-6 * std::max(sys.yty, 1.0))) {
        // The cross-product identity cancels catastrophically near
        // interpolation; fall back to explicit residuals.
        Eigen::VectorXd f = fitted_values(sys, th, out.u);
        rss_id = (sys.y - f).squaredNorm();
    }
    out.rss = rss_id;

    if (need_trace) out.trace_A = trace_smoother(out.llt, G, n);
    return out;
}

}  // namespace

SolveResult solve_at(const PenalizedSystem& sys, const SmoothingParams& par) {
    Assembled a = assemble_solve(sys, par, false);
    const int n = sys.n(), m = sys.m(), q = sys.q(), B = sys.b_terms();
    const std::vector<double> th = thetas_of(par, B);

    SolveResult out;
    out.d = a.u.head(m);
    out.c = a.u.segment(m, q);
    out.b = a.u.tail(sys.n_subjects);
    out.fitted = fitted_values(sys, th, a.u);
    out.rss = (sys.y - out.fitted).squaredNorm();
    out.trace_A = trace_smoother(a.llt, a.G, n);
    out.M = std::move(a.M);
    out.llt = std::move(a.llt);
    out.jitter = a.jitter;

    double penalty = 0.0;
    if (q > 0) {
        Eigen::VectorXd Qc = Eigen::VectorXd::Zero(q);
        for (int b = 0; b < B; ++b) Qc.noalias() += th[b] * (sys.Q[b] * out.c);
        penalty += pow10(par.log_lambda) * out.c.dot(Qc);
    }
    if (sys.has_random())
        penalty += pow10(par.log_lambda_b) * out.b.squaredNorm();
    out.objective = out.rss / n + penalty;
    return out;
}

double gcv(const PenalizedSystem& sys, const SmoothingParams& par) {
    Assembled a = assemble_solve(sys, par, true);
    double denom = sys.n() - a.trace_A;
    if (!(denom > 1e-12 * sys.n())) return kInf;  // degenerate trace sentinel
    double v = sys.n() * a.rss / (denom * denom);
    return std::isfinite(v) ? v : kInf;
}

double gml(const PenalizedSystem& sys, const SmoothingParams& par) {
    Assembled a = assemble_solve(sys, par, false);
    const int n = sys.n(), m = sys.m(), p = sys.p();

    // Nonzero eigenvalues of A equal the eigenvalues of L^-1 (X'X) L^-T.
    Eigen::MatrixXd T = a.llt.matrixL().solve(a.G);
    Eigen::MatrixXd Bm = a.llt.matrixL().solve(T.transpose());
    Bm = 0.5 * (Bm + Bm.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Bm);
    if (es.info() != Eigen::Success) throw FitError("GML eigen solve failed");

    Eigen::VectorXd mu = es.eigenvalues();  // ascending
    std::sort(mu.data(), mu.data() + mu.size(), std::greater<double>());
    // The m structural unit eigenvalues (unpenalized directions) are the
    // zero eigenvalues of I-A; det+ skips them.
    double logdet = 0.0;
    for (int i = m; i < p; ++i) {
        double nu = 1.0 - std::min(std::max(mu[i], 0.0), 1.0);
        if (nu <= 1e-13) return kInf;
        logdet += std::log(nu);
    }
    double num = sys.yty - a.rhs.dot(a.u);  // y'(I-A)y
    if (num < 0.0) num = 0.0;
    double v = num / std::exp(logdet / (n - m));
    return std::isfinite(v) ? v : kInf;
}

namespace {

struct GoldenResult {
    double x = 0.0;
    double f = kInf;
};

// Golden-section minimization tracking the best point ever evaluated, so a
// non-unimodal objective still returns the best probe.
template <class F>
GoldenResult golden_section(F&& f, double a, double b, double tol) {
    GoldenResult best;
    auto probe = [&](double x) {
        double v = f(x);
        if (v < best.f) best = {x, v};
        return v;
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = probe(x1), f2 = probe(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = probe(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = probe(x2);
        }
    }
    return best;
}

}  // namespace

SmoothingParams optimize_params(const PenalizedSystem& sys, Criterion crit,
                                const OptimOptions& opt) {
    if (!sys.finalized())
        throw ArgumentError("PenalizedSystem::finalize() not called");
    const int B = sys.b_terms();

    SmoothingParams par;
    par.log_theta.resize(B);
    for (int b = 0; b < B; ++b) {
        double tr = sys.Q[b].trace();
        par.log_theta[b] = tr > 1e-12 ? -std::log10(tr) : 0.0;
    }
    par.log_lambda_b = 0.0;

    auto value = [&](const SmoothingParams& pp) {
        return crit == Criterion::gcv ? gcv(sys, pp) : gml(sys, pp);
    };

    // ---- Stage 1: lambda on [lo,hi], coarse prescan then golden section ----
    const double lo = opt.log_lambda_lo, hi = opt.log_lambda_hi;
    const int n_scan = 41;
    const double step = (hi - lo) / (n_scan - 1);
    std::vector<double> scan(n_scan);
    for (int i = 0; i < n_scan; ++i) {
        par.log_lambda = lo + step * i;
        scan[i] = value(par);
    }
    // basins: local minima of the prescan, best two refined
    std::vector<int> candidates;
    for (int i = 0; i < n_scan; ++i) {
        bool left_ok = (i == 0) || scan[i] <= scan[i - 1];
        bool right_ok = (i == n_scan - 1) || scan[i] <= scan[i + 1];
        if (left_ok && right_ok && std::isfinite(scan[i])) candidates.push_back(i);
    }
    if (candidates.empty())
        throw FitError("criterion not finite anywhere on the lambda bracket");
    std::sort(candidates.begin(), candidates.end(),
              [&](int a, int b) { return scan[a] < scan[b]; });
    if (candidates.size() > 2) candidates.resize(2);

    GoldenResult best;
    for (int ci : candidates) {
        double x = lo + step * ci;
        double a = std::max(lo, x - step), b = std::min(hi, x + step);
        auto g = golden_section(
            [&](double ll) {
                SmoothingParams pp = par;
                pp.log_lambda = ll;
                return value(pp);
            },
            a, b, opt.golden_tol);
        if (g.f < best.f) best = g;
        if (scan[ci] < best.f) best = {x, scan[ci]};
    }
    par.log_lambda = best.x;
    double current = best.f;

    if (!opt.stage2) return par;

    // ---- Stage 2: cyclic coordinate descent over theta and lambda_b -------
    std::vector<double*> coords;
    for (int b = 0; b < B; ++b) coords.push_back(&par.log_theta[b]);
    if (sys.has_random()) coords.push_back(&par.log_lambda_b);
    if (coords.empty()) return par;

    for (int cycle = 0; cycle < opt.max_cycles; ++cycle) {
        double prev = current;
        for (double* coord : coords) {
            double x0 = *coord;
            auto g = golden_section(
                [&](double x) {
                    *coord = x;
                    double v = value(par);
                    *coord = x0;
                    return v;
                },
                x0 - 2.0, x0 + 2.0, opt.golden_tol);
            if (g.f < current) {
                *coord = g.x;
                current = g.f;
            }
        }
        {
            double x0 = par.log_lambda;
            double a = std::max(lo, x0 - 1.0), b = std::min(hi, x0 + 1.0);
            auto g = golden_section(
                [&](double ll) {
                    SmoothingParams pp = par;
                    pp.log_lambda = ll;
                    return value(pp);
                },
                a, b, opt.golden_tol);
            if (g.f < current) {
                par.log_lambda = g.x;
                current = g.f;
            }
        }
        if (std::isfinite(prev) &&
            (prev - current) < opt.rel_tol * std::max(std::fabs(prev), 1e-12))
            break;
    }
    return par;
}

int resolve_knot_count(std::size_t n, int q_or_auto) {
    if (n == 0) throw ArgumentError("empty table");
    if (q_or_auto == 0) {
        double raw = 10.0 * std::pow(static_cast<double>(n), 2.0 / 9.0);
        int q = std::max(30, static_cast<int>(std::ceil(raw)));
        return std::min<std::size_t>(q, n);
    }
    if (q_or_auto < 1) throw ArgumentError("knot count must be positive");
    if (static_cast<std::size_t>(q_or_auto) > n)
        throw ArgumentError("knot count " + std::to_string(q_or_auto) +
                            " exceeds n = " + std::to_string(n));
    return q_or_auto;
}

std::vector<Point> select_knots(const ObservationTable& table, int q_or_auto,
                                std::uint64_t seed) {
    int q = resolve_knot_count(table.n(), q_or_auto);

    // distinct covariate tuples, first-appearance order
    std::vector<Point> distinct;
    std::set<std::pair<double, std::vector<int>>> seen;
    for (const auto& o : table.rows) {
        Point p;
        p.t = rescale_time(o.time);
        p.levels.reserve(table.factors.size());
        for (std::size_t f = 0; f < table.factors.size(); ++f)
            p.levels.push_back(table.factors[f].level_index(o.levels[f]));
        if (seen.insert({p.t, p.levels}).second) distinct.push_back(std::move(p));
    }
    std::size_t D = distinct.size();
    std::size_t qe = std::min<std::size_t>(q, D);

    // partial Fisher-Yates; modulo draw keeps this reproducible everywhere
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx(D);
    for (std::size_t i = 0; i < D; ++i) idx[i] = i;
    for (std::size_t i = 0; i < qe; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng() % (D - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<Point> knots;
    knots.reserve(qe);
    for (std::size_t i = 0; i < qe; ++i) knots.push_back(distinct[idx[i]]);
    std::sort(knots.begin(), knots.end(), [](const Point& a, const Point& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.levels < b.levels;
    });
    return knots;
}

std::vector<Point> build_points(const ObservationTable& table,
                                const ModelPlan& plan) {
    const bool rnd = plan.has_random_intercept();
    std::vector<Point> pts;
    pts.reserve(table.n());
    for (const auto& o : table.rows) {
        Point p;
        p.t = rescale_time(o.time);
        p.levels.reserve(table.factors.size());
        for (std::size_t f = 0; f < table.factors.size(); ++f)
            p.levels.push_back(table.factors[f].level_index(o.levels[f]));
        if (rnd) {
            auto it = std::lower_bound(plan.subjects.begin(),
                                       plan.subjects.end(), o.subject);
            p.subject = static_cast<int>(it - plan.subjects.begin());
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

PenalizedSystem assemble_system(const ObservationTable& table,
                                const ModelPlan& plan,
                                const std::vector<Point>& knots,
                                const Eigen::VectorXd& y) {
    if (static_cast<std::size_t>(y.size()) != table.n())
        throw ArgumentError("response length does not match table");
    std::vector<Point> points = build_points(table, plan);

    PenalizedSystem sys;
    sys.y = y;
    sys.knots = knots;

    int m = 0;
    std::vector<TermKernel> null_kernels;
    for (const auto& t : plan.terms) {
        if (t.penalized) continue;
        TermKernel k = term_kernel(t, plan.factors);
        m += k.null_dim();
        for (auto& nm : k.null_names()) sys.null_names.push_back(nm);
        null_kernels.push_back(std::move(k));
    }
    sys.S.resize(table.n(), m);
    {
        std::vector<double> buf(m);
        for (std::size_t i = 0; i < points.size(); ++i) {
            int off = 0;
            for (const auto& k : null_kernels) {
                k.null_basis(points[i], buf.data() + off);
                off += k.null_dim();
            }
            for (int j = 0; j < m; ++j) sys.S(i, j) = buf[j];
        }
    }

    for (const auto& t : plan.terms) {
        if (!t.penalized || t.spec.kind == TermKind::random_intercept) continue;
        TermKernel k = term_kernel(t, plan.factors);
        sys.R.push_back(assemble_gram(k, points, knots));
        sys.Q.push_back(assemble_gram(k, knots, knots));
        sys.term_names.push_back(t.name);
    }

    if (plan.has_random_intercept()) {
        sys.n_subjects = static_cast<int>(plan.subjects.size());
        sys.subject_of.reserve(points.size());
        for (const auto& p : points) sys.subject_of.push_back(p.subject);
    }
    return sys;
}

std::vector<TermLayout> build_layout(const ModelPlan& plan) {
    std::vector<TermLayout> layout;
    int null_off = 0, theta_idx = 0;
    for (const auto& t : plan.terms) {
        TermLayout L;
        L.name = t.name;
        L.kind = t.spec.kind;
        L.factor_index = t.factor_index;
        L.K = t.K;
        L.penalized = t.penalized;
        if (!t.penalized) {
            TermKernel k = term_kernel(t, plan.factors);
            L.null_offset = null_off;
            L.null_dim = k.null_dim();
            null_off += L.null_dim;
        } else if (t.spec.kind != TermKind::random_intercept) {
            L.theta_index = theta_idx++;
        }
        layout.push_back(std::move(L));
    }
    return layout;
}

const TermLayout* FittedModel::find_term(const std::string& name) const {
    for (const auto& t : layout)
        if (t.name == name) return &t;
    return nullptr;
}

double FittedModel::theta(int theta_index) const {
    return pow10(params.log_theta.at(theta_index));
}

double FittedModel::lambda_b() const { return pow10(params.log_lambda_b); }

FittedModel fit(const ObservationTable& table, const ModelSpec& spec,
                const FitOptions& options) {
    table.check();
    ModelPlan plan = validate_spec(spec, table);
    std::vector<TermLayout> layout = build_layout(plan);

    const std::size_t n = table.n();
    Eigen::VectorXd y_raw(n);
    for (std::size_t i = 0; i < n; ++i)
        y_raw[i] = apply_transform(table.rows[i].response, spec.transform);

    int m = 0;
    for (const auto& L : layout) m += L.null_dim;
    if (static_cast<int>(n) < m + 1)
        throw FitError("need at least " + std::to_string(m + 1) +
                       " rows for " + std::to_string(m) +
                       " unpenalized coefficients");

    double mean = y_raw.mean();
    double sd = n > 1 ? std::sqrt((y_raw.array() - mean).square().sum() /
                                  (n - 1))
                      : 0.0;
    double y_scale = sd > 0.0 ? sd : 1.0;

    bool any_penalized_fn = false;
    for (const auto& L : layout)
        if (L.theta_index >= 0) any_penalized_fn = true;
    std::vector<Point> knots;
    if (any_penalized_fn)
        knots = select_knots(table, spec.knot_count, spec.seed);

    PenalizedSystem sys = assemble_system(table, plan, knots, y_raw / y_scale);
    sys.finalize();

    SmoothingParams par = options.fixed_params
                              ? *options.fixed_params
                              : optimize_params(sys, spec.criterion,
                                                options.optim);
    double crit_value =
        spec.criterion == Criterion::gcv ? gcv(sys, par) : gml(sys, par);
    SolveResult sol = solve_at(sys, par);

    FittedModel model;
    model.plan = std::move(plan);
    model.layout = std::move(layout);
    model.knots = std::move(knots);
    model.d = sol.d * y_scale;
    model.c = sol.c * y_scale;
    model.b_hat = sol.b * y_scale;
    model.params = par;
    model.trace_A = sol.trace_A;
    model.criterion_value = crit_value;
    model.rss = sol.rss * y_scale * y_scale;
    model.y_scale = y_scale;
    model.n = static_cast<int>(n);
    model.M = std::move(sol.M);
    model.llt = std::move(sol.llt);

    double dof = n - sol.trace_A;
    if (!(dof > 0.0)) throw FitError("degenerate residual degrees of freedom");
    model.sigma2_eps = model.rss / dof;
    if (sys.has_random())
        model.sigma2_b = model.sigma2_eps / (n * pow10(par.log_lambda_b));

    double tss = (y_raw.array() - mean).square().sum();
    model.r_squared = tss > 0.0 ? 1.0 - model.rss / tss : 1.0;
    model.r_squared = std::min(1.0, std::max(0.0, model.r_squared));
    return model;
}

}  // namespace ssanova
