#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ssanova/solver.hpp"

using namespace ssanova;

namespace {

SmoothingParams params_for(const PenalizedSystem& sys, double log_lambda,
                           double log_theta = 0.0, double log_lambda_b = 0.0) {
    SmoothingParams p;
    p.log_lambda = log_lambda;
    p.log_theta.assign(sys.b_terms(), log_theta);
    p.log_lambda_b = log_lambda_b;
    return p;
}

double rel_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(1e-300, b.norm());
}

}  // namespace

TEST_CASE("knot count resolution") {
    CHECK(resolve_knot_count(10000, 0) == 78);
    CHECK(resolve_knot_count(20, 0) == 20);      // cap at n
    CHECK(resolve_knot_count(256, 0) == 35);
    CHECK(resolve_knot_count(100, 40) == 40);
    CHECK_THROWS_AS(resolve_knot_count(10, 11), ArgumentError);
    CHECK_THROWS_AS(resolve_knot_count(10, -3), ArgumentError);
    CHECK_THROWS_AS(resolve_knot_count(0, 0), ArgumentError);
}

TEST_CASE("knot selection: deterministic, distinct, canonically sorted") {
    std::mt19937_64 g(101);
    oracle::InstanceOptions io;
    io.n = 60;
    io.K = 3;
    auto t = oracle::make_table(g, io);

    auto k1 = select_knots(t, 20, 5);
    auto k2 = select_knots(t, 20, 5);
    REQUIRE(k1.size() == 20);
    for (std::size_t i = 0; i < k1.size(); ++i) {
        CHECK(k1[i].t == k2[i].t);
        CHECK(k1[i].levels == k2[i].levels);
    }
    auto k3 = select_knots(t, 20, 6);
    bool same = true;
    for (std::size_t i = 0; i < k1.size(); ++i)
        same = same && k1[i].t == k3[i].t;
    CHECK_FALSE(same);

    for (std::size_t i = 1; i < k1.size(); ++i) {
        bool ordered = k1[i - 1].t < k1[i].t ||
                       (k1[i - 1].t == k1[i].t &&
                        k1[i - 1].levels <= k1[i].levels);
        CHECK(ordered);
    }

    // duplicated covariate rows collapse to their distinct set
    ObservationTable dup;
    for (int i = 0; i < 12; ++i) {
        Observation o;
        o.subject = "s";
        o.time = 100.0 * (i % 4);
        o.response = 1.0;
        dup.rows.push_back(o);
    }
    auto kd = select_knots(dup, 12, 1);
    CHECK(kd.size() == 4);
}

TEST_CASE("constant response: exact null-space solution") {
    std::mt19937_64 g(5);
    oracle::InstanceOptions io;
    io.n = 25;
    auto t = oracle::make_table(g, io);
    for (auto& o : t.rows) o.response = 3.25;

    ModelSpec spec;  // constant + time_smooth only
    spec.terms = {TermSpec::make(TermKind::constant),
                  TermSpec::make(TermKind::time_smooth)};
    spec.transform = Transform::identity;
    auto sys = oracle::make_system(t, spec, 12);

    auto sol = solve_at(sys, params_for(sys, 0.0));
    CHECK(sol.d[0] == doctest::Approx(3.25).epsilon(1e-12));
    CHECK(sol.c.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((sys.y - sol.fitted).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("lambda -> infinity reproduces null-space OLS") {
    std::mt19937_64 g(17);
    oracle::InstanceOptions io;
    io.n = 40;
    auto t = oracle::make_table(g, io);
    for (std::size_t i = 0; i < t.n(); ++i)
        t.rows[i].response = 1.0 + 2.0 * (t.rows[i].time / 1440.0) +
                             0.3 * oracle::rand_n(g);
    auto spec = oracle::make_spec(io, 1, 20);
    auto sys = oracle::make_system(t, spec, 20);

    auto sol = solve_at(sys, params_for(sys, 6.0));
    Eigen::VectorXd ols =
        sys.S * (sys.S.transpose() * sys.S)
                    .ldlt()
                    .solve(sys.S.transpose() * sys.y);
    CHECK((sol.fitted - ols).cwiseAbs().maxCoeff() <= 1e-6);

    // GCV collapses to the OLS form n*RSS/(n-m)^2 in the same limit
    double rss_ols = (sys.y - ols).squaredNorm();
    double v_ols = sys.n() * rss_ols /
                   ((sys.n() - sys.m()) * double(sys.n() - sys.m()));
    double v = gcv(sys, params_for(sys, 8.0));
    CHECK(v == doctest::Approx(v_ols).epsilon(1e-6));
}

TEST_CASE("lambda -> 0 with q = n interpolates") {
    ObservationTable t;
    for (int i = 0; i < 10; ++i) {
        Observation o;
        o.subject = "s" + std::to_string(i);
        o.time = 1440.0 * (0.03 + 0.94 * i / 9.0);
        double u = o.time / 1440.0;
        o.response = std::sin(2 * 3.14159265358979323846 * u) + 0.5 * u;
        t.rows.push_back(o);
    }
    oracle::InstanceOptions io;
    auto spec = oracle::make_spec(io, 1, 10);
    auto sys = oracle::make_system(t, spec, 10);
    REQUIRE(sys.q() == 10);

    auto sol = solve_at(sys, params_for(sys, -12.0));
    CHECK((sys.y - sol.fitted).cwiseAbs().maxCoeff() <= 1e-6);

    // the GCV denominator degenerates here; sentinel or finite, never NaN
    double v = gcv(sys, params_for(sys, -12.0));
    CHECK_FALSE(std::isnan(v));
    CHECK(v >= 0.0);
}

TEST_CASE("solve_at matches the dense quadratic-program oracle") {
    std::mt19937_64 g(23);
    for (int rep = 0; rep < 4; ++rep) {
        oracle::InstanceOptions io;
        io.n = 30 + static_cast<int>(g() % 21);
        io.K = (rep % 2 == 0) ? 3 : 0;
        io.n_subjects = (rep >= 2) ? 5 : 0;
        auto t = oracle::make_table(g, io);
        auto spec = oracle::make_spec(io, 7 + rep, io.n);
        auto sys = oracle::make_system(t, spec, io.n);

        SmoothingParams par = params_for(sys, -1.5, 0.2, -0.5);
        auto sol = solve_at(sys, par);
        auto dense = oracle::densify(sys, par);
        Eigen::VectorXd u = oracle::dense_coeffs(dense);
        Eigen::VectorXd fitted = dense.X * u;
        CHECK(rel_diff(sol.fitted, fitted) <= 1e-8);
        CHECK(sol.rss ==
              doctest::Approx((sys.y - fitted).squaredNorm()).epsilon(1e-7));
    }
}

TEST_CASE("returned coefficients minimize the penalized objective") {
    std::mt19937_64 g(29);
    oracle::InstanceOptions io;
    io.n = 35;
    io.K = 2;
    io.n_subjects = 4;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 3, 18);
    auto sys = oracle::make_system(t, spec, 18);

    SmoothingParams par = params_for(sys, -2.0, 0.0, -1.0);
    auto sol = solve_at(sys, par);
    auto dense = oracle::densify(sys, par);

    Eigen::VectorXd u(sol.d.size() + sol.c.size() + sol.b.size());
    u << sol.d, sol.c, sol.b;
    double at_solution = oracle::dense_objective(dense, u);
    CHECK(at_solution == doctest::Approx(sol.objective).epsilon(1e-9));
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd pert = u;
        for (int j = 0; j < pert.size(); ++j)
            pert[j] += 0.02 * oracle::rand_n(g);
        CHECK(oracle::dense_objective(dense, pert) >= at_solution - 1e-12);
    }
}

TEST_CASE("gcv matches the dense smoother-matrix oracle at n = 30") {
    std::mt19937_64 g(31);
    oracle::InstanceOptions io;
    io.n = 30;
    io.K = 2;
    io.n_subjects = 5;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 9, 15);
    auto sys = oracle::make_system(t, spec, 15);

    for (double ll : {-3.0, -1.5, 0.0}) {
        SmoothingParams par = params_for(sys, ll, 0.1, -0.7);
        double mine = gcv(sys, par);
        double ref = oracle::dense_gcv(oracle::densify(sys, par));
        CHECK(mine == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("gml matches the dense eigen-decomposition oracle at n = 20") {
    std::mt19937_64 g(37);
    for (int with_z = 0; with_z < 2; ++with_z) {
        oracle::InstanceOptions io;
        io.n = 20;
        io.K = 2;
        io.n_subjects = with_z ? 4 : 0;
        auto t = oracle::make_table(g, io);
        auto spec = oracle::make_spec(io, 13, 10);
        auto sys = oracle::make_system(t, spec, 10);

        for (double ll : {-2.0, -0.5}) {
            SmoothingParams par = params_for(sys, ll, 0.0, -0.3);
            double mine = gml(sys, par);
            double ref = oracle::dense_gml(oracle::densify(sys, par));
            CHECK(mine == doctest::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("gml homogeneity: scaling y scales the criterion, argmin fixed") {
    std::mt19937_64 g(41);
    oracle::InstanceOptions io;
    io.n = 40;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 2, 20);
    auto sys = oracle::make_system(t, spec, 20);

    auto scaled = t;
    for (auto& o : scaled.rows) o.response *= 2.0;
    auto sys2 = oracle::make_system(scaled, spec, 20);

    int argmin1 = -1, argmin2 = -1;
    double best1 = 1e300, best2 = 1e300;
    for (int i = 0; i <= 20; ++i) {
        double ll = -8.0 + 10.0 * i / 20.0;
        double v1 = gml(sys, params_for(sys, ll));
        double v2 = gml(sys2, params_for(sys2, ll));
        CHECK(v2 == doctest::Approx(4.0 * v1).epsilon(1e-9));
        if (v1 < best1) { best1 = v1; argmin1 = i; }
        if (v2 < best2) { best2 = v2; argmin2 = i; }
    }
    CHECK(argmin1 == argmin2);
}

TEST_CASE("optimizer lands within a grid step of the brute-force minimum") {
    std::mt19937_64 g(43);
    oracle::InstanceOptions io;
    io.n = 80;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 4, 30);
    auto sys = oracle::make_system(t, spec, 30);

    OptimOptions opt;
    opt.stage2 = false;  // single theta: stage 1 is the whole search space
    SmoothingParams par = optimize_params(sys, Criterion::gcv, opt);

    double best_ll = 0.0, best = 1e300;
    for (int i = 0; i <= 200; ++i) {
        double ll = -8.0 + 10.0 * i / 200.0;
        SmoothingParams probe = par;  // same theta as the optimizer used
        probe.log_lambda = ll;
        double v = gcv(sys, probe);
        if (v < best) { best = v; best_ll = ll; }
    }
    CHECK(std::abs(par.log_lambda - best_ll) <= 0.05 + 1e-9);
}

TEST_CASE("gcv and gml select comparable smoothing on low-noise data") {
    std::mt19937_64 g(47);
    oracle::InstanceOptions io;
    io.n = 120;
    io.sigma = 0.05;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 5, 35);
    auto sys = oracle::make_system(t, spec, 35);

    OptimOptions opt;
    opt.stage2 = false;
    double l_gcv = optimize_params(sys, Criterion::gcv, opt).log_lambda;
    double l_gml = optimize_params(sys, Criterion::gml, opt).log_lambda;
    CHECK(std::abs(l_gcv - l_gml) <= 1.0);
}

TEST_CASE("only the theta-weighted penalty sums matter") {
    std::mt19937_64 g(53);
    oracle::InstanceOptions io;
    io.n = 50;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 6, 25);
    auto single = oracle::make_system(t, spec, 25);

    // same system with the one penalized term listed twice
    auto dup = single;
    dup.R.push_back(dup.R[0]);
    dup.Q.push_back(dup.Q[0]);
    dup.term_names.push_back(dup.term_names[0] + "_copy");
    dup.finalize();

    // split theta arbitrarily so that the weighted sums agree: the solutions
    // must coincide to solver precision
    SmoothingParams ps = params_for(single, -2.0);
    ps.log_theta = {std::log10(0.9)};
    SmoothingParams pd = params_for(dup, -2.0);
    pd.log_theta = {std::log10(0.63), std::log10(0.27)};
    auto fs = solve_at(single, ps).fitted;
    auto fd = solve_at(dup, pd).fitted;
    CHECK((fs - fd).cwiseAbs().maxCoeff() <= 1e-10);

    // optimizing both reaches the same fit; tighten the line search so the
    // comparison is about the algebra, not the search tolerance
    OptimOptions tight;
    tight.golden_tol = 1e-6;
    tight.rel_tol = 1e-10;
    auto par_s = optimize_params(single, Criterion::gcv, tight);
    auto par_d = optimize_params(dup, Criterion::gcv, tight);
    auto opt_s = solve_at(single, par_s).fitted;
    auto opt_d = solve_at(dup, par_d).fitted;
    CHECK((opt_s - opt_d).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("stage 2 disabled keeps the stage-1 parameterization") {
    std::mt19937_64 g(59);
    oracle::InstanceOptions io;
    io.n = 45;
    io.K = 2;
    io.n_subjects = 5;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 8, 20);
    auto sys = oracle::make_system(t, spec, 20);

    OptimOptions opt;
    opt.stage2 = false;
    auto p1 = optimize_params(sys, Criterion::gcv, opt);
    auto p2 = optimize_params(sys, Criterion::gcv, opt);
    CHECK(p1.log_lambda == p2.log_lambda);  // deterministic
    CHECK(p1.log_lambda_b == 0.0);          // stage-1 initialization
    for (int b = 0; b < sys.b_terms(); ++b) {
        double tr = sys.Q[b].trace();
        CHECK(p1.log_theta[b] == doctest::Approx(-std::log10(tr)));
    }
}

TEST_CASE("trace of the smoother decreases in lambda") {
    std::mt19937_64 g(61);
    oracle::InstanceOptions io;
    io.n = 60;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 10, 25);
    auto sys = oracle::make_system(t, spec, 25);

    double prev = 1e300;
    for (int i = 0; i < 20; ++i) {
        double ll = -8.0 + 10.0 * i / 19.0;
        auto sol = solve_at(sys, params_for(sys, ll));
        CHECK(sol.trace_A <= prev + 1e-8);
        prev = sol.trace_A;
    }
}

TEST_CASE("fit: zero-noise linear data gives R^2 >= 0.999") {
    ObservationTable t;
    for (int i = 0; i < 50; ++i) {
        Observation o;
        o.subject = "s" + std::to_string(i % 5);
        o.time = 1440.0 * i / 50.0;
        o.response = 2.0 - 1.5 * (o.time / 1440.0);
        t.rows.push_back(o);
    }
    oracle::InstanceOptions io;
    auto spec = oracle::make_spec(io, 12, 0);
    FittedModel m = fit(t, spec);
    CHECK(m.r_squared >= 0.999);
    CHECK(m.r_squared <= 1.0);
    CHECK(m.sigma2_eps >= 0.0);
}

TEST_CASE("fit: full model shape runs and reports every term") {
    std::mt19937_64 g(67);
    oracle::InstanceOptions io;
    io.n = 400;
    io.K = 4;
    io.n_subjects = 12;
    auto t = oracle::make_table(g, io);
    FactorDef falls{"falls", {"no", "yes"}};
    FactorDef injury{"injury", {"no", "yes"}};
    t.factors.push_back(falls);
    t.factors.push_back(injury);
    for (auto& o : t.rows) {
        o.levels.push_back(o.subject.size() % 2 ? "yes" : "no");
        o.levels.push_back("no");
    }
    // give injury both observed levels
    for (std::size_t i = 0; i < t.n(); i += 3) t.rows[i].levels[2] = "yes";

    ModelSpec spec = ModelSpec::standard("group", {"falls", "injury"}, true);
    spec.transform = Transform::identity;
    spec.seed = 2;
    FittedModel m = fit(t, spec);

    CHECK(m.layout.size() == 9);
    CHECK(m.find_term("time_smooth") != nullptr);
    CHECK(m.find_term("falls") != nullptr);
    CHECK(m.find_term("injury") != nullptr);
    CHECK(m.find_term("subject") != nullptr);
    CHECK(m.sigma2_b > 0.0);
    CHECK(m.sigma2_eps > 0.0);
    CHECK(m.trace_A > m.m());
    CHECK(m.trace_A < m.n);
    CHECK(m.r_squared >= 0.0);
    CHECK(m.r_squared <= 1.0);
}

TEST_CASE("fit determinism: identical inputs give bit-identical models") {
    std::mt19937_64 g(71);
    oracle::InstanceOptions io;
    io.n = 90;
    io.K = 2;
    io.n_subjects = 6;
    auto t = oracle::make_table(g, io);
    auto spec = oracle::make_spec(io, 15, 0);

    FittedModel a = fit(t, spec);
    FittedModel b = fit(t, spec);
    CHECK((a.d.array() == b.d.array()).all());
    CHECK((a.c.array() == b.c.array()).all());
    CHECK((a.b_hat.array() == b.b_hat.array()).all());
    CHECK(a.params.log_lambda == b.params.log_lambda);
    CHECK(a.sigma2_eps == b.sigma2_eps);
    CHECK(a.sigma2_b == b.sigma2_b);
    CHECK(a.trace_A == b.trace_A);
    CHECK(a.criterion_value == b.criterion_value);
}

TEST_CASE("fit rejects n < m + 1") {
    ObservationTable t;
    for (int i = 0; i < 2; ++i) {
        Observation o;
        o.subject = "s" + std::to_string(i);
        o.time = 100.0 + i;
        o.response = 1.0 * i;
        t.rows.push_back(o);
    }
    oracle::InstanceOptions io;
    auto spec = oracle::make_spec(io, 1, 0);
    CHECK_THROWS_AS(fit(t, spec), FitError);
}
