#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "ssanova/kernel.hpp"

using namespace ssanova;

TEST_CASE("cubic kernel pinned rational values") {
    // k2(1/2)^2 - k4(0) with k4 = B4/24, B4(0) = -1/30:
    // 1/576 + 1/720 = 1/320, and symmetric-corner value 1/144 + 1/720 = 1/120.
    CHECK(cubic_kernel(0.5, 0.5) == doctest::Approx(1.0 / 320).epsilon(1e-14));
    CHECK(cubic_kernel(0.0, 0.0) == doctest::Approx(1.0 / 120).epsilon(1e-14));
    CHECK(cubic_kernel(0.0, 1.0) == doctest::Approx(1.0 / 120).epsilon(1e-14));
    CHECK(cubic_kernel(0.25, 0.75) ==
          doctest::Approx(-17.0 / 15360).epsilon(1e-12));
}

TEST_CASE("cubic kernel matches the Bernoulli-polynomial oracle") {
    std::mt19937_64 g(11);
    for (int i = 0; i < 2000; ++i) {
        double x = oracle::rand_u(g), y = oracle::rand_u(g);
        CHECK(cubic_kernel(x, y) ==
              doctest::Approx(oracle::cubic_kernel_ref(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("cubic kernel symmetry on random pairs") {
    std::mt19937_64 g(7);
    for (int i = 0; i < 1000; ++i) {
        double x = oracle::rand_u(g), y = oracle::rand_u(g);
        CHECK(cubic_kernel(x, y) == cubic_kernel(y, x));  // exact
    }
}

TEST_CASE("cubic kernel domain errors") {
    CHECK_THROWS_AS(cubic_kernel(-0.01, 0.5), ArgumentError);
    CHECK_THROWS_AS(cubic_kernel(0.5, 1.01), ArgumentError);
}

TEST_CASE("cubic side condition: every kernel section integrates to zero") {
    for (double y : {0.0, 0.2, 0.5, 0.777, 1.0}) {
        double sum = 0.0;
        const int N = 10001;
        for (int i = 0; i < N; ++i)
            sum += cubic_kernel(static_cast<double>(i) / (N - 1), y);
        CHECK(std::abs(sum / N) <= 1e-6);
    }
}

TEST_CASE("cubic null basis") {
    auto b = cubic_null_basis(0.5);
    CHECK(b[0] == 1.0);
    CHECK(b[1] == 0.0);
    b = cubic_null_basis(0.0);
    CHECK(b[1] == -0.5);
    b = cubic_null_basis(1.0);
    CHECK(b[1] == 0.5);
    CHECK_THROWS_AS(cubic_null_basis(1.5), ArgumentError);
}

TEST_CASE("nominal kernel values and exact zero row sums") {
    CHECK(nominal_kernel(2, 2, 4) == 0.75);
    CHECK(nominal_kernel(0, 3, 4) == -0.25);
    for (int K = 2; K <= 8; ++K)
        for (int g = 0; g < K; ++g) {
            // rational check: row sum = (1 - 1/K) + (K-1)(-1/K) = 0; in
            // floating point the dyadic-K cases must come out exactly 0.
            double s = 0.0;
            for (int h = 0; h < K; ++h) s += nominal_kernel(g, h, K);
            if (K == 2 || K == 4 || K == 8)
                CHECK(s == 0.0);
            else
                CHECK(std::abs(s) < 1e-15);
        }
    CHECK_THROWS_AS(nominal_kernel(4, 0, 4), ArgumentError);
    CHECK_THROWS_AS(nominal_kernel(0, -1, 4), ArgumentError);
    CHECK_THROWS_AS(nominal_kernel(0, 0, 1), ArgumentError);
}

namespace {

std::vector<FactorDef> one_factor(int K) {
    FactorDef f;
    f.name = "group";
    for (int k = 0; k < K; ++k) f.levels.push_back("g" + std::to_string(k + 1));
    return {f};
}

PlannedTerm make_term(TermKind kind, int K) {
    PlannedTerm t;
    t.spec = TermSpec::make(kind, K > 0 ? "group" : "");
    t.name = "test";
    t.factor_index = K > 0 ? 0 : -1;
    t.K = K;
    t.penalized = !(kind == TermKind::constant || kind == TermKind::time_linear);
    return t;
}

Point pt(double t, int level = -1, int subject = -1) {
    Point p;
    p.t = t;
    if (level >= 0) p.levels = {level};
    p.subject = subject;
    return p;
}

}  // namespace

TEST_CASE("term kernels compose marginals multiplicatively") {
    auto factors = one_factor(4);

    TermKernel smooth = term_kernel(make_term(TermKind::time_smooth, 0), {});
    CHECK(smooth.eval(pt(0.5, 1), pt(0.5, 3)) ==
          doctest::Approx(1.0 / 320).epsilon(1e-14));  // group ignored

    TermKernel tbs =
        term_kernel(make_term(TermKind::time_by_nominal_smooth, 4), factors);
    CHECK(tbs.eval(pt(0.5, 2), pt(0.5, 2)) ==
          doctest::Approx(0.75 / 320).epsilon(1e-14));
    CHECK(tbs.eval(pt(0.5, 0), pt(0.5, 3)) ==
          doctest::Approx(-0.25 / 320).epsilon(1e-14));

    TermKernel tbl =
        term_kernel(make_term(TermKind::time_by_nominal_linear, 4), factors);
    CHECK(tbl.eval(pt(0.25, 1), pt(0.75, 1)) ==
          doctest::Approx((-0.25) * 0.25 * 0.75).epsilon(1e-14));

    // factorization property at random probes
    std::mt19937_64 g(3);
    TermKernel nom = term_kernel(make_term(TermKind::nominal_main, 4), factors);
    for (int i = 0; i < 200; ++i) {
        double x = oracle::rand_u(g), y = oracle::rand_u(g);
        int a = static_cast<int>(g() % 4), b = static_cast<int>(g() % 4);
        CHECK(tbs.eval(pt(x, a), pt(y, b)) ==
              doctest::Approx(cubic_kernel(x, y) * nominal_kernel(a, b, 4))
                  .epsilon(1e-13));
        CHECK(tbl.eval(pt(x, a), pt(y, b)) ==
              doctest::Approx(bern_k1(x) * bern_k1(y) *
                              nominal_kernel(a, b, 4))
                  .epsilon(1e-13));
    }
}

TEST_CASE("random intercept kernel is subject equality") {
    TermKernel ri = term_kernel(make_term(TermKind::random_intercept, 0), {});
    CHECK(ri.eval(pt(0.1, -1, 3), pt(0.9, -1, 3)) == 1.0);
    CHECK(ri.eval(pt(0.1, -1, 3), pt(0.1, -1, 4)) == 0.0);
}

TEST_CASE("null bases per term kind") {
    TermKernel c = term_kernel(make_term(TermKind::constant, 0), {});
    CHECK(c.null_dim() == 1);
    double v[4];
    c.null_basis(pt(0.77), v);
    CHECK(v[0] == 1.0);
    CHECK(c.eval(pt(0.1), pt(0.2)) == 0.0);  // unpenalized: no kernel part

    TermKernel lin = term_kernel(make_term(TermKind::time_linear, 0), {});
    CHECK(lin.null_dim() == 1);
    lin.null_basis(pt(0.75), v);
    CHECK(v[0] == 0.25);

    // unpenalized nominal main: K-1 sum-to-zero contrasts
    auto factors = one_factor(3);
    PlannedTerm nm = make_term(TermKind::nominal_main, 3);
    nm.penalized = false;
    TermKernel un = term_kernel(nm, factors);
    CHECK(un.null_dim() == 2);
    for (int lv = 0; lv < 3; ++lv) {
        un.null_basis(pt(0.5, lv), v);
        double expect0 = (lv == 0 ? 1.0 : 0.0) - (lv == 2 ? 1.0 : 0.0);
        double expect1 = (lv == 1 ? 1.0 : 0.0) - (lv == 2 ? 1.0 : 0.0);
        CHECK(v[0] == expect0);
        CHECK(v[1] == expect1);
    }
    auto names = un.null_names();
    REQUIRE(names.size() == 2);
    CHECK(names[0] == "test:g1");

    // penalized terms have empty null bases
    CHECK(term_kernel(make_term(TermKind::time_smooth, 0), {}).null_dim() == 0);
    CHECK(term_kernel(make_term(TermKind::nominal_main, 3), factors)
              .null_dim() == 0);
}

TEST_CASE("gram assembly matches pointwise eval and is PSD") {
    TermKernel k = term_kernel(make_term(TermKind::time_smooth, 0), {});
    std::vector<Point> rows = {pt(0.1), pt(0.4), pt(0.9)};
    Eigen::MatrixXd G = assemble_gram(k, rows, rows);
    REQUIRE(G.rows() == 3);
    REQUIRE(G.cols() == 3);
    CHECK(G(0, 1) == G(1, 0));
    CHECK(G(1, 2) == doctest::Approx(cubic_kernel(0.4, 0.9)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);

    // single point
    Eigen::MatrixXd one = assemble_gram(k, {pt(0.3)}, {pt(0.3)});
    CHECK(one(0, 0) == cubic_kernel(0.3, 0.3));

    // rectangular
    std::vector<Point> cols5 = {pt(0.0), pt(0.25), pt(0.5), pt(0.75), pt(1.0)};
    std::vector<Point> rows2 = {pt(0.2), pt(0.8)};
    Eigen::MatrixXd Rm = assemble_gram(k, rows2, cols5);
    REQUIRE(Rm.rows() == 2);
    REQUIRE(Rm.cols() == 5);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(Rm(i, j) == cubic_kernel(rows2[i].t, cols5[j].t));
}

TEST_CASE("penalized term grams are PSD within tolerance") {
    std::mt19937_64 g(19);
    auto factors = one_factor(4);
    std::vector<Point> pts;
    for (int i = 0; i < 40; ++i)
        pts.push_back(pt(oracle::rand_u(g), static_cast<int>(g() % 4),
                         static_cast<int>(g() % 6)));
    for (TermKind kind :
         {TermKind::time_smooth, TermKind::nominal_main,
          TermKind::time_by_nominal_linear, TermKind::time_by_nominal_smooth,
          TermKind::random_intercept}) {
        TermKernel k = term_kernel(make_term(kind, 4), factors);
        Eigen::MatrixXd G = assemble_gram(k, pts, pts);
        CHECK((G - G.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
        double scale = std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
        CHECK(es.eigenvalues().minCoeff() >= -1e-10 * scale);
    }
}
