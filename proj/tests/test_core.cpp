#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "ssanova/core.hpp"

using namespace ssanova;

namespace {

ObservationTable small_table(int K = 4) {
    ObservationTable t;
    if (K > 0) {
        FactorDef f;
        f.name = "group";
        for (int k = 0; k < K; ++k) f.levels.push_back("g" + std::to_string(k + 1));
        t.factors.push_back(f);
    }
    for (int i = 0; i < 8; ++i) {
        Observation o;
        o.subject = "s" + std::to_string(i % 4);
        o.time = 100.0 * i;
        if (K > 0) o.levels.push_back(t.factors[0].levels[i % K]);
        o.response = 1.0 + i;
        t.rows.push_back(o);
    }
    return t;
}

ModelSpec minimal_spec() {
    ModelSpec s;
    s.terms = {TermSpec::make(TermKind::constant),
               TermSpec::make(TermKind::time_linear),
               TermSpec::make(TermKind::time_smooth)};
    return s;
}

}  // namespace

TEST_CASE("table check accepts a well-formed table") {
    CHECK_NOTHROW(small_table().check());
}

TEST_CASE("table check rejects invariant violations") {
    auto t = small_table();
    t.rows[3].time = 1440.0;  // domain is [0, 1440)
    CHECK_THROWS_AS(t.check(), DataError);

    t = small_table();
    t.rows[0].response = std::nan("");
    CHECK_THROWS_AS(t.check(), DataError);

    t = small_table();
    t.rows[5].levels[0] = "g9";
    CHECK_THROWS_AS(t.check(), DataError);

    t = small_table();
    t.factors[0].levels = {"solo"};  // K >= 2
    CHECK_THROWS_AS(t.check(), DataError);

    t = small_table();
    t.factors[0].levels = {"g1", "g1", "g3", "g4"};
    CHECK_THROWS_AS(t.check(), DataError);
}

TEST_CASE("minimal cubic-spline spec: 2 unpenalized + 1 penalized") {
    ModelPlan plan = validate_spec(minimal_spec(), small_table());
    CHECK(plan.unpenalized_count() == 2);
    CHECK(plan.penalized_count() == 1);
    CHECK(plan.terms[0].name == "constant");
    CHECK(plan.terms[1].name == "time_linear");
    CHECK(plan.terms[2].name == "time_smooth");
    CHECK(plan.terms[2].penalized);
}

TEST_CASE("unknown factor is reported") {
    ModelSpec s = minimal_spec();
    s.terms.push_back(TermSpec::make(TermKind::nominal_main, "group"));
    ObservationTable t = small_table(0);  // no factor columns
    CHECK_THROWS_WITH_AS(validate_spec(s, t),
                         doctest::Contains("unknown factor 'group'"),
                         SpecError);
}

TEST_CASE("full model: 2 unpenalized and 7 penalized terms") {
    ObservationTable t = small_table();
    FactorDef falls{"falls", {"no", "yes"}};
    FactorDef injury{"injury", {"no", "yes"}};
    t.factors.push_back(falls);
    t.factors.push_back(injury);
    for (auto& o : t.rows) {
        o.levels.push_back("no");
        o.levels.push_back("yes");
    }

    ModelSpec s = ModelSpec::standard("group", {"falls", "injury"}, true);
    ModelPlan plan = validate_spec(s, t);
    CHECK(plan.terms.size() == 9);
    CHECK(plan.unpenalized_count() == 2);
    CHECK(plan.penalized_count() == 7);
    CHECK(plan.find("group") != nullptr);
    CHECK(plan.find("group")->K == 4);
    CHECK(plan.find("time_x_group_smooth") != nullptr);
    CHECK(plan.find("subject") != nullptr);
    CHECK(plan.subjects.size() == 4);
}

TEST_CASE("validate_spec is idempotent and order-preserving") {
    ObservationTable t = small_table();
    ModelSpec s = ModelSpec::standard("group");
    ModelPlan p1 = validate_spec(s, t);
    ModelPlan p2 = validate_spec(p1.spec, t);
    REQUIRE(p1.terms.size() == p2.terms.size());
    for (std::size_t i = 0; i < p1.terms.size(); ++i) {
        CHECK(p1.terms[i].name == p2.terms[i].name);
        CHECK(p1.terms[i].penalized == p2.terms[i].penalized);
        CHECK(p1.terms[i].factor_index == p2.terms[i].factor_index);
        CHECK(p1.terms[i].K == p2.terms[i].K);
    }
    // declaration order is preserved
    CHECK(p1.terms[3].name == "group");
    CHECK(p1.terms[4].name == "time_x_group_linear");
}

TEST_CASE("error reporting is exhaustive, not first-fail") {
    ModelSpec s;
    s.terms = {TermSpec::make(TermKind::constant),
               TermSpec::make(TermKind::constant),                  // duplicate
               TermSpec::make(TermKind::nominal_main, "ghost"),     // unknown
               TermSpec::make(TermKind::time_by_nominal_smooth, "other")};
    try {
        validate_spec(s, ObservationTable{});  // also: empty table
        FAIL("expected SpecError");
    } catch (const SpecError& e) {
        CHECK(e.problems.size() >= 4);
        auto has = [&](const char* frag) {
            return std::any_of(e.problems.begin(), e.problems.end(),
                               [&](const std::string& p) {
                                   return p.find(frag) != std::string::npos;
                               });
        };
        CHECK(has("empty table"));
        CHECK(has("duplicate term"));
        CHECK(has("unknown factor 'ghost'"));
        CHECK(has("without nominal main effect"));
    }
}

TEST_CASE("structural limits: one smooth term, one random intercept") {
    ObservationTable t = small_table();
    ModelSpec s = minimal_spec();
    s.terms.push_back(TermSpec::make(TermKind::time_smooth));
    CHECK_THROWS_WITH_AS(validate_spec(s, t),
                         doctest::Contains("more than one continuous"),
                         SpecError);

    s = minimal_spec();
    s.terms.push_back(TermSpec::make(TermKind::random_intercept));
    s.terms.push_back(TermSpec::make(TermKind::random_intercept));
    CHECK_THROWS_AS(validate_spec(s, t), SpecError);

    // random intercept with a single subject is not estimable
    s = minimal_spec();
    s.terms.push_back(TermSpec::make(TermKind::random_intercept));
    ObservationTable t1 = small_table();
    for (auto& o : t1.rows) o.subject = "only";
    CHECK_THROWS_WITH_AS(validate_spec(s, t1),
                         doctest::Contains("at least 2 distinct subjects"),
                         SpecError);
}

TEST_CASE("nominal_main may be flagged unpenalized") {
    ObservationTable t = small_table();
    ModelSpec s = minimal_spec();
    TermSpec nm = TermSpec::make(TermKind::nominal_main, "group");
    nm.penalized_override = true;
    s.terms.push_back(nm);
    ModelPlan plan = validate_spec(s, t);
    CHECK_FALSE(plan.find("group")->penalized);
    CHECK(plan.unpenalized_count() == 3);
}

TEST_CASE("transform and criterion parsing") {
    CHECK(parse_transform("identity") == Transform::identity);
    CHECK(parse_transform("log1p") == Transform::log1p);
    CHECK_THROWS_AS(parse_transform("log"), ArgumentError);
    CHECK(parse_criterion("gcv") == Criterion::gcv);
    CHECK(parse_criterion("GML") == Criterion::gml);
    CHECK_THROWS_AS(parse_criterion("aic"), ArgumentError);

    CHECK(apply_transform(3.0, Transform::identity) == 3.0);
    CHECK(apply_transform(0.0, Transform::log1p) == 0.0);
    CHECK(apply_transform(std::exp(1.0) - 1.0, Transform::log1p) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(apply_transform(-1.0, Transform::log1p), ArgumentError);
}

TEST_CASE("time rescaling uses the fixed daily domain") {
    CHECK(rescale_time(0.0) == 0.0);
    CHECK(rescale_time(720.0) == 0.5);
    CHECK(rescale_time(1440.0) == 1.0);
    CHECK(rescale_time(90.0) == doctest::Approx(0.0625));
}
