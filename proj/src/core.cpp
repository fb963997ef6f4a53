#include "ssanova/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace ssanova {

int FactorDef::level_index(const std::string& label) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == label) return static_cast<int>(i);
    return -1;
}

int ObservationTable::factor_index(const std::string& name) const {
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (factors[i].name == name) return static_cast<int>(i);
    return -1;
}

void ObservationTable::check() const {
    for (const auto& f : factors) {
        if (f.levels.size() < 2)
            throw DataError("factor '" + f.name + "' needs at least 2 levels");
        std::set<std::string> uniq(f.levels.begin(), f.levels.end());
        if (uniq.size() != f.levels.size())
            throw DataError("factor '" + f.name + "' has duplicate levels");
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& o = rows[r];
        if (!(o.time >= 0.0 && o.time < 1440.0))
            throw DataError("row " + std::to_string(r + 1) +
                            ": time " + std::to_string(o.time) +
                            " outside [0,1440)");
        if (!std::isfinite(o.response))
            throw DataError("row " + std::to_string(r + 1) +
                            ": non-finite response");
        if (o.levels.size() != factors.size())
            throw DataError("row " + std::to_string(r + 1) +
                            ": expected " + std::to_string(factors.size()) +
                            " factor levels, got " +
                            std::to_string(o.levels.size()));
        for (std::size_t f = 0; f < factors.size(); ++f)
            if (factors[f].level_index(o.levels[f]) < 0)
                throw DataError("row " + std::to_string(r + 1) + ": level '" +
                                o.levels[f] + "' not declared for factor '" +
                                factors[f].name + "'");
    }
}

const char* term_kind_name(TermKind k) {
    switch (k) {
        case TermKind::constant: return "constant";
        case TermKind::time_linear: return "time_linear";
        case TermKind::time_smooth: return "time_smooth";
        case TermKind::nominal_main: return "nominal_main";
        case TermKind::time_by_nominal_linear: return "time_by_nominal_linear";
        case TermKind::time_by_nominal_smooth: return "time_by_nominal_smooth";
        case TermKind::random_intercept: return "random_intercept";
    }
    return "?";
}

const char* transform_name(Transform t) {
    return t == Transform::identity ? "identity" : "log1p";
}

const char* criterion_name(Criterion c) {
    return c == Criterion::gcv ? "GCV" : "GML";
}

Transform parse_transform(const std::string& s) {
    if (s == "identity") return Transform::identity;
    if (s == "log1p") return Transform::log1p;
    throw ArgumentError("unknown transform '" + s + "' (identity|log1p)");
}

Criterion parse_criterion(const std::string& s) {
    if (s == "GCV" || s == "gcv") return Criterion::gcv;
    if (s == "GML" || s == "gml") return Criterion::gml;
    throw ArgumentError("unknown criterion '" + s + "' (GCV|GML)");
}

double apply_transform(double v, Transform t) {
    if (t == Transform::identity) return v;
    if (v <= -1.0)
        throw ArgumentError("log1p transform needs response > -1, got " +
                            std::to_string(v));
    return std::log1p(v);
}

ModelSpec ModelSpec::standard(const std::string& group_factor,
                              const std::vector<std::string>& extra_factors,
                              bool random_intercept) {
    ModelSpec s;
    s.terms.push_back(TermSpec::make(TermKind::constant));
    s.terms.push_back(TermSpec::make(TermKind::time_linear));
    s.terms.push_back(TermSpec::make(TermKind::time_smooth));
    s.terms.push_back(TermSpec::make(TermKind::nominal_main, group_factor));
    s.terms.push_back(
        TermSpec::make(TermKind::time_by_nominal_linear, group_factor));
    s.terms.push_back(
        TermSpec::make(TermKind::time_by_nominal_smooth, group_factor));
    for (const auto& f : extra_factors)
        s.terms.push_back(TermSpec::make(TermKind::nominal_main, f));
    if (random_intercept)
        s.terms.push_back(TermSpec::make(TermKind::random_intercept));
    return s;
}

int ModelPlan::unpenalized_count() const {
    int c = 0;
    for (const auto& t : terms) c += t.penalized ? 0 : 1;
    return c;
}

int ModelPlan::penalized_count() const {
    return static_cast<int>(terms.size()) - unpenalized_count();
}

bool ModelPlan::has_random_intercept() const {
    for (const auto& t : terms)
        if (t.spec.kind == TermKind::random_intercept) return true;
    return false;
}

const PlannedTerm* ModelPlan::find(const std::string& name) const {
    for (const auto& t : terms)
        if (t.name == name) return &t;
    return nullptr;
}

namespace {

bool needs_factor(TermKind k) {
    return k == TermKind::nominal_main ||
           k == TermKind::time_by_nominal_linear ||
           k == TermKind::time_by_nominal_smooth;
}

std::string canonical_name(const TermSpec& t) {
    switch (t.kind) {
        case TermKind::constant: return "constant";
        case TermKind::time_linear: return "time_linear";
        case TermKind::time_smooth: return "time_smooth";
        case TermKind::nominal_main: return t.factor;
        case TermKind::time_by_nominal_linear:
            return "time_x_" + t.factor + "_linear";
        case TermKind::time_by_nominal_smooth:
            return "time_x_" + t.factor + "_smooth";
        case TermKind::random_intercept: return "subject";
    }
    return "?";
}

}  // namespace

namespace {

int factor_index_in(const std::vector<FactorDef>& factors,
                    const std::string& name) {
    for (std::size_t i = 0; i < factors.size(); ++i)
        if (factors[i].name == name) return static_cast<int>(i);
    return -1;
}

// Structural checks + binding shared by validate_spec and bind_plan.
// Appends problems instead of throwing so callers can report exhaustively.
ModelPlan bind_impl(const ModelSpec& spec,
                    const std::vector<FactorDef>& factors,
                    std::vector<std::string> subjects,
                    std::vector<std::string>& problems) {
    int n_time_smooth = 0, n_random = 0;
    std::set<std::string> seen;
    std::set<std::string> nominal_factors;
    for (const auto& t : spec.terms)
        if (t.kind == TermKind::nominal_main) nominal_factors.insert(t.factor);

    for (const auto& t : spec.terms) {
        std::string name = canonical_name(t);
        if (!seen.insert(std::string(term_kind_name(t.kind)) + ":" + t.factor)
                 .second)
            problems.push_back("duplicate term '" + name + "'");
        if (needs_factor(t.kind) && factor_index_in(factors, t.factor) < 0)
            problems.push_back("unknown factor '" + t.factor + "'");
        if (t.kind == TermKind::time_smooth) ++n_time_smooth;
        if (t.kind == TermKind::random_intercept) ++n_random;
        if ((t.kind == TermKind::time_by_nominal_linear ||
             t.kind == TermKind::time_by_nominal_smooth) &&
            nominal_factors.count(t.factor) == 0)
            problems.push_back("interaction '" + name +
                               "' without nominal main effect for factor '" +
                               t.factor + "'");
    }
    if (n_time_smooth > 1)
        problems.push_back("more than one continuous main-effect term");
    if (n_random > 1) problems.push_back("more than one random-intercept term");
    if (n_random >= 1 && subjects.size() < 2)
        problems.push_back(
            "random_intercept needs at least 2 distinct subjects");

    ModelPlan plan;
    if (!problems.empty()) return plan;

    plan.spec = spec;
    plan.factors = factors;
    if (n_random >= 1) plan.subjects = std::move(subjects);
    for (const auto& t : spec.terms) {
        PlannedTerm pt;
        pt.spec = t;
        pt.name = canonical_name(t);
        if (needs_factor(t.kind)) {
            pt.factor_index = factor_index_in(factors, t.factor);
            pt.K = static_cast<int>(factors[pt.factor_index].levels.size());
        }
        switch (t.kind) {
            case TermKind::constant:
            case TermKind::time_linear: pt.penalized = false; break;
            case TermKind::nominal_main:
                pt.penalized = !t.penalized_override;
                break;
            default: pt.penalized = true;
        }
        plan.terms.push_back(std::move(pt));
    }
    return plan;
}

}  // namespace

ModelPlan validate_spec(const ModelSpec& spec, const ObservationTable& table) {
    std::vector<std::string> problems;
    if (table.rows.empty()) problems.push_back("empty table");

    std::set<std::string> uniq;
    for (const auto& o : table.rows) uniq.insert(o.subject);
    std::vector<std::string> subjects(uniq.begin(), uniq.end());

    ModelPlan plan = bind_impl(spec, table.factors, std::move(subjects),
                               problems);
    if (!problems.empty()) throw SpecError(std::move(problems));
    return plan;
}

ModelPlan bind_plan(const ModelSpec& spec,
                    const std::vector<FactorDef>& factors,
                    std::vector<std::string> subjects) {
    std::vector<std::string> problems;
    ModelPlan plan = bind_impl(spec, factors, std::move(subjects), problems);
    if (!problems.empty()) throw SpecError(std::move(problems));
    return plan;
}

}  // namespace ssanova
