#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssanova/errors.hpp"

namespace ssanova {

// ---------------------------------------------------------------- domain ---

// One long-format record: subject, minute of day, one level per declared
// factor, raw response. `day` is carried for multi-day aggregation and is
// ignored by the fitting machinery.
struct Observation {
    std::string subject;
    double time = 0.0;                 // minutes, in [0, 1440)
    std::vector<std::string> levels;   // one per declared factor, in order
    double response = 0.0;
    int day = 0;
};

struct FactorDef {
    std::string name;
    std::vector<std::string> levels;   // K >= 2 distinct labels

    int level_index(const std::string& label) const;  // -1 if absent
};

struct ObservationTable {
    std::vector<FactorDef> factors;
    std::vector<Observation> rows;

    std::size_t n() const { return rows.size(); }
    int factor_index(const std::string& name) const;  // -1 if absent

    // Checks row invariants (time range, finite response, level membership).
    // Throws DataError on the first violation.
    void check() const;
};

// ----------------------------------------------------------------- terms ---

enum class TermKind {
    constant,
    time_linear,
    time_smooth,
    nominal_main,
    time_by_nominal_linear,
    time_by_nominal_smooth,
    random_intercept,
};

const char* term_kind_name(TermKind k);

struct TermSpec {
    TermKind kind = TermKind::constant;
    std::string factor;     // used by nominal_main / time_by_nominal_*
    // Only nominal_main may be switched to the unpenalized null space;
    // constant/time_linear are always unpenalized, everything else penalized.
    bool penalized_override = false;  // true => nominal_main goes unpenalized

    static TermSpec make(TermKind k, std::string factor = "") {
        TermSpec t;
        t.kind = k;
        t.factor = std::move(factor);
        return t;
    }
};

enum class Transform { identity, log1p };
enum class Criterion { gcv, gml };

const char* transform_name(Transform t);
const char* criterion_name(Criterion c);
Transform parse_transform(const std::string& s);   // throws ArgumentError
Criterion parse_criterion(const std::string& s);   // throws ArgumentError

double apply_transform(double v, Transform t);     // throws on log1p(v<=-1)

// Daily domain is fixed a priori: minutes / 1440, never min-max of data.
inline double rescale_time(double minutes) { return minutes / 1440.0; }

// ------------------------------------------------------------ model spec ---

struct ModelSpec {
    std::vector<TermSpec> terms;
    Transform transform = Transform::log1p;
    Criterion criterion = Criterion::gcv;
    int knot_count = 0;          // 0 = "auto"
    std::uint64_t seed = 1;

    // The standard model: constant + time main effect + one grouping factor
    // with main effect and both interaction parts + subject intercepts.
    static ModelSpec standard(const std::string& group_factor,
                              const std::vector<std::string>& extra_factors = {},
                              bool random_intercept = true);
};

// A term bound to the table: factor index/cardinality resolved, canonical
// name assigned, penalization decided.
struct PlannedTerm {
    TermSpec spec;
    std::string name;        // e.g. "time_smooth", "group", "time_x_group_smooth"
    int factor_index = -1;   // into ObservationTable::factors
    int K = 0;               // factor cardinality (0 for non-nominal terms)
    bool penalized = false;
};

struct ModelPlan {
    ModelSpec spec;
    std::vector<FactorDef> factors;   // snapshot used for binding
    std::vector<PlannedTerm> terms;   // declaration order
    std::vector<std::string> subjects;  // sorted unique labels (if intercepts)

    int unpenalized_count() const;
    int penalized_count() const;
    bool has_random_intercept() const;
    const PlannedTerm* find(const std::string& name) const;
};

// Resolves and validates a spec against a table. Error reporting is
// exhaustive: every problem found is listed in the thrown SpecError.
// Validating the plan's own spec again yields an identical plan.
ModelPlan validate_spec(const ModelSpec& spec, const ObservationTable& table);

// Same binding and structural checks against explicit factor definitions,
// used when rehydrating persisted models (no table available).
ModelPlan bind_plan(const ModelSpec& spec, const std::vector<FactorDef>& factors,
                    std::vector<std::string> subjects);

}  // namespace ssanova
