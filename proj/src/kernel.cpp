#include "ssanova/kernel.hpp"

#include <cmath>

namespace ssanova {

double bern_k1(double u) { return u - 0.5; }

double bern_k2(double u) {
    double a = bern_k1(u);
    return 0.5 * (a * a - 1.0 / 12.0);
}

double bern_k4(double u) {
    double a = bern_k1(u);
    double a2 = a * a;
    return (a2 * a2 - 0.5 * a2 + 7.0 / 240.0) / 24.0;
}

namespace {

void check_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ArgumentError(std::string(what) + " outside [0,1]: " +
                            std::to_string(v));
}

}  // namespace

double cubic_kernel(double x, double y) {
    check_unit(x, "cubic_kernel x");
    check_unit(y, "cubic_kernel y");
    return bern_k2(x) * bern_k2(y) - bern_k4(std::fabs(x - y));
}

std::array<double, 2> cubic_null_basis(double x) {
    check_unit(x, "cubic_null_basis x");
    return {1.0, bern_k1(x)};
}

double nominal_kernel(int g, int h, int K) {
    if (K < 2) throw ArgumentError("nominal_kernel needs K >= 2");
    if (g < 0 || g >= K || h < 0 || h >= K)
        throw ArgumentError("nominal_kernel level index out of range");
    return (g == h ? 1.0 : 0.0) - 1.0 / K;
}

TermKernel::TermKernel(PlannedTerm term, std::vector<std::string> labels)
    : term_(std::move(term)), labels_(std::move(labels)) {}

double TermKernel::eval(const Point& a, const Point& b) const {
    switch (term_.spec.kind) {
        case TermKind::constant:
        case TermKind::time_linear: return 0.0;  // pure null-space terms
        case TermKind::time_smooth: return cubic_kernel(a.t, b.t);
        case TermKind::nominal_main:
            if (!term_.penalized) return 0.0;
            return nominal_kernel(a.levels.at(term_.factor_index),
                                  b.levels.at(term_.factor_index), term_.K);
        case TermKind::time_by_nominal_linear:
            return bern_k1(a.t) * bern_k1(b.t) *
                   nominal_kernel(a.levels.at(term_.factor_index),
                                  b.levels.at(term_.factor_index), term_.K);
        case TermKind::time_by_nominal_smooth:
            return cubic_kernel(a.t, b.t) *
                   nominal_kernel(a.levels.at(term_.factor_index),
                                  b.levels.at(term_.factor_index), term_.K);
        case TermKind::random_intercept:
            return (a.subject >= 0 && a.subject == b.subject) ? 1.0 : 0.0;
    }
    throw ArgumentError("unsupported term kind");
}

int TermKernel::null_dim() const {
    switch (term_.spec.kind) {
        case TermKind::constant:
        case TermKind::time_linear: return 1;
        case TermKind::nominal_main: return term_.penalized ? 0 : term_.K - 1;
        default: return 0;
    }
}

void TermKernel::null_basis(const Point& p, double* out) const {
    switch (term_.spec.kind) {
        case TermKind::constant: out[0] = 1.0; return;
        case TermKind::time_linear: out[0] = bern_k1(p.t); return;
        case TermKind::nominal_main: {
            if (term_.penalized) return;
            // K-1 sum-to-zero contrasts: 1[g==j] - 1[g==K-1]
            int g = p.levels.at(term_.factor_index);
            for (int j = 0; j < term_.K - 1; ++j)
                out[j] = (g == j ? 1.0 : 0.0) - (g == term_.K - 1 ? 1.0 : 0.0);
            return;
        }
        default: return;
    }
}

std::vector<std::string> TermKernel::null_names() const {
    switch (term_.spec.kind) {
        case TermKind::constant: return {"constant"};
        case TermKind::time_linear: return {"time_linear"};
        case TermKind::nominal_main: {
            if (term_.penalized) return {};
            std::vector<std::string> names;
            for (int j = 0; j + 1 < term_.K; ++j)
                names.push_back(term_.name + ":" + labels_.at(j));
            return names;
        }
        default: return {};
    }
}

TermKernel term_kernel(const PlannedTerm& term,
                       const std::vector<FactorDef>& factors) {
    switch (term.spec.kind) {
        case TermKind::constant:
        case TermKind::time_linear:
        case TermKind::time_smooth:
        case TermKind::random_intercept: return TermKernel(term, {});
        case TermKind::nominal_main:
        case TermKind::time_by_nominal_linear:
        case TermKind::time_by_nominal_smooth:
            if (term.factor_index < 0 ||
                term.factor_index >= static_cast<int>(factors.size()))
                throw ArgumentError("term '" + term.name +
                                    "' has no bound factor");
            return TermKernel(term, factors[term.factor_index].levels);
    }
    throw ArgumentError("unsupported term kind");
}

Eigen::MatrixXd assemble_gram(const TermKernel& k,
                              const std::vector<Point>& rows,
                              const std::vector<Point>& cols) {
    Eigen::MatrixXd M(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            M(i, j) = k.eval(rows[i], cols[j]);
    return M;
}

}  // namespace ssanova
