#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ssanova/core.hpp"
#include "ssanova/kernel.hpp"

namespace ssanova {

// log10-scale smoothing parameters. One lambda multiplies the theta-weighted
// penalty sum; lambda_b is the random-intercept ridge weight.
struct SmoothingParams {
    double log_lambda = 0.0;
    std::vector<double> log_theta;   // one per penalized function term
    double log_lambda_b = 0.0;       // used only when the system has Z
};

// Assembled penalized least-squares problem
//   (1/n)||y - S d - R_theta c - Z b||^2 + lambda c'Q_theta c + lambda_b||b||^2
// with R_theta = sum_b theta_b R_b, Q_theta = sum_b theta_b Q_b. Z is kept
// implicit as a subject index per row. finalize() precomputes the cross
// products that make criterion evaluations independent of n.
struct PenalizedSystem {
    Eigen::MatrixXd S;                     // n x m null-space design
    std::vector<Eigen::MatrixXd> R;        // n x q kernel design per term
    std::vector<Eigen::MatrixXd> Q;        // q x q knot Gram per term
    std::vector<int> subject_of;           // size n; empty if no intercepts
    int n_subjects = 0;
    Eigen::VectorXd y;
    std::vector<Point> knots;
    std::vector<std::string> null_names;   // m column labels
    std::vector<std::string> term_names;   // penalized function term labels

    int n() const { return static_cast<int>(y.size()); }
    int m() const { return static_cast<int>(S.cols()); }
    int q() const { return static_cast<int>(knots.size()); }
    int b_terms() const { return static_cast<int>(R.size()); }
    int p() const { return m() + q() + n_subjects; }
    bool has_random() const { return n_subjects > 0; }

    void finalize();  // build cross-product caches
    bool finalized() const { return finalized_; }

    // caches (valid after finalize)
    Eigen::MatrixXd StS;                   // m x m
    Eigen::VectorXd Sty;                   // m
    std::vector<Eigen::MatrixXd> StR;      // m x q per term
    std::vector<Eigen::VectorXd> Rty;      // q per term
    std::vector<std::vector<Eigen::MatrixXd>> RtR;  // q x q per term pair
    Eigen::MatrixXd StZ;                   // m x S
    std::vector<Eigen::MatrixXd> RtZ;      // q x S per term
    Eigen::VectorXd Zty;                   // S
    Eigen::VectorXd z_counts;              // S (rows per subject)
    double yty = 0.0;

  private:
    bool finalized_ = false;
};

struct SolveResult {
    Eigen::VectorXd d, c, b;
    Eigen::VectorXd fitted;                // n
    double rss = 0.0;
    double trace_A = 0.0;
    double objective = 0.0;                // penalized objective at solution
    Eigen::MatrixXd M;                     // p x p, including jitter as solved
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Solves the penalized normal equations at fixed parameters. The returned
// factorization is the one inference reuses. Escalating diagonal jitter is
// applied only if the bare Cholesky fails; a persistent failure triggers a
// rank diagnosis of S naming the offending columns.
SolveResult solve_at(const PenalizedSystem& sys, const SmoothingParams& par);

// V = n ||(I-A)y||^2 / tr(I-A)^2. Returns +inf when tr(I-A) degenerates.
double gcv(const PenalizedSystem& sys, const SmoothingParams& par);

// yt(I-A)y / det+(I-A)^{1/(n-m)}, det+ over nonzero eigenvalues of I-A.
double gml(const PenalizedSystem& sys, const SmoothingParams& par);

struct OptimOptions {
    bool stage2 = true;
    int max_cycles = 25;
    double golden_tol = 1e-3;    // log10 units
    double rel_tol = 1e-6;       // stage-2 stopping rule
    double log_lambda_lo = -8.0;
    double log_lambda_hi = 2.0;
};

// Stage 1: theta_b set so theta_b*Q_b has unit trace, lambda_b = 1,
// golden-section for log10 lambda on [lo,hi]. Stage 2: cyclic coordinate
// descent over each log theta and log lambda_b, re-optimizing lambda after
// each cycle, until the criterion stalls.
SmoothingParams optimize_params(const PenalizedSystem& sys, Criterion crit,
                                const OptimOptions& opt = {});

// q covariate points sampled without replacement from the distinct observed
// (time, levels) tuples; q_or_auto = 0 resolves to max(30, ceil(10 n^{2/9}))
// capped at n. Deterministic given seed; result sorted canonically.
std::vector<Point> select_knots(const ObservationTable& table, int q_or_auto,
                                std::uint64_t seed);
int resolve_knot_count(std::size_t n, int q_or_auto);

// Builds rows' covariate points in table order (subjects bound to the plan's
// sorted subject list when the model has random intercepts).
std::vector<Point> build_points(const ObservationTable& table,
                                const ModelPlan& plan);

PenalizedSystem assemble_system(const ObservationTable& table,
                                const ModelPlan& plan,
                                const std::vector<Point>& knots,
                                const Eigen::VectorXd& y);

// Where each model term lives in the coefficient vector (d | c | b).
struct TermLayout {
    std::string name;
    TermKind kind = TermKind::constant;
    int factor_index = -1;
    int K = 0;
    bool penalized = false;
    int null_offset = -1;   // column offset in S (unpenalized terms)
    int null_dim = 0;
    int theta_index = -1;   // index into params.log_theta (penalized terms)
};

struct FittedModel {
    ModelPlan plan;
    std::vector<TermLayout> layout;
    std::vector<Point> knots;
    Eigen::VectorXd d, c, b_hat;
    SmoothingParams params;
    double sigma2_eps = 0.0;
    double sigma2_b = 0.0;          // 0 when no random intercept
    double trace_A = 0.0;
    double criterion_value = 0.0;   // on the standardized response
    double r_squared = 0.0;
    double rss = 0.0;
    double y_scale = 1.0;
    int n = 0;
    Eigen::MatrixXd M;              // penalized normal matrix (jittered)
    Eigen::LLT<Eigen::MatrixXd> llt;

    int m() const { return static_cast<int>(d.size()); }
    int q() const { return static_cast<int>(c.size()); }
    int n_subj() const { return static_cast<int>(b_hat.size()); }
    int p() const { return m() + q() + n_subj(); }
    const TermLayout* find_term(const std::string& name) const;
    double theta(int theta_index) const;
    double lambda_b() const;
};

std::vector<TermLayout> build_layout(const ModelPlan& plan);

struct FitOptions {
    OptimOptions optim;
    std::optional<SmoothingParams> fixed_params;  // skip optimization
};

// End to end: transform response, rescale time, select knots, assemble,
// optimize, solve, estimate variances. Deterministic given spec.seed.
FittedModel fit(const ObservationTable& table, const ModelSpec& spec,
                const FitOptions& options = {});

}  // namespace ssanova
