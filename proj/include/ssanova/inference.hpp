#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ssanova/solver.hpp"

namespace ssanova {

struct CurveEstimate {
    std::vector<double> grid;    // minutes; level indices for nominal targets
    std::vector<double> value;
    std::vector<double> se;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<std::string> labels;  // level labels when target is nominal
    double level = 0.95;
    std::string target;
};

struct RegionSet {
    std::vector<std::pair<double, double>> intervals;  // [start,end] minutes
    double level = 0.95;
};

// Inverse standard normal CDF (Acklam's approximation plus one Halley
// refinement; accurate to ~1e-15 over (0,1)).
double normal_quantile(double p);

// Var(eta_mask(x)) = sigma2_eps * h(x)' M^-1 h(x), h stacking the masked
// terms' null-basis values and theta-weighted kernel sections at the knots.
std::vector<double> posterior_variance(const FittedModel& model,
                                       const std::vector<Point>& targets,
                                       const std::vector<std::string>& mask);

// Single ANOVA component with its Bayesian band. Interaction terms need the
// factor level to slice at (at_level); nominal terms ignore the minute grid
// and return one entry per level.
CurveEstimate eval_component(const FittedModel& model,
                             const std::string& term,
                             const std::vector<double>& grid_minutes,
                             double level = 0.95,
                             const std::string& at_level = "");

// Full fixed-effect prediction (all function terms, no subject intercepts).
// `at` assigns a level to every factor the model reads.
CurveEstimate predict(const FittedModel& model,
                      const std::vector<double>& grid_minutes,
                      const std::map<std::string, std::string>& at,
                      double level = 0.95);

// delta(t | g, g_star) from the group-dependent terms, band from the
// posterior variance of the contrast h(t,g) - h(t,g_star).
CurveEstimate difference_curve(const FittedModel& model, const std::string& g,
                               const std::string& g_star,
                               const std::vector<double>& grid_minutes,
                               double level = 0.95);

// Maximal runs where the band excludes zero, reported at grid resolution.
RegionSet significant_regions(const CurveEstimate& curve);

struct FitReport {
    int n = 0;
    int knots = 0;
    int null_dim = 0;
    int subjects = 0;
    double r_squared = 0.0;
    double sigma_eps = 0.0;
    double sigma_b = 0.0;
    double trace_A = 0.0;
    std::string criterion;
    double criterion_value = 0.0;
    double lambda = 0.0;
    double lambda_b = 0.0;
    std::vector<std::pair<std::string, double>> theta;
    std::string transform;
};

FitReport summarize_fit(const FittedModel& model);

// 0, step, ..., 1440 (inclusive when step divides 1440).
std::vector<double> uniform_grid_minutes(double step_minutes);

}  // namespace ssanova
