#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "ssanova/core.hpp"

namespace ssanova {

// Scaled Bernoulli polynomials: k_nu = B_nu(u)/nu! on [0,1].
double bern_k1(double u);  // u - 1/2
double bern_k2(double u);  // (k1^2 - 1/12)/2
double bern_k4(double u);  // (k1^4 - k1^2/2 + 7/240)/24

// Cubic-spline reproducing kernel R(x,y) = k2(x)k2(y) - k4(|x-y|).
// Every kernel section integrates to zero over [0,1], so the ANOVA side
// conditions hold by construction. Throws ArgumentError off [0,1].
double cubic_kernel(double x, double y);

// Null space of the cubic penalty: {1, k1(x)}.
std::array<double, 2> cubic_null_basis(double x);

// Shrinkage kernel for a nominal factor: 1[g==h] - 1/K. Rows sum to zero.
double nominal_kernel(int g, int h, int K);

// A covariate point as the kernels see it: rescaled time in [0,1], one level
// index per declared factor, subject index (-1 when absent).
struct Point {
    double t = 0.0;
    std::vector<int> levels;
    int subject = -1;
};

// Kernel + null basis for one resolved model term. Tensor-product terms
// multiply their marginal kernels; unpenalized terms contribute only basis
// columns (eval is identically zero for them).
class TermKernel {
  public:
    TermKernel(PlannedTerm term, std::vector<std::string> level_labels);

    const PlannedTerm& term() const { return term_; }
    double eval(const Point& a, const Point& b) const;
    int null_dim() const;
    // Fills null_dim() values at p.
    void null_basis(const Point& p, double* out) const;
    std::vector<std::string> null_names() const;

  private:
    PlannedTerm term_;
    std::vector<std::string> labels_;  // factor levels, for column naming
};

TermKernel term_kernel(const PlannedTerm& term,
                       const std::vector<FactorDef>& factors);

// M[i][j] = k.eval(rows[i], cols[j]).
Eigen::MatrixXd assemble_gram(const TermKernel& k,
                              const std::vector<Point>& rows,
                              const std::vector<Point>& cols);

}  // namespace ssanova
