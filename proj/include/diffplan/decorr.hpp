#pragma once

#include <cstddef>
#include <vector>

#include "diffplan/autograd.hpp"

namespace diffplan::decorr {

inline constexpr double kDefaultEps = 1e-8;
inline constexpr double kDefaultBeta = 0.02;

/// Column-centred, variance-normalised M (population variance plus eps).
grad::Tensor normalize_columns(const grad::Tensor& m, double eps = kDefaultEps);

/// d x d matrix N^T N of the normalised batch; the diagonal is close to B.
grad::Tensor corr_matrix(const grad::Tensor& m, double eps = kDefaultEps);

/// Mean squared off-diagonal entry of corr (over the d(d-1) slots), divided
/// by B. Throws DegenerateBatch when B < 2 or d < 2.
double decorr_loss_value(const grad::Tensor& m, double eps = kDefaultEps);

/// Differentiable version of decorr_loss_value with an analytic backward.
grad::Var decorr_loss(grad::Var m, double eps = kDefaultEps);

/// L_diff + beta * L_rep.
double combined_loss(double l_diff, double l_rep, double beta);
grad::Var combined_loss(grad::Var l_diff, grad::Var l_rep, double beta);

/// Largest k singular values of the symmetric corr, descending.
std::vector<double> singular_spectrum(const grad::Tensor& corr, std::size_t k);

/// Mean |corr_ij| / B over off-diagonal slots: the average absolute Pearson
/// correlation between representation dimensions.
double mean_abs_offdiag_correlation(const grad::Tensor& m, double eps = kDefaultEps);

}  // namespace diffplan::decorr
