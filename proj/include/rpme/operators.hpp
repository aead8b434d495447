#pragma once

#include "rpme/grid.hpp"

namespace rpme {

/// Second-order centered discrete Laplacian (3-point in 1D, 5-point in 2D)
/// with zero Dirichlet boundary.
Field laplacian(const Field& u);

/// Solves -Laplacian_h v = u with zero Dirichlet boundary (direct sparse
/// solve, factorization cached on the grid).
Field inverse_laplacian(const Field& u);

enum class NormKind { Lp, Linf, H10, Hdual };

/// Quadrature-weighted L^p, max-abs, discrete H^1_0 seminorm, or the dual
/// norm sqrt((u, (-Lap)^{-1} u)_h). p is used only for NormKind::Lp.
double norm(const Field& u, NormKind which, double p = 2.0);

double norm_l1(const Field& u);
double norm_l2(const Field& u);
double norm_lp(const Field& u, double p);
double norm_linf(const Field& u);
double norm_h10(const Field& u);
double norm_hdual(const Field& u);

/// Weighted integral over O (sum of weight * value).
double integrate(const Field& u);
/// Quadrature-weighted inner product.
double inner(const Field& a, const Field& b);

} // namespace rpme
