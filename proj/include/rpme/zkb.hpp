#pragma once

#include "rpme/grid.hpp"

namespace rpme {

/// 1D source-type Barenblatt profile with the given mass,
///   u(t,x) = t^(-a) (C - k x^2 t^(-2a))_+^(1/(m-1)),  a = 1/(m+1),
/// k = a (m-1) / (2m), C fixed by one quadrature of the mass integral.
double zkb_profile(double t, double x, double m, double mass);

/// Edge of the support at time t.
double zkb_support_radius(double t, double m, double mass);

Field zkb_field(const GridPtr& grid, double t, double m, double mass);

} // namespace rpme
