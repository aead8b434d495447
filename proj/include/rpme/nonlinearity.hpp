#pragma once

namespace rpme {

/// Phi(r) = |r|^m sgn(r), m > 0.
double phi(double r, double m);

/// Smooth non-degenerate replacement of Phi. Odd, C^2, equal to Phi on
/// delta <= |r| <= 1/delta, with derivative pinched between C1 > 0 and C2.
/// Below delta the derivative is a quintic blend whose integral is matched
/// so the value at delta is exactly delta^m; above 1/delta the derivative
/// settles to the constant slope m * delta^(1-m) through a cubic bump.
/// C1 and C2 are measured from the constructed spline, not prescribed.
class PhiSpec {
  public:
    PhiSpec(double m, double delta);

    double m() const { return m_; }
    double delta() const { return delta_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }

    struct Eval {
        double value;
        double deriv;
    };

    /// Value and first derivative of Phi^delta at r.
    Eval phi_delta(double r) const;

    /// Antiderivative int_0^r Phi^delta, by adaptive quadrature
    /// (absolute tolerance 1e-10). Even and nonnegative.
    double psi_delta(double r) const;

  private:
    double deriv_at(double a) const; // a >= 0
    double value_at(double a) const; // a >= 0

    double m_, delta_;
    double alpha_;      // derivative at 0
    double inner_hi_;   // m * delta^(m-1), derivative at the inner knot
    double curv_in_;    // m(m-1) delta^(m-1), scaled curvature at the inner knot
    double slope_out_;  // m * delta^(1-m), tail slope
    double bump_out_;   // m(m-1) delta^(1-m), outer blend amplitude
    double val_outer_;  // Phi^delta at 2/delta
    double c1_, c2_;
};

} // namespace rpme
