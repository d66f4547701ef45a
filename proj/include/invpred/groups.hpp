#pragma once

#include "invpred/gp_types.hpp"
#include "invpred/numcore.hpp"

namespace invpred {

// Element (V, m) of the affine group with V upper triangular, positive
// diagonal. Acts on points as x -> V x + m.
struct GroupElementN {
    Matrix V;
    Vector m;

    static GroupElementN identity(Index d);
    Index dim() const { return m.size(); }
    void validate() const;
};

// (V2, m2) . (V1, m1) = (V2 V1, V2 m1 + m2)
GroupElementN gn_compose(const GroupElementN& g2, const GroupElementN& g1);
GroupElementN gn_inverse(const GroupElementN& g);

Vector gn_act_point(const GroupElementN& g, const Vector& x);
ObservationSet gn_act_data(const GroupElementN& g, const ObservationSet& obs);
MvnParams gn_act_params(const GroupElementN& g, const MvnParams& theta);

// log det V, the log volume change of the action on one point.
double gn_log_det(const GroupElementN& g);

// Unnormalized log right-Haar density, sum_i -i log U_ii with i 1-based.
double gn_right_haar_logdensity(const MvnParams& theta);

// Element (a, b) acting on GP outputs through the feature matrix.
struct GpGroupElement {
    double a = 1.0;
    Vector b;

    static GpGroupElement identity(Index p);
    void validate() const;
};

GpGroupElement gp_compose(const GpGroupElement& g2, const GpGroupElement& g1);
GpGroupElement gp_inverse(const GpGroupElement& g);

// (beta, sigmaY) -> (a beta + b, a sigmaY)
GpParams gp_act_params(const GpGroupElement& g, const GpParams& theta);

struct GpActResult {
    Vector y;
    Vector yStar;
    GpParams params;
};

// y -> a y + X b and y* -> a y* + X* b, with X, X* the n x p and m x p feature
// matrices. This is the action under which p(y* | y, theta) transforms with
// Jacobian a^m. `theta` is mapped alongside for convenience.
GpActResult gp_act(const GpGroupElement& g, const Matrix& trainX, const Vector& y,
                   const Matrix& predX, const Vector& yStar, const GpParams& theta);

// The alternative y* map a y* + X* b + K(x*,x)K(x,x)^{-1}((1 - a) y - X b).
// Kept so tests can show it does not preserve the conditional density.
Vector gp_act_ystar_kernel_corrected(const GpGroupElement& g, const Matrix& trainX, const Vector& y,
                                     const Matrix& predX, const Vector& yStar,
                                     const GpKernelPack& kernels);

}  // namespace invpred
