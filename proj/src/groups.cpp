#include "invpred/groups.hpp"

#include <cmath>

namespace invpred {

GroupElementN GroupElementN::identity(Index d) {
    return GroupElementN{Matrix::Identity(d, d), Vector::Zero(d)};
}

void GroupElementN::validate() const {
    require(V.rows() == m.size() && V.cols() == m.size(), ErrorKind::DimensionMismatch,
            "GroupElementN: V must be d x d");
    for (Index j = 0; j < V.cols(); ++j) {
        require(V(j, j) > 0.0, ErrorKind::InvalidArgument, "GroupElementN: V diagonal must be positive");
        for (Index i = j + 1; i < V.rows(); ++i)
            require(V(i, j) == 0.0, ErrorKind::InvalidArgument, "GroupElementN: V must be upper triangular");
    }
}

GroupElementN gn_compose(const GroupElementN& g2, const GroupElementN& g1) {
    require(g1.dim() == g2.dim(), ErrorKind::DimensionMismatch, "gn_compose: dimension mismatch");
    g1.validate();
    g2.validate();
    GroupElementN out;
    out.V = g2.V.triangularView<Eigen::Upper>() * g1.V;
    out.V.triangularView<Eigen::StrictlyLower>().setZero();
    out.m = g2.V.triangularView<Eigen::Upper>() * g1.m + g2.m;
    return out;
}

GroupElementN gn_inverse(const GroupElementN& g) {
    g.validate();
    const Index d = g.dim();
    GroupElementN out;
    out.V = g.V.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
    out.V.triangularView<Eigen::StrictlyLower>().setZero();
    out.m = -(out.V.triangularView<Eigen::Upper>() * g.m);
    return out;
}

Vector gn_act_point(const GroupElementN& g, const Vector& x) {
    require(x.size() == g.dim(), ErrorKind::DimensionMismatch, "gn_act_point: dimension mismatch");
    return g.V.triangularView<Eigen::Upper>() * x + g.m;
}

ObservationSet gn_act_data(const GroupElementN& g, const ObservationSet& obs) {
    require(obs.d() == g.dim(), ErrorKind::DimensionMismatch, "gn_act_data: dimension mismatch");
    Matrix moved = obs.data() * g.V.transpose();
    moved.rowwise() += g.m.transpose();
    return ObservationSet(std::move(moved));
}

MvnParams gn_act_params(const GroupElementN& g, const MvnParams& theta) {
    require(theta.dim() == g.dim(), ErrorKind::DimensionMismatch, "gn_act_params: dimension mismatch");
    MvnParams out;
    out.U = g.V.triangularView<Eigen::Upper>() * theta.U;
    out.U.triangularView<Eigen::StrictlyLower>().setZero();
    out.mu = gn_act_point(g, theta.mu);
    return out;
}

double gn_log_det(const GroupElementN& g) { return triangular_logdet(g.V); }

double gn_right_haar_logdensity(const MvnParams& theta) {
    theta.validate();
    double out = 0.0;
    for (Index i = 0; i < theta.dim(); ++i) out -= static_cast<double>(i + 1) * std::log(theta.U(i, i));
    return out;
}

GpGroupElement GpGroupElement::identity(Index p) { return GpGroupElement{1.0, Vector::Zero(p)}; }

void GpGroupElement::validate() const {
    require(a > 0.0 && std::isfinite(a), ErrorKind::InvalidArgument, "GpGroupElement: a must be positive");
}

GpGroupElement gp_compose(const GpGroupElement& g2, const GpGroupElement& g1) {
    require(g1.b.size() == g2.b.size(), ErrorKind::DimensionMismatch, "gp_compose: dimension mismatch");
    return GpGroupElement{g2.a * g1.a, g2.a * g1.b + g2.b};
}

GpGroupElement gp_inverse(const GpGroupElement& g) {
    g.validate();
    return GpGroupElement{1.0 / g.a, -g.b / g.a};
}

GpParams gp_act_params(const GpGroupElement& g, const GpParams& theta) {
    require(theta.beta.size() == g.b.size(), ErrorKind::DimensionMismatch, "gp_act_params: dimension mismatch");
    return GpParams{g.a * theta.beta + g.b, g.a * theta.sigmaY};
}

GpActResult gp_act(const GpGroupElement& g, const Matrix& trainX, const Vector& y, const Matrix& predX,
                   const Vector& yStar, const GpParams& theta) {
    g.validate();
    const Index p = g.b.size();
    require(trainX.cols() == p && y.size() == trainX.rows(), ErrorKind::DimensionMismatch,
            "gp_act: observation shape mismatch");
    require(predX.rows() == yStar.size() && (predX.rows() == 0 || predX.cols() == p),
            ErrorKind::DimensionMismatch, "gp_act: prediction shape mismatch");
    GpActResult out;
    out.y = g.a * y + trainX * g.b;
    out.yStar = predX.rows() == 0 ? Vector() : Vector(g.a * yStar + predX * g.b);
    out.params = gp_act_params(g, theta);
    return out;
}

Vector gp_act_ystar_kernel_corrected(const GpGroupElement& g, const Matrix& trainX, const Vector& y,
                                     const Matrix& predX, const Vector& yStar,
                                     const GpKernelPack& kernels) {
    require(kernels.regression().rows() == predX.rows() && kernels.regression().cols() == trainX.rows(),
            ErrorKind::DimensionMismatch, "gp_act_ystar_kernel_corrected: kernel shape mismatch");
    return g.a * yStar + predX * g.b + kernels.regression() * ((1.0 - g.a) * y - trainX * g.b);
}

}  // namespace invpred
