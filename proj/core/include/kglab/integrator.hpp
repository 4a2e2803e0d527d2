#pragma once

#include <Eigen/Dense>

#include <functional>

namespace kglab {

/// dy = f(t, y) for a block of columns.
using Rhs = std::function<void(double, const Eigen::MatrixXcd&, Eigen::MatrixXcd&)>;

/// Classical fourth-order Runge-Kutta with reusable stage storage.
class Rk4 {
public:
    void step(const Rhs& f, double t, double h, Eigen::MatrixXcd& y);
    void run(const Rhs& f, double s, double t, int steps, Eigen::MatrixXcd& y);

private:
    Eigen::MatrixXcd k1_, k2_, k3_, k4_, tmp_;
};

/// Integrating-factor (Lawson) fourth-order Runge-Kutta for
/// y' = diag(l) y + n(t, y); the linear part is integrated exactly.
class LawsonRk4 {
public:
    explicit LawsonRk4(Eigen::VectorXcd l) : l_(std::move(l)) {}

    void step(const Rhs& n, double t, double h, Eigen::MatrixXcd& y);
    void run(const Rhs& n, double s, double t, int steps, Eigen::MatrixXcd& y);

private:
    void set_step(double h);

    Eigen::VectorXcd l_;
    double h_ = 0.0;
    Eigen::VectorXcd e_half_, e_full_;
    Eigen::MatrixXcd k1_, k2_, k3_, k4_, tmp_, ey_;
};

} // namespace kglab
