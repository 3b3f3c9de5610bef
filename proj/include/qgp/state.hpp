#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

#include "qgp/layout.hpp"

namespace qgp {

class DensityOperator;

/// Normalised state vector over a subsystem layout.
class PureState {
public:
    PureState(SubsystemLayout layout, Eigen::VectorXcd amplitudes,
              double norm_tol = 1e-10)
        : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != layout_.total_dim())
            throw std::invalid_argument(
                "amplitude vector length does not match layout dimension");
        const double norm2 = amplitudes_.squaredNorm();
        if (std::abs(norm2 - 1.0) > norm_tol)
            throw std::invalid_argument("state vector is not normalised (|norm^2 - 1| = " +
                                        std::to_string(std::abs(norm2 - 1.0)) + ")");
    }

    /// Skips the norm check; for intermediate (possibly subnormalised) vectors
    /// such as projected states.
    static PureState unchecked(SubsystemLayout layout, Eigen::VectorXcd amplitudes) {
        return PureState(std::move(layout), std::move(amplitudes), private_tag{});
    }

    static PureState basis_state(const SubsystemLayout& layout, long index) {
        if (index < 0 || index >= layout.total_dim())
            throw std::invalid_argument("basis index out of range");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(layout.total_dim());
        v(index) = 1.0;
        return PureState(layout, std::move(v));
    }

    const SubsystemLayout& layout() const { return layout_; }
    const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }

    long dim() const { return layout_.total_dim(); }
    double norm() const { return amplitudes_.norm(); }

    DensityOperator density() const;

private:
    struct private_tag {};
    PureState(SubsystemLayout layout, Eigen::VectorXcd amplitudes, private_tag)
        : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != layout_.total_dim())
            throw std::invalid_argument(
                "amplitude vector length does not match layout dimension");
    }

    SubsystemLayout layout_;
    Eigen::VectorXcd amplitudes_;
};

/// Density operator over a subsystem layout.  The validating constructor
/// checks Hermiticity, unit trace and positivity; operations that produce
/// positive operators by construction use `unchecked` and re-symmetrise
/// instead, so numerical drift cannot accumulate into eigensolvers.
class DensityOperator {
public:
    DensityOperator(SubsystemLayout layout, Eigen::MatrixXcd matrix,
                    double tol = 1e-10, double eig_tol = 1e-9)
        : layout_(std::move(layout)), matrix_(std::move(matrix)) {
        check_shape();
        const double herm_dev =
            (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
        if (herm_dev > tol)
            throw std::invalid_argument("density matrix is not Hermitian (max deviation " +
                                        std::to_string(herm_dev) + ")");
        const double tr_dev = std::abs(matrix_.trace().real() - 1.0) +
                              std::abs(matrix_.trace().imag());
        if (tr_dev > tol)
            throw std::invalid_argument("density matrix trace differs from 1 by " +
                                        std::to_string(tr_dev));
        matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(matrix_,
                                                           Eigen::EigenvaluesOnly);
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -eig_tol)
            throw std::invalid_argument("density matrix has eigenvalue " +
                                        std::to_string(min_eig));
    }

    /// Wraps a matrix that is Hermitian/positive by construction (partial
    /// traces, channel outputs, ...).  Symmetrises but skips the eigencheck.
    static DensityOperator unchecked(SubsystemLayout layout, Eigen::MatrixXcd matrix) {
        return DensityOperator(std::move(layout), std::move(matrix), private_tag{});
    }

    static DensityOperator maximally_mixed(SubsystemLayout layout) {
        const long d = layout.total_dim();
        return unchecked(std::move(layout),
                         Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(d));
    }

    const SubsystemLayout& layout() const { return layout_; }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }

    long dim() const { return layout_.total_dim(); }
    double trace_real() const { return matrix_.trace().real(); }

    /// tr[rho^2]; equals 1 exactly on pure states.
    double purity() const { return (matrix_ * matrix_).trace().real(); }

private:
    struct private_tag {};
    DensityOperator(SubsystemLayout layout, Eigen::MatrixXcd matrix, private_tag)
        : layout_(std::move(layout)), matrix_(std::move(matrix)) {
        check_shape();
        matrix_ = 0.5 * (matrix_ + matrix_.adjoint()).eval();
    }

    void check_shape() const {
        if (matrix_.rows() != layout_.total_dim() ||
            matrix_.cols() != layout_.total_dim())
            throw std::invalid_argument("matrix shape does not match layout dimension");
    }

    SubsystemLayout layout_;
    Eigen::MatrixXcd matrix_;
};

inline DensityOperator PureState::density() const {
    return DensityOperator::unchecked(layout_,
                                      amplitudes_ * amplitudes_.adjoint());
}

} // namespace qgp
