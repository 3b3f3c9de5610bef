#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>

#include "qgp/layout.hpp"

namespace qgp {

enum class MapKind { unitary, isometry, partial_isometry, projector };

inline const char* to_string(MapKind k) {
    switch (k) {
        case MapKind::unitary: return "unitary";
        case MapKind::isometry: return "isometry";
        case MapKind::partial_isometry: return "partial_isometry";
        case MapKind::projector: return "projector";
    }
    return "?";
}

/// Matrix from one labelled space to another, tagged with the structural
/// property its constructor verified.
class LinearMapOperator {
public:
    LinearMapOperator(MapKind kind, SubsystemLayout in, SubsystemLayout out,
                      Eigen::MatrixXcd matrix, double tol = 1e-9)
        : kind_(kind), in_(std::move(in)), out_(std::move(out)),
          matrix_(std::move(matrix)) {
        if (matrix_.rows() != out_.total_dim() || matrix_.cols() != in_.total_dim())
            throw std::invalid_argument("map matrix shape does not match layouts");
        validate(tol);
    }

    static LinearMapOperator identity(const SubsystemLayout& on) {
        const long d = on.total_dim();
        return LinearMapOperator(MapKind::unitary, on, on,
                                 Eigen::MatrixXcd::Identity(d, d));
    }

    MapKind kind() const { return kind_; }
    const SubsystemLayout& in_layout() const { return in_; }
    const SubsystemLayout& out_layout() const { return out_; }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }

private:
    void validate(double tol) const {
        const long rows = matrix_.rows();
        const long cols = matrix_.cols();
        const auto gram = (matrix_.adjoint() * matrix_).eval();
        switch (kind_) {
            case MapKind::unitary: {
                if (rows != cols)
                    throw std::invalid_argument("unitary map must be square");
                check_close(gram, Eigen::MatrixXcd::Identity(cols, cols), tol,
                            "U^dag U");
                check_close((matrix_ * matrix_.adjoint()).eval(),
                            Eigen::MatrixXcd::Identity(rows, rows), tol,
                            "U U^dag");
                break;
            }
            case MapKind::isometry: {
                if (rows < cols)
                    throw std::invalid_argument(
                        "isometry needs output dimension >= input dimension");
                check_close(gram, Eigen::MatrixXcd::Identity(cols, cols), tol,
                            "V^dag V");
                break;
            }
            case MapKind::partial_isometry: {
                // W^dag W must be a projector.
                check_close((gram * gram).eval(), gram, tol, "(W^dag W)^2");
                check_close(gram.adjoint().eval(), gram, tol, "W^dag W hermiticity");
                break;
            }
            case MapKind::projector: {
                if (rows != cols || !(in_ == out_))
                    throw std::invalid_argument(
                        "projector must act within one space");
                check_close((matrix_ * matrix_).eval(), matrix_, tol, "P^2");
                check_close(matrix_.adjoint().eval(), matrix_, tol,
                            "P hermiticity");
                break;
            }
        }
    }

    static void check_close(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                            double tol, const char* what) {
        const double dev = (a - b).cwiseAbs().maxCoeff();
        if (dev > tol)
            throw std::invalid_argument(std::string(what) +
                                        " deviates from required form by " +
                                        std::to_string(dev));
    }

    MapKind kind_;
    SubsystemLayout in_;
    SubsystemLayout out_;
    Eigen::MatrixXcd matrix_;
};

} // namespace qgp
