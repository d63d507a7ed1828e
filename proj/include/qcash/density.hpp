// density.hpp
// Density matrices for mixed-state bookkeeping: key-averaged views in
// blindness checks, plus the pure-state embedding and trace distance.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"

namespace qcash {

class DensityMatrix {
public:
    // Validates hermiticity, unit trace, and positive semidefiniteness
    // (all at 1e-9).
    static DensityMatrix from_matrix(int n, Eigen::MatrixXcd m) {
        const Eigen::Index dim = Eigen::Index{1} << n;
        if (m.rows() != dim || m.cols() != dim) {
            throw ParameterError("density matrix shape does not match qubit count");
        }
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9) {
            throw ParameterError("density matrix is not Hermitian");
        }
        if (std::abs(m.trace().real() - 1.0) > 1e-9 || std::abs(m.trace().imag()) > 1e-9) {
            throw ParameterError("density matrix trace is not 1");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(m);
        if (solver.eigenvalues().minCoeff() < -1e-9) {
            throw ParameterError("density matrix has a negative eigenvalue");
        }
        return DensityMatrix(n, std::move(m));
    }

    int qubits() const { return n_; }
    const Eigen::MatrixXcd& matrix() const { return m_; }

private:
    friend DensityMatrix state_to_density(const QuantumState&);
    friend DensityMatrix mix(const std::vector<std::pair<double, QuantumState>>&);
    friend DensityMatrix maximally_mixed(int);

    DensityMatrix(int n, Eigen::MatrixXcd m) : n_(n), m_(std::move(m)) {}

    int n_;
    Eigen::MatrixXcd m_;
};

// |psi><psi|.
inline DensityMatrix state_to_density(const QuantumState& state) {
    const Eigen::Index dim = static_cast<Eigen::Index>(state.dim());
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = state[i];
    return DensityMatrix(state.qubits(), v * v.adjoint());
}

// Sum of w_i |psi_i><psi_i|; weights must be nonnegative and sum to 1
// within 1e-9.
inline DensityMatrix mix(const std::vector<std::pair<double, QuantumState>>& parts) {
    if (parts.empty()) throw ParameterError("mix of zero states");
    const int n = parts.front().second.qubits();
    const Eigen::Index dim = Eigen::Index{1} << n;
    double total = 0.0;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [weight, state] : parts) {
        if (weight < 0.0) throw ParameterError("negative mixture weight");
        if (state.qubits() != n) throw ParameterError("mixture states differ in size");
        total += weight;
        Eigen::VectorXcd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) v(i) = state[i];
        acc.noalias() += weight * (v * v.adjoint());
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ParameterError("mixture weights sum to " + std::to_string(total));
    }
    return DensityMatrix(n, std::move(acc));
}

inline DensityMatrix maximally_mixed(int n) {
    if (n < 1 || n > kMaxQubits) throw ParameterError("qubit count out of range");
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim, dim) / static_cast<double>(dim);
    return DensityMatrix(n, std::move(m));
}

// <psi|rho|psi>, real by hermiticity.
inline double overlap(const QuantumState& psi, const DensityMatrix& rho) {
    if (psi.qubits() != rho.qubits()) {
        throw ParameterError("overlap requires equal qubit counts");
    }
    const Eigen::Index dim = static_cast<Eigen::Index>(psi.dim());
    Eigen::VectorXcd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = psi[i];
    double value = (v.adjoint() * rho.matrix() * v)(0, 0).real();
    return std::clamp(value, 0.0, 1.0);
}

// (1/2) tr |rho - sigma| via the eigenvalues of the Hermitian difference.
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.qubits() != sigma.qubits()) {
        throw ParameterError("trace distance requires equal qubit counts");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.matrix() - sigma.matrix());
    return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

} // namespace qcash
