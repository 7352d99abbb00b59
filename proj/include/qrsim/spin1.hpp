#pragma once
// Exact spin-1 reference: operators, chain Hamiltonians, dense propagators,
// Uhlmann fidelity, and seeded Haar states. Everything here is the oracle
// the engineered dynamics is benchmarked against.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>

namespace qrsim::spin1 {

using cxd = std::complex<double>;

struct Spin1Ops {
    Eigen::Matrix3cd sx;
    Eigen::Matrix3cd sy;
    Eigen::Matrix3cd sz;  // -i[sx, sy]; comes out diag(-1, 0, +1)
};

const Spin1Ops& ops();

enum class ModelKind { heisenberg, xxz, ising };

struct ModelSpec {
    ModelKind kind = ModelKind::heisenberg;
    int n_sites = 2;
    double lambda_x = 0.0;  // rad/s
    double lambda_y = 0.0;
    double lambda_z = 0.0;
    double j = 0.0;  // Ising exchange
    double b = 0.0;  // Ising transverse field along S_X

    void validate() const;
};

// Nearest-neighbour open chain over 3^N.
Eigen::MatrixXcd model_hamiltonian(const ModelSpec& spec);

// exp(-i H t) by dense eigendecomposition. Dimension capped at 3^4.
Eigen::MatrixXcd exact_propagator(const Eigen::MatrixXcd& h, double t);

// F = Tr sqrt(sqrt(rho) sigma sqrt(rho)). Eigenvalues in [-1e-8, 0) are
// clipped to zero; below -1e-6 is an error.
double uhlmann_fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);

// Deterministic per (dim, seed): complex standard normals from a
// Box-Muller transform over mt19937_64 output, then normalized.
Eigen::VectorXcd haar_random_state(int dim, std::uint64_t seed);

struct Rotations {
    Eigen::Matrix3cd rx;  // exp(-i Sx pi/2)
    Eigen::Matrix3cd ry;  // exp(-i Sy pi/2)
};

const Rotations& rotations();

// Sum_l op at site l over 3^N (or n_kept^N when embedding ops padded
// elsewhere); helper for building chain operators from 3x3 blocks.
Eigen::MatrixXcd chain_sum_single(const Eigen::Matrix3cd& op, int n_sites);
Eigen::MatrixXcd chain_sum_bond(const Eigen::Matrix3cd& a, const Eigen::Matrix3cd& b,
                                int n_sites);

} // namespace qrsim::spin1
