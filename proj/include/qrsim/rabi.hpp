#pragma once
// Single-site quantum Rabi system: Hamiltonian assembly, dressed spectrum
// with parity labels, and the field matrix-element tables that the pulse
// compiler and the dissipator builder run on.
//
// Basis convention: product index q*n_fock + n with q=0 the qubit ground
// state, q=1 excited, and n the Fock occupation. sigma_z = diag(-1,+1) so
// the decoupled ground state sits at -omega_q/2. The parity operator
// exp(i*pi*(a^dag a + sigma^+ sigma^-)) is diagonal here with entries
// (-1)^(n+q). All frequencies are angular (rad/s).

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace qrsim::rabi {

struct QrsParams {
    double omega_q = 0.0;  // qubit splitting
    double omega_r = 0.0;  // resonator fundamental
    double g = 0.0;        // qubit-field coupling
    int n_fock = 60;       // Fock cutoff
    char species = 'A';

    void validate() const;
};

struct QrsSpectrum {
    Eigen::VectorXd energies;      // all 2*n_fock eigenvalues, ascending
    Eigen::MatrixXd states;        // eigenvectors in columns (real basis)
    std::vector<int> parities;     // +/-1 per eigenstate
    std::vector<double> parity_quality;  // |<Pi>| per eigenstate
    int n_kept = 0;
    int n_fock = 0;

    int dim() const { return static_cast<int>(energies.size()); }
};

// H = (omega_q/2) sigma_z + omega_r a^dag a + g sigma_x (a + a^dag).
// Real symmetric in the product basis.
Eigen::MatrixXd build_rabi_hamiltonian(const QrsParams& params);

// Ascending eigenpairs with sharp parity labels. Near-degenerate clusters
// are rotated into parity eigenstates; each eigenvector's largest component
// is made positive so matrix-element signs are reproducible.
QrsSpectrum diagonalize(const Eigen::MatrixXd& h, int n_kept, int n_fock);

// Sign of <state| exp(i pi (a^dag a + sigma^+ sigma^-)) |state>.
// The magnitude of the expectation lands in *quality when given.
int parity_label(const Eigen::VectorXd& state, int n_fock, double* quality = nullptr);

// chi_kj = <k|(a + a^dag)|j> over the kept levels. Same-parity entries are
// checked to vanish and then pinned to exact zero.
Eigen::MatrixXd chi_elements(const QrsSpectrum& spec);

// z_kj = <k|(a + a^dag)^2|j>, computed directly and cross-checked against
// the chi.chi sum over every level below the cutoff.
Eigen::MatrixXd z_elements(const QrsSpectrum& spec);

// epsilon_j = lambda_j + (p_left + p_right) z_jj over the kept levels.
Eigen::VectorXd dressed_energies(const QrsSpectrum& spec, const Eigen::MatrixXd& z,
                                 double p_left, double p_right);

// One site of the chain: spectrum, element tables, shifted energies, and
// the qubit-operator tables the dissipator builder needs.
struct DressedSite {
    QrsParams params;
    QrsSpectrum spectrum;
    Eigen::MatrixXd chi;       // kept x kept
    Eigen::MatrixXd z;         // kept x kept
    Eigen::MatrixXd sigma_x;   // kept x kept dressed qubit sigma_x
    Eigen::MatrixXd sigma_z;   // kept x kept dressed qubit sigma_z
    Eigen::VectorXd epsilon;   // kept shifted energies
    double p_left = 0.0;
    double p_right = 0.0;

    int n_kept() const { return spectrum.n_kept; }
    double gap(int k, int j) const { return epsilon(k) - epsilon(j); }
};

DressedSite make_dressed_site(const QrsParams& params, int n_kept,
                              double p_left, double p_right);

// Parity-diagonal of the full product basis, entries (-1)^(n+q).
Eigen::VectorXd parity_diagonal(int n_fock);

} // namespace qrsim::rabi
